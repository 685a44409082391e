// Copyright 2026 The tangletrs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tangletrs/trade.hpp"

#include <algorithm>

namespace tangletrs {

NodeId escrow_address(HashDigest const &session_id)
{
  return NodeId{sha3_512({as_bytes("tangletrs/escrow"), session_id.view()})};
}

namespace {

void encode_output(Encoder &e, TxOutput const &o)
{
  encode(e, o.owner);
  encode(e, o.amount);
  e.u32(static_cast<std::uint32_t>(o.releasers.size()));
  for (auto const &r : o.releasers)
  {
    encode(e, r);
  }
}

TxOutput decode_output(Decoder &d)
{
  TxOutput o;
  o.owner = decode_node_id(d);
  o.amount = decode_money(d);
  auto n = d.count(16);
  for (std::uint32_t i = 0; i < n; ++i)
  {
    o.releasers.push_back(decode_node_id(d));
  }
  return o;
}

void encode_bundle_body(Encoder &e, Bundle const &b)
{
  e.u32(static_cast<std::uint32_t>(b.inputs.size()));
  for (auto const &in : b.inputs)
  {
    encode(e, in);
  }
  e.u32(static_cast<std::uint32_t>(b.outputs.size()));
  for (auto const &out : b.outputs)
  {
    encode_output(e, out);
  }
  e.u64(b.nonce);
}

template <class T>
void encode_optional_digest(Encoder &e, std::optional<T> const &v)
{
  e.boolean(v.has_value());
  if (v)
  {
    encode(e, *v);
  }
}

std::optional<HashDigest> decode_optional_digest(Decoder &d)
{
  if (!d.boolean())
  {
    return std::nullopt;
  }
  return decode_digest(d);
}

std::optional<NodeId> decode_optional_node(Decoder &d)
{
  if (!d.boolean())
  {
    return std::nullopt;
  }
  return decode_node_id(d);
}

bool contains_id(std::vector<NodeId> const &v, NodeId const &id)
{
  return std::find(v.begin(), v.end(), id) != v.end();
}

}  // namespace

Bytes Bundle::body_bytes() const
{
  Encoder e;
  encode_bundle_body(e, *this);
  return e.take();
}

Bytes Bundle::canonical_bytes() const
{
  Encoder e;
  encode_bundle_body(e, *this);
  e.u32(static_cast<std::uint32_t>(signatures.size()));
  for (auto const &s : signatures)
  {
    encode(e, s);
  }
  return e.take();
}

HashDigest Bundle::id() const
{
  return sha3_512({as_bytes("tangletrs/bundle"), body_bytes()});
}

Bundle Bundle::decode(ByteView bytes)
{
  Decoder d{bytes};
  Bundle b;
  auto ni = d.count(1024);
  for (std::uint32_t i = 0; i < ni; ++i)
  {
    b.inputs.push_back(decode_output_ref(d));
  }
  auto no = d.count(1024);
  for (std::uint32_t i = 0; i < no; ++i)
  {
    b.outputs.push_back(decode_output(d));
  }
  b.nonce = d.u64();
  auto ns = d.count(1024);
  for (std::uint32_t i = 0; i < ns; ++i)
  {
    b.signatures.push_back(decode_signature(d));
  }
  d.expect_done();
  return b;
}

std::string_view to_string(BundleFault f)
{
  switch (f)
  {
  case BundleFault::Ok: return "Ok";
  case BundleFault::Malformed: return "Malformed";
  case BundleFault::InputUnknown: return "InputUnknown";
  case BundleFault::InputSpent: return "InputSpent";
  case BundleFault::Unspendable: return "Unspendable";
  case BundleFault::BadSignature: return "BadSignature";
  case BundleFault::ValueOverdraw: return "ValueOverdraw";
  }
  return "Unknown";
}

bool may_spend(TxOutput const &out, NodeId const &who)
{
  if (!out.releasers.empty())
  {
    return contains_id(out.releasers, who);
  }
  return !out.owner.is_zero() && out.owner == who;
}

//------------------------------------------------------------------------------

OutputRef UtxoSet::mint(NodeId const &owner, Money amount, HashDigest const &tag)
{
  OutputRef ref{tag, 0};
  if (archive_.contains(ref))
  {
    throw Error(Errc::InvalidArgument, "mint tag reused");
  }
  archive_.emplace(ref, TxOutput{owner, amount, {}});
  holders_[owner].insert(ref);
  payers_.emplace(tag, owner);
  minted_ += amount;
  circulating_ += amount;
  return ref;
}

BundleVerdict UtxoSet::validate(Bundle const &bundle) const
{
  if (bundle.inputs.empty() || bundle.outputs.empty() ||
      bundle.signatures.size() != bundle.inputs.size())
  {
    return {BundleFault::Malformed, 0};
  }
  std::set<OutputRef> seen;
  for (std::size_t i = 0; i < bundle.inputs.size(); ++i)
  {
    if (!seen.insert(bundle.inputs[i]).second)
    {
      return {BundleFault::Malformed, i};
    }
  }
  for (auto const &out : bundle.outputs)
  {
    if (out.amount == Money{})
    {
      return {BundleFault::Malformed, 0};
    }
  }
  if (has_bundle(bundle.id()))
  {
    return {BundleFault::InputSpent, 0};
  }

  auto const body = bundle.body_bytes();
  Money in{};
  for (std::size_t i = 0; i < bundle.inputs.size(); ++i)
  {
    auto const &ref = bundle.inputs[i];
    if (spent_.contains(ref))
    {
      return {BundleFault::InputSpent, i};
    }
    auto it = archive_.find(ref);
    if (it == archive_.end())
    {
      return {BundleFault::InputUnknown, i};
    }
    auto const &out = it->second;
    if (out.releasers.empty() && out.owner.is_zero())
    {
      return {BundleFault::Unspendable, i};
    }
    auto const &sig = bundle.signatures[i];
    auto const signer = NodeId::from_public_key(sig.public_key);
    if (!may_spend(out, signer) || !verify(signer, body, sig))
    {
      return {BundleFault::BadSignature, i};
    }
    in += out.amount;
  }
  Money out_total{};
  for (auto const &out : bundle.outputs)
  {
    out_total += out.amount;
  }
  if (out_total > in)
  {
    return {BundleFault::ValueOverdraw, 0};
  }
  return {};
}

void UtxoSet::apply(Bundle const &bundle)
{
  auto verdict = validate(bundle);
  if (!verdict.ok())
  {
    throw Error(Errc::InvalidArgument, std::string{"bundle rejected: "} + std::string{to_string(verdict.fault)});
  }
  auto const id = bundle.id();
  Money in{};
  for (auto const &ref : bundle.inputs)
  {
    auto const &out = archive_.at(ref);
    in += out.amount;
    spent_.emplace(ref, id);
    holders_[out.owner].erase(ref);
    for (auto const &r : out.releasers)
    {
      holders_[r].erase(ref);
    }
  }
  circulating_ -= in;
  Money out_total{};
  for (std::size_t i = 0; i < bundle.outputs.size(); ++i)
  {
    auto const &out = bundle.outputs[i];
    OutputRef ref{id, static_cast<std::uint32_t>(i)};
    archive_.emplace(ref, out);
    holders_[out.owner].insert(ref);
    for (auto const &r : out.releasers)
    {
      holders_[r].insert(ref);
    }
    out_total += out.amount;
    if (out.owner.is_zero() && out.releasers.empty())
    {
      burned_ += out.amount;
    }
    else
    {
      circulating_ += out.amount;
    }
  }
  fees_ += in - out_total;
  payers_.emplace(id, NodeId::from_public_key(bundle.signatures.front().public_key));
}

std::optional<TxOutput> UtxoSet::output(OutputRef const &ref) const
{
  auto it = archive_.find(ref);
  if (it == archive_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::optional<HashDigest> UtxoSet::spent_by(OutputRef const &ref) const
{
  auto it = spent_.find(ref);
  if (it == spent_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::optional<NodeId> UtxoSet::payer(HashDigest const &bundle_id) const
{
  auto it = payers_.find(bundle_id);
  if (it == payers_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

Money UtxoSet::balance(NodeId const &owner) const
{
  Money total{};
  auto it = holders_.find(owner);
  if (it == holders_.end())
  {
    return total;
  }
  for (auto const &ref : it->second)
  {
    auto const &out = archive_.at(ref);
    if (out.owner == owner)
    {
      total += out.amount;
    }
  }
  return total;
}

std::vector<std::pair<OutputRef, TxOutput>> UtxoSet::spendable_by(NodeId const &who) const
{
  std::vector<std::pair<OutputRef, TxOutput>> out;
  auto it = holders_.find(who);
  if (it == holders_.end())
  {
    return out;
  }
  for (auto const &ref : it->second)
  {
    auto const &o = archive_.at(ref);
    if (may_spend(o, who))
    {
      out.emplace_back(ref, o);
    }
  }
  return out;
}

//------------------------------------------------------------------------------

Bundle build_spend(KeyPair const &signer, std::vector<OutputRef> inputs,
                   std::vector<TxOutput> outputs, std::uint64_t nonce)
{
  Bundle b;
  b.inputs = std::move(inputs);
  b.outputs = std::move(outputs);
  b.nonce = nonce;
  auto body = b.body_bytes();
  for (std::size_t i = 0; i < b.inputs.size(); ++i)
  {
    b.signatures.push_back(signer.sign(body));
  }
  return b;
}

Bundle build_payment(KeyPair const &who, UtxoSet const &ledger, std::vector<TxOutput> payments,
                     std::uint64_t nonce)
{
  Money needed{};
  for (auto const &p : payments)
  {
    needed += p.amount;
  }
  std::vector<OutputRef> inputs;
  Money gathered{};
  for (auto const &[ref, out] : ledger.spendable_by(who.id()))
  {
    if (gathered >= needed && !inputs.empty())
    {
      break;
    }
    if (out.owner != who.id())
    {
      continue;  // escrow the caller merely co-controls
    }
    inputs.push_back(ref);
    gathered += out.amount;
  }
  if (inputs.empty() || gathered < needed)
  {
    throw Error(Errc::InsufficientFunds, std::to_string(gathered.units()) + " < " +
                                             std::to_string(needed.units()));
  }
  if (gathered > needed)
  {
    payments.push_back(TxOutput{who.id(), gathered - needed, {}});
  }
  return build_spend(who, std::move(inputs), std::move(payments), nonce);
}

MessageDraft bundle_draft(Bundle const &bundle)
{
  MessageDraft d;
  d.payload_type = PayloadType::Bundle;
  d.payload = bundle.canonical_bytes();
  d.spends = bundle.inputs;
  return d;
}

//------------------------------------------------------------------------------

void encode(Encoder &e, ProofOfBurn const &p)
{
  encode(e, p.bundle);
  e.u32(p.output_index);
  encode(e, p.amount);
}

ProofOfBurn decode_pob(Decoder &d)
{
  ProofOfBurn p;
  p.bundle = decode_digest(d);
  p.output_index = d.u32();
  p.amount = decode_money(d);
  return p;
}

bool verify_pob(ProofOfBurn const &pob, UtxoSet const &ledger, NodeId const &owner, Money floor)
{
  auto out = ledger.output(pob.output());
  if (!out || !out->owner.is_zero() || !out->releasers.empty())
  {
    return false;
  }
  if (out->amount != pob.amount || pob.amount < floor)
  {
    return false;
  }
  auto payer = ledger.payer(pob.bundle);
  return payer && *payer == owner;
}

//------------------------------------------------------------------------------

namespace {

void encode_initial_body(Encoder &e, InitialMessage const &m)
{
  encode(e, m.sender);
  e.str(m.service_descriptor).str(m.content_pointer);
  e.boolean(m.pob.has_value());
  if (m.pob)
  {
    encode(e, *m.pob);
  }
}

}  // namespace

Bytes InitialMessage::body_bytes() const
{
  Encoder e;
  encode_initial_body(e, *this);
  return e.take();
}

Bytes InitialMessage::signed_bytes() const
{
  Encoder e;
  encode_initial_body(e, *this);
  encode(e, pow);
  return e.take();
}

Bytes InitialMessage::canonical_bytes() const
{
  Encoder e;
  encode_initial_body(e, *this);
  encode(e, pow);
  encode(e, signature);
  return e.take();
}

InitialMessage InitialMessage::decode(ByteView bytes)
{
  Decoder d{bytes};
  InitialMessage m;
  m.sender = decode_node_id(d);
  m.service_descriptor = d.str();
  m.content_pointer = d.str();
  if (d.boolean())
  {
    m.pob = decode_pob(d);
  }
  m.pow = decode_pow(d);
  m.signature = decode_signature(d);
  d.expect_done();
  return m;
}

InitialMessage make_initial(KeyPair const &keys, std::string service, std::string pointer,
                            std::optional<ProofOfBurn> pob, unsigned pow_bits)
{
  InitialMessage m;
  m.sender = keys.id();
  m.service_descriptor = std::move(service);
  m.content_pointer = std::move(pointer);
  m.pob = pob;
  m.pow = pow_solve(m.body_bytes(), pow_bits).solution;
  m.signature = keys.sign(m.signed_bytes());
  return m;
}

Errc Directory::register_initial(InitialMessage const &msg, UtxoSet const &ledger)
{
  if (!verify(msg.sender, msg.signed_bytes(), msg.signature))
  {
    return Errc::BadSignature;
  }
  if (msg.pow.difficulty_bits < policy_.pow_bits || !pow_verify(msg.body_bytes(), msg.pow))
  {
    return Errc::WeakOnboarding;
  }
  if (!msg.pob || !verify_pob(*msg.pob, ledger, msg.sender, policy_.burn_floor) ||
      used_burns_.contains(msg.pob->output()))
  {
    return Errc::WeakOnboarding;
  }
  if (entries_.contains(msg.sender))
  {
    return Errc::DuplicateIdentity;
  }
  used_burns_.insert(msg.pob->output());
  entries_.emplace(msg.sender, Registration{msg.sender, msg.service_descriptor, msg.content_pointer,
                                            msg.pob->amount, msg.pow.difficulty_bits});
  return Errc::Ok;
}

Registration const *Directory::find(NodeId const &id) const
{
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<NodeId> Directory::providers(std::string const &service) const
{
  std::vector<NodeId> out;
  for (auto const &[id, reg] : entries_)
  {
    if (reg.service_descriptor == service)
    {
      out.push_back(id);
    }
  }
  return out;
}

//------------------------------------------------------------------------------

std::string_view to_string(TradeState s)
{
  switch (s)
  {
  case TradeState::Requested: return "Requested";
  case TradeState::Acked: return "Acked";
  case TradeState::MediatorProposed: return "MediatorProposed";
  case TradeState::MediatorChosen: return "MediatorChosen";
  case TradeState::FundsLocked: return "FundsLocked";
  case TradeState::Delivered: return "Delivered";
  case TradeState::Complained: return "Complained";
  case TradeState::MediatorReleased: return "MediatorReleased";
  case TradeState::BuyerReleased: return "BuyerReleased";
  case TradeState::Reviewed: return "Reviewed";
  case TradeState::Denied: return "Denied";
  case TradeState::Expired: return "Expired";
  }
  return "Unknown";
}

std::string_view to_string(TradeAction a)
{
  switch (a)
  {
  case TradeAction::Request: return "Request";
  case TradeAction::Ack: return "Ack";
  case TradeAction::Deny: return "Deny";
  case TradeAction::ProposeMediators: return "ProposeMediators";
  case TradeAction::ChooseMediator: return "ChooseMediator";
  case TradeAction::LockFunds: return "LockFunds";
  case TradeAction::Deliver: return "Deliver";
  case TradeAction::Release: return "Release";
  case TradeAction::Complain: return "Complain";
  case TradeAction::MediatorDecide: return "MediatorDecide";
  case TradeAction::Timeout: return "Timeout";
  case TradeAction::Review: return "Review";
  }
  return "Unknown";
}

namespace {

void encode_event_body(Encoder &e, TradeEvent const &ev)
{
  encode(e, ev.session);
  e.u8(static_cast<std::uint8_t>(ev.action));
  encode(e, ev.actor);
  e.u64(ev.tick);
  encode(e, ev.counterparty);
  encode(e, ev.amount);
  e.boolean(ev.nofeedback);
  e.u32(static_cast<std::uint32_t>(ev.mediators.size()));
  for (auto const &m : ev.mediators)
  {
    encode(e, m);
  }
  encode_optional_digest(e, ev.pick);
  encode_optional_digest(e, ev.bundle);
  e.boolean(ev.to_seller);
}

}  // namespace

Bytes TradeEvent::signed_bytes() const
{
  Encoder e;
  encode_event_body(e, *this);
  return e.take();
}

Bytes TradeEvent::canonical_bytes() const
{
  Encoder e;
  encode_event_body(e, *this);
  encode(e, signature);
  return e.take();
}

TradeEvent TradeEvent::decode(ByteView bytes)
{
  Decoder d{bytes};
  TradeEvent ev;
  ev.session = decode_digest(d);
  auto action = d.u8();
  if (action > static_cast<std::uint8_t>(TradeAction::Review))
  {
    throw DecodeError("unknown trade action");
  }
  ev.action = static_cast<TradeAction>(action);
  ev.actor = decode_node_id(d);
  ev.tick = d.u64();
  ev.counterparty = decode_node_id(d);
  ev.amount = decode_money(d);
  ev.nofeedback = d.boolean();
  auto n = d.count(64);
  for (std::uint32_t i = 0; i < n; ++i)
  {
    ev.mediators.push_back(decode_node_id(d));
  }
  ev.pick = decode_optional_node(d);
  ev.bundle = decode_optional_digest(d);
  ev.to_seller = d.boolean();
  ev.signature = decode_signature(d);
  d.expect_done();
  return ev;
}

TradeEvent sign_event(KeyPair const &keys, TradeEvent ev)
{
  ev.actor = keys.id();
  ev.signature = keys.sign(ev.signed_bytes());
  return ev;
}

namespace {

std::vector<NodeId> escrow_releasers(TradeSession const &s)
{
  std::vector<NodeId> r{s.buyer};
  if (s.mediator)
  {
    r.push_back(*s.mediator);
  }
  return r;
}

/// The escrow was consumed by `bundle`, which pays `recipient` at least the price.
bool disbursed_to(UtxoSet const &ledger, TradeSession const &s, HashDigest const &bundle,
                  NodeId const &recipient)
{
  if (!s.escrow || ledger.spent_by(*s.escrow) != bundle)
  {
    return false;
  }
  for (std::uint32_t i = 0;; ++i)
  {
    auto out = ledger.output(OutputRef{bundle, i});
    if (!out)
    {
      return false;
    }
    if (out->owner == recipient && out->releasers.empty() && out->amount >= s.price)
    {
      return true;
    }
  }
}

std::optional<OutputRef> find_escrow(UtxoSet const &ledger, TradeSession const &s,
                                     HashDigest const &bundle)
{
  auto const addr = escrow_address(s.id);
  auto const releasers = escrow_releasers(s);
  for (std::uint32_t i = 0;; ++i)
  {
    OutputRef ref{bundle, i};
    auto out = ledger.output(ref);
    if (!out)
    {
      return std::nullopt;
    }
    if (out->owner == addr && out->amount >= s.price && out->releasers == releasers)
    {
      return ref;
    }
  }
}

}  // namespace

Errc trade_step(TradeSession &s, TradeEvent const &ev, TradePolicy const &policy,
                UtxoSet const *ledger)
{
  if (ev.session != s.id)
  {
    return Errc::InvalidArgument;
  }
  if (!verify(ev.actor, ev.signed_bytes(), ev.signature))
  {
    return Errc::BadSignature;
  }

  auto const from = s.state;
  TradeSession next = s;
  auto require = [&](NodeId const &who) { return ev.actor == who; };
  bool const is_party = ev.actor == s.buyer || ev.actor == s.seller;

  if (ev.action == TradeAction::Timeout)
  {
    switch (from)
    {
    case TradeState::Requested:
    case TradeState::Acked:
    case TradeState::MediatorProposed:
    case TradeState::MediatorChosen:
    case TradeState::FundsLocked:
      break;
    default:
      return Errc::IllegalTransition;
    }
    if (!is_party)
    {
      return Errc::UnauthorizedRole;
    }
    if (ev.tick < s.opened_tick + policy.timeout_ticks)
    {
      return Errc::IllegalTransition;
    }
    if (from == TradeState::FundsLocked)
    {
      if (!ev.bundle || (ledger && !disbursed_to(*ledger, s, *ev.bundle, s.buyer)))
      {
        return Errc::NoPayment;
      }
      next.payment = ev.bundle;
      next.paid_seller = false;
    }
    next.state = TradeState::Expired;
  }
  else
  {
    switch (from)
    {
    case TradeState::Requested:
      if (ev.action == TradeAction::Ack && !s.uses_mediator())
      {
        if (!require(s.seller))
        {
          return Errc::UnauthorizedRole;
        }
        next.state = TradeState::Acked;
        next.seller_acked = true;
        next.nofeedback = ev.nofeedback;
      }
      else if (ev.action == TradeAction::ProposeMediators && s.uses_mediator())
      {
        if (!require(s.seller))
        {
          return Errc::UnauthorizedRole;
        }
        if (ev.mediators.empty())
        {
          return Errc::InvalidArgument;
        }
        next.state = TradeState::MediatorProposed;
        next.seller_acked = true;
        next.nofeedback = ev.nofeedback;
        next.seller_mediators = ev.mediators;
      }
      else if (ev.action == TradeAction::Deny)
      {
        if (!require(s.seller))
        {
          return Errc::UnauthorizedRole;
        }
        next.state = TradeState::Denied;
      }
      else
      {
        return Errc::IllegalTransition;
      }
      break;

    case TradeState::MediatorProposed:
      if (ev.action == TradeAction::ChooseMediator)
      {
        if (!require(s.buyer))
        {
          return Errc::UnauthorizedRole;
        }
        if (!ev.pick || !contains_id(s.buyer_mediators, *ev.pick) ||
            !contains_id(s.seller_mediators, *ev.pick))
        {
          return Errc::MediatorNotInIntersection;
        }
        next.state = TradeState::MediatorChosen;
        next.mediator = ev.pick;
      }
      else
      {
        return Errc::IllegalTransition;
      }
      break;

    case TradeState::Acked:
    case TradeState::MediatorChosen:
      if (ev.action != TradeAction::LockFunds)
      {
        return Errc::IllegalTransition;
      }
      if (!require(s.buyer))
      {
        return Errc::UnauthorizedRole;
      }
      if (!ev.bundle)
      {
        return Errc::NoPayment;
      }
      if (ledger)
      {
        auto ref = find_escrow(*ledger, s, *ev.bundle);
        if (!ref || ledger->is_spent(*ref))
        {
          return Errc::NoPayment;
        }
        next.escrow = ref;
      }
      else
      {
        next.escrow = OutputRef{*ev.bundle, 0};
      }
      next.state = TradeState::FundsLocked;
      break;

    case TradeState::FundsLocked:
    case TradeState::Delivered:
      if (ev.action == TradeAction::Deliver && from == TradeState::FundsLocked)
      {
        if (!require(s.seller))
        {
          return Errc::UnauthorizedRole;
        }
        next.state = TradeState::Delivered;
      }
      else if (ev.action == TradeAction::Release && from == TradeState::Delivered)
      {
        if (!require(s.buyer))
        {
          return Errc::UnauthorizedRole;
        }
        if (!ev.bundle || (ledger && !disbursed_to(*ledger, s, *ev.bundle, s.seller)))
        {
          return Errc::NoPayment;
        }
        next.state = TradeState::BuyerReleased;
        next.payment = ev.bundle;
        next.paid_seller = true;
      }
      else if (ev.action == TradeAction::Complain)
      {
        if (!is_party)
        {
          return Errc::UnauthorizedRole;
        }
        if (!s.mediator)
        {
          return Errc::IllegalTransition;
        }
        next.state = TradeState::Complained;
      }
      else
      {
        return Errc::IllegalTransition;
      }
      break;

    case TradeState::Complained:
      if (ev.action != TradeAction::MediatorDecide)
      {
        return Errc::IllegalTransition;
      }
      if (!s.mediator || !require(*s.mediator))
      {
        return Errc::UnauthorizedRole;
      }
      if (!ev.bundle ||
          (ledger && !disbursed_to(*ledger, s, *ev.bundle, ev.to_seller ? s.seller : s.buyer)))
      {
        return Errc::NoPayment;
      }
      next.state = TradeState::MediatorReleased;
      next.payment = ev.bundle;
      next.paid_seller = ev.to_seller;
      break;

    default:
      return Errc::IllegalTransition;
    }
  }

  next.log.push_back(TransitionRecord{ev.tick, ev.action, ev.actor, from, next.state});
  s = std::move(next);
  return Errc::Ok;
}

HashDigest session_id(TradeEvent const &request)
{
  return sha3_512({as_bytes("tangletrs/session"), request.signed_bytes()});
}

HashDigest TradeBook::open(TradeEvent const &request)
{
  if (request.action != TradeAction::Request || !request.session.is_zero())
  {
    throw Error(Errc::IllegalTransition, "session must open with a Request");
  }
  if (!verify(request.actor, request.signed_bytes(), request.signature))
  {
    throw Error(Errc::BadSignature, "trade request");
  }
  if (request.actor == request.counterparty || request.amount == Money{})
  {
    throw Error(Errc::InvalidArgument, "trade request");
  }
  TradeSession s;
  s.id = session_id(request);
  if (sessions_.contains(s.id))
  {
    throw Error(Errc::StaleSeqNo, "duplicate trade request");
  }
  s.buyer = request.actor;
  s.seller = request.counterparty;
  s.price = request.amount;
  s.buyer_mediators = request.mediators;
  s.opened_tick = request.tick;
  s.log.push_back(
    TransitionRecord{request.tick, TradeAction::Request, request.actor, TradeState::Requested,
                     TradeState::Requested});
  auto id = s.id;
  sessions_.emplace(id, std::move(s));
  return id;
}

Errc TradeBook::step(TradeEvent const &event, UtxoSet const *ledger)
{
  auto it = sessions_.find(event.session);
  if (it == sessions_.end())
  {
    return Errc::UnknownMessage;
  }
  return trade_step(it->second, event, policy_, ledger);
}

TradeSession const *TradeBook::find(HashDigest const &id) const
{
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : &it->second;
}

//------------------------------------------------------------------------------

namespace {

void encode_feedback_body(Encoder &e, Feedback const &f)
{
  encode(e, f.trade);
  encode(e, f.rater);
  encode(e, f.subject);
  e.u32(f.rating_milli);
  encode_optional_digest(e, f.payment);
  encode(e, f.amount);
}

}  // namespace

Bytes Feedback::signed_bytes() const
{
  Encoder e;
  encode_feedback_body(e, *this);
  return e.take();
}

Bytes Feedback::canonical_bytes() const
{
  Encoder e;
  encode_feedback_body(e, *this);
  encode(e, signature);
  return e.take();
}

Feedback Feedback::decode(ByteView bytes)
{
  Decoder d{bytes};
  Feedback f;
  f.trade = decode_digest(d);
  f.rater = decode_node_id(d);
  f.subject = decode_node_id(d);
  f.rating_milli = d.u32();
  f.payment = decode_optional_digest(d);
  f.amount = decode_money(d);
  f.signature = decode_signature(d);
  d.expect_done();
  return f;
}

Feedback make_feedback(KeyPair const &rater, HashDigest trade, NodeId subject,
                       std::uint32_t rating_milli, std::optional<HashDigest> payment, Money amount)
{
  Feedback f;
  f.trade = trade;
  f.rater = rater.id();
  f.subject = subject;
  f.rating_milli = rating_milli;
  f.payment = payment;
  f.amount = amount;
  f.signature = rater.sign(f.signed_bytes());
  return f;
}

Errc TradeBook::submit_feedback(Feedback const &fb)
{
  if (!verify(fb.rater, fb.signed_bytes(), fb.signature))
  {
    return Errc::BadSignature;
  }
  if (fb.rating_milli > 1000)
  {
    return Errc::InvalidArgument;
  }
  if (!policy_.require_coupling)
  {
    feedback_.push_back(fb);
    return Errc::Ok;
  }

  auto it = sessions_.find(fb.trade);
  if (it == sessions_.end())
  {
    return Errc::SellerNeverAcked;
  }
  auto &s = it->second;
  if (fb.rater != s.buyer)
  {
    return Errc::UnauthorizedRole;
  }
  if (fb.subject != s.seller)
  {
    return Errc::InvalidArgument;
  }
  if (!s.seller_acked)
  {
    return Errc::SellerNeverAcked;
  }
  if (s.state == TradeState::Reviewed)
  {
    return Errc::BallotStuffing;
  }
  if (s.nofeedback)
  {
    return Errc::IllegalTransition;
  }
  if (!s.escrow)
  {
    return Errc::NoPayment;
  }
  if (!s.released())
  {
    return Errc::IllegalTransition;
  }
  if (fb.payment != s.payment || fb.amount != s.price)
  {
    return Errc::NoPayment;
  }
  s.log.push_back(TransitionRecord{s.log.back().tick, TradeAction::Review, fb.rater, s.state,
                                   TradeState::Reviewed});
  s.state = TradeState::Reviewed;
  feedback_.push_back(fb);
  return Errc::Ok;
}

Bundle build_lock(KeyPair const &buyer, UtxoSet const &ledger, TradeSession const &session,
                  std::uint64_t nonce)
{
  return build_payment(buyer, ledger,
                       {TxOutput{escrow_address(session.id), session.price, escrow_releasers(session)}},
                       nonce);
}

Bundle build_release(KeyPair const &releaser, TradeSession const &session, bool to_seller,
                     std::uint64_t nonce)
{
  if (!session.escrow)
  {
    throw Error(Errc::NoPayment, "session has no escrow");
  }
  return build_spend(releaser, {*session.escrow},
                     {TxOutput{to_seller ? session.seller : session.buyer, session.price, {}}}, nonce);
}

//------------------------------------------------------------------------------

MessageDraft initial_draft(InitialMessage const &msg)
{
  MessageDraft d;
  d.payload_type = PayloadType::Initial;
  d.payload = msg.canonical_bytes();
  return d;
}

namespace {

MessageDraft rep_draft(RepRecord record, Bytes body)
{
  MessageDraft d;
  d.payload_type = PayloadType::Rep;
  d.payload.reserve(body.size() + 1);
  d.payload.push_back(static_cast<std::uint8_t>(record));
  d.payload.insert(d.payload.end(), body.begin(), body.end());
  return d;
}

template <class T>
std::optional<T> decode_rep(TangleMessage const &msg, RepRecord record)
{
  if (msg.payload_type != PayloadType::Rep || msg.payload.empty() ||
      msg.payload.front() != static_cast<std::uint8_t>(record))
  {
    return std::nullopt;
  }
  try
  {
    return T::decode(ByteView{msg.payload}.subspan(1));
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

}  // namespace

MessageDraft event_draft(TradeEvent const &event)
{
  return rep_draft(RepRecord::Event, event.canonical_bytes());
}

MessageDraft feedback_draft(Feedback const &fb)
{
  return rep_draft(RepRecord::Feedback, fb.canonical_bytes());
}

std::optional<Bundle> carried_bundle(TangleMessage const &msg)
{
  if (msg.payload_type != PayloadType::Bundle)
  {
    return std::nullopt;
  }
  try
  {
    return Bundle::decode(msg.payload);
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

std::optional<InitialMessage> carried_initial(TangleMessage const &msg)
{
  if (msg.payload_type != PayloadType::Initial)
  {
    return std::nullopt;
  }
  try
  {
    return InitialMessage::decode(msg.payload);
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

std::optional<TradeEvent> carried_event(TangleMessage const &msg)
{
  return decode_rep<TradeEvent>(msg, RepRecord::Event);
}

std::optional<Feedback> carried_feedback(TangleMessage const &msg)
{
  return decode_rep<Feedback>(msg, RepRecord::Feedback);
}

}  // namespace tangletrs
