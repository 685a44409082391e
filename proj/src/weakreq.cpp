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

#include "tangletrs/weakreq.hpp"

#include <algorithm>
#include <cmath>

namespace tangletrs {

void encode(Encoder &e, WeakReqRequest const &r)
{
  encode(e, r.sender);
  encode(e, r.fee_total);
  e.u32(r.n_msg);
  encode(e, r.pob);
  e.u64(r.timer_interval).u32(r.attempt);
  encode(e, r.signature);
}

WeakReqRequest decode_request(Decoder &d)
{
  WeakReqRequest r;
  r.sender = decode_node_id(d);
  r.fee_total = decode_money(d);
  r.n_msg = d.u32();
  r.pob = decode_pob(d);
  r.timer_interval = d.u64();
  r.attempt = d.u32();
  r.signature = decode_signature(d);
  return r;
}

Bytes WeakReqRequest::signed_bytes() const
{
  Encoder e;
  encode(e, sender);
  encode(e, fee_total);
  e.u32(n_msg);
  encode(e, pob);
  e.u64(timer_interval).u32(attempt);
  return e.take();
}

Bytes WeakReqRequest::canonical_bytes() const
{
  Encoder e;
  encode(e, *this);
  return e.take();
}

HashDigest WeakReqRequest::id() const
{
  return sha3_512({as_bytes("tangletrs/weakreq"), canonical_bytes()});
}

WeakReqRequest WeakReqRequest::decode(ByteView bytes)
{
  Decoder d{bytes};
  auto r = decode_request(d);
  d.expect_done();
  return r;
}

std::string_view to_string(RequestFault f)
{
  switch (f)
  {
  case RequestFault::Ok: return "Ok";
  case RequestFault::Malformed: return "Malformed";
  case RequestFault::BadSignature: return "BadSignature";
  case RequestFault::FeeBelowMinimum: return "FeeBelowMinimum";
  case RequestFault::BadBurn: return "BadBurn";
  }
  return "Unknown";
}

RequestFault check_request(WeakReqRequest const &req, UtxoSet const &ledger,
                           WeakReqConfig const &config)
{
  if (req.n_msg == 0 || req.attempt == 0 || req.fee_total == Money{})
  {
    return RequestFault::Malformed;
  }
  if (!verify(req.sender, req.signed_bytes(), req.signature))
  {
    return RequestFault::BadSignature;
  }
  if (req.fee_total < config.min_fee_unit.times(req.n_msg))
  {
    return RequestFault::FeeBelowMinimum;
  }
  if (!verify_pob(req.pob, ledger, req.sender, config.burn_floor.times(req.n_msg)))
  {
    return RequestFault::BadBurn;
  }
  return RequestFault::Ok;
}

bool is_profitable(WeakReqRequest const &req, Money min_share)
{
  return req.n_msg > 0 && req.fee_total >= min_share.times(req.n_msg);
}

Money fee_share(Money fee_total, std::uint32_t n_msg, std::uint32_t index)
{
  if (n_msg == 0 || index == 0 || index > n_msg)
  {
    return Money{};
  }
  auto const base = fee_total.units() / n_msg;
  if (index < n_msg)
  {
    return Money{base};
  }
  return Money{fee_total.units() - base * (n_msg - 1)};
}

//------------------------------------------------------------------------------

namespace {

void encode_wrm_body(Encoder &e, WeakReqMessage const &m)
{
  encode(e, m.request);
  e.u32(m.index);
  encode(e, m.recipient_miner);
  encode(e, m.fee_share);
  e.bytes(m.payload);
  e.bytes(m.fee_bundle.canonical_bytes());
}

}  // namespace

Bytes WeakReqMessage::signed_bytes() const
{
  Encoder e;
  encode_wrm_body(e, *this);
  return e.take();
}

Bytes WeakReqMessage::canonical_bytes() const
{
  Encoder e;
  encode_wrm_body(e, *this);
  encode(e, signature);
  return e.take();
}

WeakReqMessage WeakReqMessage::decode(ByteView bytes)
{
  Decoder d{bytes};
  WeakReqMessage m;
  m.request = decode_digest(d);
  m.index = d.u32();
  m.recipient_miner = decode_node_id(d);
  m.fee_share = decode_money(d);
  m.payload = d.bytes();
  m.fee_bundle = Bundle::decode(d.bytes());
  m.signature = decode_signature(d);
  d.expect_done();
  return m;
}

PobBundle create_pob(KeyPair const &wallet, UtxoSet const &ledger, Money amount, std::uint64_t nonce)
{
  if (amount == Money{})
  {
    throw Error(Errc::InvalidArgument, "burn amount must be positive");
  }
  PobBundle out;
  out.bundle = build_payment(wallet, ledger, {TxOutput{burn_address(), amount, {}}}, nonce);
  out.pob = ProofOfBurn{out.bundle.id(), 0, amount};
  return out;
}

//------------------------------------------------------------------------------

WeakDevice::WeakDevice(KeyPair keys, WeakReqParams params, EscalationPolicy policy, ProofOfBurn pob)
  : keys_{std::move(keys)}
  , params_{params}
  , policy_{policy}
  , pob_{pob}
  , fee_{params.fee}
{
  if (params.n_msg == 0 || params.timer_ticks == 0)
  {
    throw Error(Errc::InvalidArgument, "n_msg and timer must be positive");
  }
}

WeakReqRequest WeakDevice::build_request()
{
  WeakReqRequest r;
  r.sender = keys_.id();
  r.fee_total = fee_;
  r.n_msg = params_.n_msg;
  r.pob = pob_;
  r.timer_interval = params_.timer_ticks;
  r.attempt = attempt_;
  r.signature = keys_.sign(r.signed_bytes());
  live_ = r.id();
  return r;
}

WeakReqRequest WeakDevice::start(std::uint64_t now)
{
  if (state_ != DeviceState::Idle)
  {
    throw Error(Errc::IllegalTransition, "device already started");
  }
  state_ = DeviceState::Waiting;
  attempt_ = 1;
  deadline_ = now + params_.timer_ticks;
  return build_request();
}

std::optional<WeakReqRequest> WeakDevice::on_tick(std::uint64_t now)
{
  if (state_ != DeviceState::Waiting || now < deadline_)
  {
    return std::nullopt;
  }
  if (attempt_ >= policy_.max_attempts || !(policy_.factor > 1.0))
  {
    state_ = DeviceState::Abandoned;
    return std::nullopt;
  }
  auto const scaled = static_cast<std::uint64_t>(
    std::ceil(static_cast<double>(fee_.units()) * policy_.factor));
  fee_ = Money{std::max(scaled, fee_.units() + 1)};
  superseded_.insert(*live_);
  ++attempt_;
  deadline_ = now + params_.timer_ticks;
  return build_request();
}

Errc WeakDevice::on_anchored(HashDigest const &request_id, NodeId const &miner)
{
  if (superseded_.contains(request_id))
  {
    return Errc::StaleRequest;
  }
  if (!live_ || request_id != *live_)
  {
    return Errc::UnknownMessage;
  }
  if (state_ != DeviceState::Waiting)
  {
    return Errc::StaleRequest;
  }
  state_ = DeviceState::Sending;
  miner_ = miner;
  return Errc::Ok;
}

WeakReqMessage WeakDevice::make_message(std::uint32_t index, Bytes payload, UtxoSet const &ledger)
{
  if (state_ != DeviceState::Sending || !miner_)
  {
    throw Error(Errc::IllegalTransition, "request not anchored");
  }
  if (index == 0 || index > params_.n_msg)
  {
    throw Error(Errc::InvalidArgument, "message index out of range");
  }
  WeakReqMessage m;
  m.request = *live_;
  m.index = index;
  m.recipient_miner = *miner_;
  m.fee_share = fee_share(fee_, params_.n_msg, index);
  m.payload = std::move(payload);
  m.fee_bundle = build_payment(keys_, ledger, {TxOutput{*miner_, m.fee_share, {}}}, ++bundle_nonce_);
  m.signature = keys_.sign(m.signed_bytes());
  return m;
}

void WeakDevice::on_ack(std::uint32_t)
{
  ++acked_;
  if (acked_ >= params_.n_msg)
  {
    state_ = DeviceState::Done;
  }
}

DeviceOutcome device_run(WeakDevice &device, Gateway &gateway,
                         std::function<Bytes(std::uint32_t)> const &payload_for)
{
  DeviceOutcome out;
  gateway.broadcast(device.start(gateway.now()));
  out.broadcasts = 1;

  while (device.state() == DeviceState::Waiting)
  {
    auto notice = gateway.wait_for_anchor(device.deadline());
    if (notice)
    {
      auto rc = device.on_anchored(notice->request, notice->miner);
      if (rc == Errc::StaleRequest)
      {
        ++out.stale_notices;
      }
      continue;
    }
    if (auto next = device.on_tick(gateway.now()))
    {
      gateway.broadcast(*next);
      ++out.broadcasts;
    }
  }

  out.final_fee = device.current_fee();
  if (device.state() == DeviceState::Abandoned)
  {
    out.status = Errc::Abandoned;
    return out;
  }
  out.miner = device.miner();
  for (std::uint32_t i = 1; i <= device.n_msg(); ++i)
  {
    auto msg = device.make_message(i, payload_for(i), gateway.ledger());
    if (gateway.deliver(msg))
    {
      device.on_ack(i);
      ++out.acknowledged;
    }
  }
  return out;
}

//------------------------------------------------------------------------------

std::string_view to_string(ServeFault f)
{
  switch (f)
  {
  case ServeFault::Ok: return "Ok";
  case ServeFault::UnknownRequest: return "UnknownRequest";
  case ServeFault::BadIndex: return "BadIndex";
  case ServeFault::OverQuota: return "OverQuota";
  case ServeFault::WrongMiner: return "WrongMiner";
  case ServeFault::BadSignature: return "BadSignature";
  case ServeFault::UnderpaidShare: return "UnderpaidShare";
  }
  return "Unknown";
}

void WeakReqService::on_anchored(WeakReqRequest const &req)
{
  anchored_.try_emplace(req.id(), Anchored{req, {}});
}

std::uint32_t WeakReqService::served(HashDigest const &request_id) const
{
  auto it = anchored_.find(request_id);
  return it == anchored_.end() ? 0 : static_cast<std::uint32_t>(it->second.served.size());
}

ServeResult WeakReqService::serve(MessageAuthor &miner, WeakReqMessage const &msg, UtxoSet &ledger,
                                  TangleState &tangle, Rng &rng, std::uint64_t now,
                                  unsigned pow_bits)
{
  auto it = anchored_.find(msg.request);
  if (it == anchored_.end())
  {
    return {ServeFault::UnknownRequest, std::nullopt};
  }
  auto &entry = it->second;
  auto const &req = entry.request;
  if (msg.recipient_miner != miner.id())
  {
    return {ServeFault::WrongMiner, std::nullopt};
  }
  if (!verify(req.sender, msg.signed_bytes(), msg.signature))
  {
    return {ServeFault::BadSignature, std::nullopt};
  }
  if (msg.index > req.n_msg)
  {
    return {ServeFault::OverQuota, std::nullopt};
  }
  if (msg.index == 0 || entry.served.contains(msg.index))
  {
    return {ServeFault::BadIndex, std::nullopt};
  }

  auto const expected = fee_share(req.fee_total, req.n_msg, msg.index);
  if (msg.fee_share != expected || !ledger.validate(msg.fee_bundle).ok())
  {
    return {ServeFault::UnderpaidShare, std::nullopt};
  }
  bool pays = false;
  for (auto const &out : msg.fee_bundle.outputs)
  {
    pays |= out.owner == miner.id() && out.releasers.empty() && out.amount >= expected;
  }
  if (!pays)
  {
    return {ServeFault::UnderpaidShare, std::nullopt};
  }

  MessageDraft draft;
  draft.kind = MessageKind::WeakReqAttached;
  draft.parents = tangle.select_tips(rng);
  draft.payload_type = PayloadType::WeakReq;
  draft.payload = msg.canonical_bytes();
  draft.spends = msg.fee_bundle.inputs;
  draft.timestamp = now;
  auto attached = miner.emit(std::move(draft), pow_bits);
  auto rc = tangle.try_attach(attached);
  if (rc != Errc::Ok)
  {
    throw Error(rc, "attaching served WeakReq message");
  }
  ledger.apply(msg.fee_bundle);
  collected_ += expected;
  entry.served.insert(msg.index);
  return {ServeFault::Ok, std::move(attached)};
}

std::optional<WeakReqMessage> carried_weakreq(TangleMessage const &msg)
{
  if (msg.kind != MessageKind::WeakReqAttached || msg.payload_type != PayloadType::WeakReq)
  {
    return std::nullopt;
  }
  try
  {
    return WeakReqMessage::decode(msg.payload);
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

}  // namespace tangletrs
