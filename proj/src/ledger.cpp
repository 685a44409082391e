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

#include "tangletrs/ledger.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace tangletrs {

void write_snapshot(std::ostream &out, TangleState const &tangle, ChainState const &chain)
{
  out << kSnapshotHeader << '\n';
  for (auto const &id : tangle.attachment_order())
  {
    if (id == tangle.genesis_id())
    {
      continue;
    }
    out << "M " << to_hex(tangle.message(id).canonical_bytes()) << '\n';
  }
  for (auto const &id : chain.insertion_order())
  {
    if (id == chain.genesis_id())
    {
      continue;
    }
    out << "B " << to_hex(chain.block(id).canonical_bytes()) << '\n';
  }
}

void save_snapshot(std::filesystem::path const &path, TangleState const &tangle,
                   ChainState const &chain)
{
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  if (!out)
  {
    throw Error(Errc::IoFailure, "cannot write " + path.string());
  }
  write_snapshot(out, tangle, chain);
  if (!out)
  {
    throw Error(Errc::IoFailure, "write failed: " + path.string());
  }
}

LedgerSnapshot read_snapshot(std::istream &in, TangleConfig config)
{
  LedgerSnapshot ledger{TangleState{config}, ChainState{}};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](std::string const &why) {
    throw Error(Errc::InvalidArgument, "snapshot line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    if (line.size() < 3 || line[1] != ' ')
    {
      fail("expected '<tag> <hex>'");
    }
    Bytes raw;
    try
    {
      raw = from_hex(std::string_view{line}.substr(2));
    }
    catch (DecodeError const &e)
    {
      fail(e.what());
    }
    try
    {
      switch (line.front())
      {
      case 'M': {
        auto msg = TangleMessage::decode(raw);
        auto rc = ledger.tangle.try_attach(msg);
        if (rc != Errc::Ok)
        {
          fail(std::string{"message rejected: "} + std::string{to_string(rc)});
        }
        break;
      }
      case 'B': {
        auto block = Block::decode(raw);
        if (!ledger.chain.contains(block.prev_hash))
        {
          fail("block parent unknown");
        }
        if (block.header_hash.leading_zero_bits() < block.difficulty_bits ||
            pow_digest(block.pow_preimage(), block.nonce) != block.header_hash)
        {
          fail("block header proof of work");
        }
        for (auto const &ref : block.dumb_refs)
        {
          if (!ledger.tangle.contains(ref))
          {
            fail("block references unknown dumb message");
          }
        }
        ledger.chain.insert(std::move(block), ledger.tangle);
        break;
      }
      default:
        fail(std::string{"unknown record tag '"} + line.front() + "'");
      }
    }
    catch (DecodeError const &e)
    {
      fail(e.what());
    }
  }
  return ledger;
}

LedgerSnapshot load_snapshot(std::filesystem::path const &path, TangleConfig config)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw Error(Errc::IoFailure, "cannot read " + path.string());
  }
  return read_snapshot(in, config);
}

void describe_ledger(std::ostream &out, LedgerSnapshot const &ledger)
{
  auto const &tangle = ledger.tangle;
  auto const &chain = ledger.chain;

  std::map<std::string, std::size_t> kinds;
  for (auto const &id : tangle.attachment_order())
  {
    auto const &msg = tangle.message(id);
    if (msg.is_genesis())
    {
      kinds["genesis"]++;
      continue;
    }
    switch (msg.kind)
    {
    case MessageKind::Dumb: kinds["dumb"]++; break;
    case MessageKind::WeakReqAttached: kinds["weakreq"]++; break;
    case MessageKind::Normal:
      switch (msg.payload_type)
      {
      case PayloadType::Bundle: kinds["bundle"]++; break;
      case PayloadType::Initial: kinds["initial"]++; break;
      case PayloadType::Rep:
        kinds[carried_feedback(msg) ? "feedback" : "trade-event"]++;
        break;
      default: kinds["raw"]++; break;
      }
      break;
    }
  }
  out << "tangle messages " << tangle.size() << '\n';
  for (auto const &[kind, count] : kinds)
  {
    out << "  " << kind << ' ' << count << '\n';
  }
  out << "tangle tips " << tangle.tips().size() << '\n';
  out << "tangle digest " << tangle.state_digest().hex() << '\n';

  auto const canonical = chain.canonical_chain();
  std::set<HashDigest> on_canonical(canonical.begin(), canonical.end());
  out << "blocks " << chain.size() << " canonical-height " << canonical.size() - 1 << " forks "
      << chain.tips().size() << '\n';
  out << "chain digest " << chain.state_digest().hex() << '\n';
  for (auto const &id : chain.insertion_order())
  {
    auto const &b = chain.block(id);
    out << "block height " << b.height << " id " << id.short_hex() << " parent "
        << (b.height == 0 ? std::string{"-"} : b.prev_hash.short_hex()) << " dumb-refs "
        << b.dumb_refs.size() << " requests " << b.weakreq_reqs.size() << " work "
        << chain.cumulative_work(id) << (on_canonical.contains(id) ? " canonical" : " fork")
        << '\n';
  }
}

std::vector<Feedback> ledger_feedback(TangleState const &tangle)
{
  std::vector<Feedback> out;
  for (auto const &id : tangle.attachment_order())
  {
    if (auto fb = carried_feedback(tangle.message(id)))
    {
      out.push_back(std::move(*fb));
    }
  }
  return out;
}

InteractionGraph ledger_graph(TangleState const &tangle)
{
  return InteractionGraph::from_feedback(ledger_feedback(tangle));
}

std::optional<TradeSession> replay_session(TangleState const &tangle, HashDigest const &session,
                                           TradePolicy policy)
{
  TradeBook book{policy};
  bool opened = false;
  for (auto const &id : tangle.attachment_order())
  {
    auto const &msg = tangle.message(id);
    if (auto ev = carried_event(msg))
    {
      if (ev->action == TradeAction::Request)
      {
        if (!opened && session_id(*ev) == session)
        {
          try
          {
            book.open(*ev);
            opened = true;
          }
          catch (Error const &)
          {
          }
        }
      }
      else if (opened && ev->session == session)
      {
        book.step(*ev);
      }
    }
    else if (auto fb = carried_feedback(msg); fb && opened && fb->trade == session)
    {
      book.submit_feedback(*fb);
    }
  }
  if (!opened)
  {
    return std::nullopt;
  }
  return *book.find(session);
}

void write_trace(std::ostream &out, TradeSession const &session)
{
  out << "session " << session.id.hex() << '\n';
  out << "buyer " << session.buyer.hex() << '\n';
  out << "seller " << session.seller.hex() << '\n';
  if (session.mediator)
  {
    out << "mediator " << session.mediator->hex() << '\n';
  }
  out << "price " << session.price.units() << '\n';
  for (auto const &t : session.log)
  {
    out << "tick " << t.tick << ' ' << to_string(t.action) << ' ' << to_string(t.from) << " -> "
        << to_string(t.to) << " by " << t.actor.short_hex() << '\n';
  }
  out << "state " << to_string(session.state) << '\n';
}

}  // namespace tangletrs
