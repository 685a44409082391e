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

#include "tangletrs/chain.hpp"

#include <algorithm>
#include <bit>
#include <set>

namespace tangletrs {

RelaxedTarget relaxed_target(DifficultyParams const &params)
{
  auto const f = params.relaxation;
  if (f == 0 || !std::has_single_bit(f))
  {
    throw Error(Errc::InvalidRelaxation, "F must be a power of two");
  }
  auto const log2f = static_cast<unsigned>(std::countr_zero(f));
  if (params.difficulty_bits <= log2f)
  {
    throw Error(Errc::InvalidRelaxation, "difficulty must exceed log2(F)");
  }
  return {params.difficulty_bits - log2f, f};
}

std::vector<std::uint64_t> window_for(std::uint64_t height)
{
  if (height == 0)
  {
    throw Error(Errc::InvalidArgument, "genesis has no window");
  }
  if (height == 1)
  {
    return {0};
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t back = 4; back >= 2; --back)
  {
    if (height >= back)
    {
      out.push_back(height - back);
    }
  }
  return out;
}

std::uint64_t dumb_work(unsigned bits)
{
  return bits >= 63 ? (std::uint64_t{1} << 62) : (std::uint64_t{1} << bits);
}

MessageDraft dumb_draft(DumbAnchor const &anchor, std::uint64_t timestamp)
{
  MessageDraft d;
  d.kind = MessageKind::Dumb;
  d.payload_type = PayloadType::DumbAnchor;
  Encoder e;
  e.u64(anchor.height);
  encode(e, anchor.block);
  d.payload = e.take();
  d.timestamp = timestamp;
  return d;
}

std::optional<DumbAnchor> dumb_anchor_of(TangleMessage const &msg)
{
  if (msg.kind != MessageKind::Dumb || msg.payload_type != PayloadType::DumbAnchor)
  {
    return std::nullopt;
  }
  try
  {
    Decoder d{msg.payload};
    DumbAnchor a;
    a.height = d.u64();
    a.block = decode_digest(d);
    d.expect_done();
    return a;
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

//------------------------------------------------------------------------------

Bytes Block::header_bytes() const
{
  Encoder e;
  e.u64(height);
  e.u32(static_cast<std::uint32_t>(dumb_refs.size()));
  for (auto const &r : dumb_refs)
  {
    encode(e, r);
  }
  e.u32(static_cast<std::uint32_t>(weakreq_reqs.size()));
  for (auto const &r : weakreq_reqs)
  {
    encode(e, r);
  }
  encode(e, coinbase);
  encode(e, miner);
  e.u64(timestamp).u32(difficulty_bits);
  return e.take();
}

Bytes Block::pow_preimage() const
{
  Encoder e;
  encode(e, prev_hash);
  e.raw(header_bytes());
  return e.take();
}

Bytes Block::canonical_bytes() const
{
  Encoder e;
  e.raw(pow_preimage());
  e.u64(nonce);
  encode(e, header_hash);
  return e.take();
}

Block Block::decode(ByteView bytes)
{
  Decoder d{bytes};
  Block b;
  b.prev_hash = decode_digest(d);
  b.height = d.u64();
  auto nrefs = d.count(1 << 16);
  for (std::uint32_t i = 0; i < nrefs; ++i)
  {
    b.dumb_refs.push_back(decode_digest(d));
  }
  auto nreqs = d.count(1 << 16);
  for (std::uint32_t i = 0; i < nreqs; ++i)
  {
    b.weakreq_reqs.push_back(decode_request(d));
  }
  b.coinbase = decode_money(d);
  b.miner = decode_node_id(d);
  b.timestamp = d.u64();
  b.difficulty_bits = d.u32();
  b.nonce = d.u64();
  b.header_hash = decode_digest(d);
  d.expect_done();
  return b;
}

Block const &genesis_block()
{
  static Block const genesis = [] {
    Block g;
    g.header_hash = pow_digest(g.pow_preimage(), 0);
    return g;
  }();
  return genesis;
}

std::string_view to_string(BlockFault f)
{
  switch (f)
  {
  case BlockFault::Ok: return "Ok";
  case BlockFault::UnknownParent: return "UnknownParent";
  case BlockFault::BadHeight: return "BadHeight";
  case BlockFault::WrongDifficulty: return "WrongDifficulty";
  case BlockFault::BadHeaderPow: return "BadHeaderPow";
  case BlockFault::BadCoinbase: return "BadCoinbase";
  case BlockFault::InsufficientDumbWork: return "InsufficientDumbWork";
  case BlockFault::DuplicateDumbRef: return "DuplicateDumbRef";
  case BlockFault::UnknownDumbRef: return "UnknownDumbRef";
  case BlockFault::NotDumb: return "NotDumb";
  case BlockFault::WeakDumbRef: return "WeakDumbRef";
  case BlockFault::ForeignDumbRef: return "ForeignDumbRef";
  case BlockFault::OutsideWindow: return "OutsideWindow";
  case BlockFault::AnchorMismatch: return "AnchorMismatch";
  case BlockFault::DumbRefReuse: return "DumbRefReuse";
  case BlockFault::BadRequest: return "BadRequest";
  case BlockFault::PobReuse: return "PobReuse";
  }
  return "Unknown";
}

//------------------------------------------------------------------------------

ChainState::ChainState()
{
  auto const &g = genesis_block();
  genesis_id_ = g.header_hash;
  entries_.emplace(genesis_id_, Entry{g, 0, 0, {}});
  order_.push_back(genesis_id_);
}

Block const &ChainState::block(HashDigest const &id) const
{
  auto it = entries_.find(id);
  if (it == entries_.end())
  {
    throw Error(Errc::UnknownMessage, "block " + id.short_hex());
  }
  return it->second.block;
}

std::uint64_t ChainState::cumulative_work(HashDigest const &id) const
{
  auto it = entries_.find(id);
  if (it == entries_.end())
  {
    throw Error(Errc::UnknownMessage, "block " + id.short_hex());
  }
  return it->second.cumulative;
}

std::optional<HashDigest> ChainState::ancestor_at(HashDigest const &tip, std::uint64_t height) const
{
  auto it = entries_.find(tip);
  while (it != entries_.end())
  {
    auto const &b = it->second.block;
    if (b.height == height)
    {
      return it->first;
    }
    if (b.height < height || b.height == 0)
    {
      return std::nullopt;
    }
    it = entries_.find(b.prev_hash);
  }
  return std::nullopt;
}

bool ChainState::dumb_ref_used(HashDigest const &tip, HashDigest const &dumb,
                               std::uint64_t min_height) const
{
  auto it = entries_.find(tip);
  while (it != entries_.end())
  {
    auto const &b = it->second.block;
    if (b.height < min_height || b.height == 0)
    {
      return false;
    }
    if (std::find(b.dumb_refs.begin(), b.dumb_refs.end(), dumb) != b.dumb_refs.end())
    {
      return true;
    }
    it = entries_.find(b.prev_hash);
  }
  return false;
}

bool ChainState::pob_used(HashDigest const &tip, OutputRef const &burn) const
{
  auto it = entries_.find(tip);
  while (it != entries_.end())
  {
    auto const &b = it->second.block;
    for (auto const &r : b.weakreq_reqs)
    {
      if (r.pob.output() == burn)
      {
        return true;
      }
    }
    if (b.height == 0)
    {
      return false;
    }
    it = entries_.find(b.prev_hash);
  }
  return false;
}

void ChainState::insert(Block block, TangleState const &tangle)
{
  auto parent = entries_.find(block.prev_hash);
  if (parent == entries_.end())
  {
    throw Error(Errc::UnknownParent, "block parent");
  }
  if (entries_.contains(block.header_hash))
  {
    return;
  }
  std::uint64_t work = 0;
  for (auto const &ref : block.dumb_refs)
  {
    work += dumb_work(tangle.message(ref).pow.difficulty_bits);
  }
  auto const id = block.header_hash;
  parent->second.children.push_back(id);
  auto const cumulative = parent->second.cumulative + work;
  entries_.emplace(id, Entry{std::move(block), work, cumulative, {}});
  order_.push_back(id);
}

HashDigest ChainState::fork_choice() const
{
  auto best = entries_.begin();
  for (auto it = entries_.begin(); it != entries_.end(); ++it)
  {
    // Map order is ascending by hash, so the first maximum has the lower hash.
    if (it->second.cumulative > best->second.cumulative)
    {
      best = it;
    }
  }
  return best->first;
}

std::vector<HashDigest> ChainState::canonical_chain() const
{
  std::vector<HashDigest> out;
  auto it = entries_.find(fork_choice());
  while (it != entries_.end())
  {
    out.push_back(it->first);
    if (it->second.block.height == 0)
    {
      break;
    }
    it = entries_.find(it->second.block.prev_hash);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<HashDigest> ChainState::tips() const
{
  std::vector<HashDigest> out;
  for (auto const &id : order_)
  {
    if (entries_.at(id).children.empty())
    {
      out.push_back(id);
    }
  }
  return out;
}

HashDigest ChainState::state_digest() const
{
  Sha3 h;
  for (auto const &id : order_)
  {
    h.update(id.view());
  }
  return h.finish();
}

//------------------------------------------------------------------------------

BlockVerdict validate_block(Block const &block, TangleState const &tangle, ChainState const &chain,
                            DifficultyParams const &params, ValidationContext const &ctx)
{
  auto fail = [](BlockFault f, std::string detail = {}) { return BlockVerdict{f, std::move(detail)}; };

  if (!chain.contains(block.prev_hash))
  {
    return fail(BlockFault::UnknownParent);
  }
  auto const &parent = chain.block(block.prev_hash);
  if (block.height != parent.height + 1)
  {
    return fail(BlockFault::BadHeight);
  }
  auto const target = relaxed_target(params);
  if (block.difficulty_bits != target.bits)
  {
    return fail(BlockFault::WrongDifficulty);
  }
  if (block.header_hash.leading_zero_bits() < target.bits ||
      pow_digest(block.pow_preimage(), block.nonce) != block.header_hash)
  {
    return fail(BlockFault::BadHeaderPow);
  }
  if (block.coinbase != params.coinbase)
  {
    return fail(BlockFault::BadCoinbase);
  }
  if (block.dumb_refs.size() < target.dumb_count)
  {
    return fail(BlockFault::InsufficientDumbWork,
                std::to_string(block.dumb_refs.size()) + " < " + std::to_string(target.dumb_count));
  }

  auto const window = window_for(block.height);
  std::set<HashDigest> seen;
  for (auto const &ref : block.dumb_refs)
  {
    auto const tag = ref.short_hex();
    if (!seen.insert(ref).second)
    {
      return fail(BlockFault::DuplicateDumbRef, tag);
    }
    if (!tangle.contains(ref))
    {
      return fail(BlockFault::UnknownDumbRef, tag);
    }
    auto const &msg = tangle.message(ref);
    auto anchor = dumb_anchor_of(msg);
    if (!anchor)
    {
      return fail(BlockFault::NotDumb, tag);
    }
    if (msg.pow.difficulty_bits < target.bits)
    {
      return fail(BlockFault::WeakDumbRef, tag);
    }
    if (msg.sender != block.miner)
    {
      return fail(BlockFault::ForeignDumbRef, tag);
    }
    if (std::find(window.begin(), window.end(), anchor->height) == window.end())
    {
      return fail(BlockFault::OutsideWindow, tag);
    }
    if (chain.ancestor_at(block.prev_hash, anchor->height) != anchor->block)
    {
      return fail(BlockFault::AnchorMismatch, tag);
    }
    if (chain.dumb_ref_used(block.prev_hash, ref, anchor->height + 1))
    {
      return fail(BlockFault::DumbRefReuse, tag);
    }
  }

  std::set<OutputRef> burns;
  for (auto const &req : block.weakreq_reqs)
  {
    if (ctx.ledger)
    {
      auto f = check_request(req, *ctx.ledger, ctx.weakreq);
      if (f != RequestFault::Ok)
      {
        return fail(BlockFault::BadRequest, std::string{to_string(f)});
      }
    }
    else if (req.n_msg == 0 || !verify(req.sender, req.signed_bytes(), req.signature))
    {
      return fail(BlockFault::BadRequest);
    }
    if (!burns.insert(req.pob.output()).second || chain.pob_used(block.prev_hash, req.pob.output()))
    {
      return fail(BlockFault::PobReuse);
    }
  }
  return {};
}

//------------------------------------------------------------------------------

MineOutcome mine_block(MinerState &miner, TangleState &tangle, ChainState const &chain,
                       DifficultyParams const &params, Rng &rng, MiningJob const &job)
{
  if (!chain.contains(job.parent))
  {
    throw Error(Errc::NoEligibleWindow, "unknown parent block");
  }
  auto const &parent = chain.block(job.parent);
  auto const height = parent.height + 1;
  auto const target = relaxed_target(params);
  auto const window = window_for(height);

  MineOutcome outcome;
  PowOptions opts;
  opts.should_stop = job.should_stop;
  opts.start_nonce = job.start_nonce;

  // Reuse retained dumb messages that are still eligible on this fork.
  std::vector<HashDigest> refs;
  std::vector<HashDigest> keep;
  for (auto const &id : miner.dumb_pool)
  {
    auto const &msg = tangle.message(id);
    auto anchor = dumb_anchor_of(msg);
    if (!anchor || anchor->height < window.front())
    {
      continue;  // can never be eligible again
    }
    keep.push_back(id);
    bool const in_window = std::find(window.begin(), window.end(), anchor->height) != window.end();
    if (refs.size() < target.dumb_count && in_window && msg.pow.difficulty_bits >= target.bits &&
        chain.ancestor_at(job.parent, anchor->height) == anchor->block &&
        !chain.dumb_ref_used(job.parent, id, anchor->height + 1))
    {
      refs.push_back(id);
    }
  }
  miner.dumb_pool = std::move(keep);

  DumbAnchor const fresh{window.back(), *chain.ancestor_at(job.parent, window.back())};
  while (refs.size() < target.dumb_count)
  {
    auto draft = dumb_draft(fresh, job.timestamp);
    draft.parents = tangle.select_tips(rng);
    TangleMessage msg;
    try
    {
      msg = miner.author.emit(std::move(draft), target.bits, opts);
    }
    catch (Error const &e)
    {
      if (e.code() != Errc::Interrupted)
      {
        throw;
      }
      outcome.status = MineStatus::Interrupted;
      return outcome;
    }
    outcome.attempts += msg.pow.nonce - opts.start_nonce + 1;
    tangle.attach_message(msg);
    auto id = msg.id();
    miner.dumb_pool.push_back(id);
    outcome.minted.push_back(id);
    refs.push_back(id);
  }

  Block block;
  block.height = height;
  block.prev_hash = job.parent;
  block.dumb_refs = std::move(refs);
  block.coinbase = params.coinbase;
  block.miner = miner.author.id();
  block.timestamp = job.timestamp;
  block.difficulty_bits = target.bits;

  std::set<OutputRef> burns;
  for (auto const &req : job.mempool)
  {
    if (!is_profitable(req, job.min_share))
    {
      continue;
    }
    if (job.validation.ledger)
    {
      if (check_request(req, *job.validation.ledger, job.validation.weakreq) != RequestFault::Ok)
      {
        continue;
      }
    }
    else if (req.n_msg == 0 || !verify(req.sender, req.signed_bytes(), req.signature))
    {
      continue;
    }
    auto const burn = req.pob.output();
    if (burns.contains(burn) || chain.pob_used(job.parent, burn))
    {
      continue;
    }
    burns.insert(burn);
    block.weakreq_reqs.push_back(req);
  }

  try
  {
    auto r = pow_solve(block.pow_preimage(), target.bits, opts);
    outcome.attempts += r.attempts;
    block.nonce = r.solution.nonce;
    block.header_hash = r.solution.digest;
  }
  catch (Error const &e)
  {
    if (e.code() != Errc::Interrupted)
    {
      throw;
    }
    outcome.status = MineStatus::Interrupted;
    return outcome;
  }
  outcome.block = std::move(block);
  return outcome;
}

}  // namespace tangletrs
