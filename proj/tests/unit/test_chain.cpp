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

#include "doctest.h"

#include "tangletrs/chain.hpp"

#include <set>

using namespace tangletrs;

namespace {

HashDigest tag(std::uint64_t n)
{
  Encoder e;
  e.str("chain-test").u64(n);
  return sha3_512(e.data());
}

DifficultyParams small_params(unsigned d = 6, unsigned f = 4)
{
  DifficultyParams p;
  p.difficulty_bits = d;
  p.relaxation = f;
  return p;
}

void seal(Block &b)
{
  auto r = pow_solve(b.pow_preimage(), b.difficulty_bits);
  b.nonce = r.solution.nonce;
  b.header_hash = r.solution.digest;
}

struct World
{
  TangleState tangle;
  ChainState chain;
  DifficultyParams params;
  Rng rng;
  std::uint64_t clock{0};

  explicit World(DifficultyParams p = small_params(), std::uint64_t seed = 1)
    : params{p}
    , rng{make_rng(seed)}
  {}

  MineOutcome mine(MinerState &m, HashDigest const &parent, std::vector<WeakReqRequest> mempool = {},
                   UtxoSet const *ledger = nullptr)
  {
    MiningJob job;
    job.parent = parent;
    job.timestamp = ++clock;
    job.mempool = std::move(mempool);
    job.validation.ledger = ledger;
    return mine_block(m, tangle, chain, params, rng, job);
  }

  /// Mines on `parent`, validates and inserts.
  Block extend(MinerState &m, HashDigest const &parent)
  {
    auto out = mine(m, parent);
    REQUIRE(out.status == MineStatus::Mined);
    auto v = validate_block(*out.block, tangle, chain, params);
    REQUIRE_MESSAGE(v.ok(), to_string(v.fault), " ", v.detail);
    chain.insert(*out.block, tangle);
    return *out.block;
  }
};

MinerState miner(std::uint64_t n)
{
  return MinerState{MessageAuthor{KeyPair::derive("chain-miner", n)}, {}};
}

WeakReqRequest signed_request(KeyPair const &keys, Money fee, std::uint32_t n_msg, ProofOfBurn pob)
{
  WeakReqRequest r;
  r.sender = keys.id();
  r.fee_total = fee;
  r.n_msg = n_msg;
  r.pob = pob;
  r.timer_interval = 50;
  r.signature = keys.sign(r.signed_bytes());
  return r;
}

}  // namespace

TEST_CASE("relaxed target")
{
  CHECK(relaxed_target(small_params(20, 16)) == RelaxedTarget{16, 16});
  CHECK(relaxed_target(small_params(20, 1)) == RelaxedTarget{20, 1});
  CHECK(relaxed_target(small_params(12, 4)) == RelaxedTarget{10, 4});
  for (unsigned f : {0u, 3u, 6u, 12u})
  {
    CHECK_THROWS_AS(relaxed_target(small_params(20, f)), Error);
  }
  CHECK_THROWS_AS(relaxed_target(small_params(4, 16)), Error);
  CHECK_THROWS_AS(relaxed_target(small_params(3, 16)), Error);
}

TEST_CASE("sliding window")
{
  using V = std::vector<std::uint64_t>;
  CHECK_THROWS_AS(window_for(0), Error);
  CHECK(window_for(1) == V{0});
  CHECK(window_for(2) == V{0});
  CHECK(window_for(3) == V{0, 1});
  CHECK(window_for(4) == V{0, 1, 2});
  CHECK(window_for(12) == V{8, 9, 10});

  for (std::uint64_t h = 2; h <= 50; ++h)
  {
    auto const w = window_for(h);
    CHECK(std::find(w.begin(), w.end(), h - 1) == w.end());
    if (h >= 5)
    {
      auto const prev = window_for(h - 1);
      std::set<std::uint64_t> a(prev.begin(), prev.end());
      std::set<std::uint64_t> b(w.begin(), w.end());
      std::vector<std::uint64_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      CHECK(common.size() == 2);
      // Losing at h−1 forfeits only the dumb work tied to height h−5.
      std::vector<std::uint64_t> lost;
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(lost));
      CHECK(lost == V{h - 5});
    }
  }
}

TEST_CASE("minimal block with F = 4")
{
  World w;
  auto m = miner(1);
  auto out = w.mine(m, w.chain.genesis_id());
  REQUIRE(out.status == MineStatus::Mined);
  auto const &b = *out.block;
  CHECK(b.height == 1);
  CHECK(b.dumb_refs.size() == 4);
  CHECK(b.weakreq_reqs.empty());
  CHECK(b.coinbase == w.params.coinbase);
  CHECK(b.miner == m.author.id());
  CHECK(out.minted.size() == 4);
  for (auto const &ref : b.dumb_refs)
  {
    auto const &msg = w.tangle.message(ref);
    CHECK(msg.kind == MessageKind::Dumb);
    CHECK(msg.pow.difficulty_bits == 4);
    CHECK(dumb_anchor_of(msg) == DumbAnchor{0, w.chain.genesis_id()});
  }
  CHECK(validate_block(b, w.tangle, w.chain, w.params).ok());

  auto decoded = Block::decode(b.canonical_bytes());
  CHECK(decoded.canonical_bytes() == b.canonical_bytes());
  CHECK(decoded.header_hash == b.header_hash);
}

TEST_CASE("profitable requests are included, unprofitable ones skipped")
{
  World w;
  UtxoSet ledger;
  auto dev = KeyPair::derive("chain-device", 1);
  ledger.mint(dev.id(), Money{5000}, tag(1));
  auto burn_a = create_pob(dev, ledger, Money{10}, 1);
  ledger.apply(burn_a.bundle);
  auto burn_b = create_pob(dev, ledger, Money{1000}, 2);
  ledger.apply(burn_b.bundle);

  auto good = signed_request(dev, Money{100}, 10, burn_a.pob);
  auto cheap = signed_request(dev, Money{1}, 1000, burn_b.pob);
  CHECK(check_request(good, ledger, {}) == RequestFault::Ok);
  CHECK_FALSE(is_profitable(cheap, Money{2}));

  auto m = miner(1);
  auto out = w.mine(m, w.chain.genesis_id(), {good, cheap}, &ledger);
  REQUIRE(out.block);
  REQUIRE(out.block->weakreq_reqs.size() == 1);
  CHECK(out.block->weakreq_reqs[0].id() == good.id());
  ValidationContext ctx{&ledger, {}};
  CHECK(validate_block(*out.block, w.tangle, w.chain, w.params, ctx).ok());
  w.chain.insert(*out.block, w.tangle);

  // The same burn cannot back a second request on this fork.
  auto again = signed_request(dev, Money{200}, 10, burn_a.pob);
  auto next = w.mine(m, out.block->header_hash, {again}, &ledger);
  REQUIRE(next.block);
  CHECK(next.block->weakreq_reqs.empty());

  Block forged = *next.block;
  forged.weakreq_reqs.push_back(again);
  seal(forged);
  CHECK(validate_block(forged, w.tangle, w.chain, w.params, ctx).fault == BlockFault::PobReuse);

  Block twice = *out.block;
  twice.prev_hash = out.block->header_hash;
  twice.height = 2;
  twice.dumb_refs = next.block->dumb_refs;
  twice.weakreq_reqs = {good, good};
  seal(twice);
  CHECK(validate_block(twice, w.tangle, w.chain, w.params, ctx).fault == BlockFault::PobReuse);

  auto unsigned_req = good;
  unsigned_req.fee_total = Money{500};
  Block bad = *next.block;
  bad.weakreq_reqs = {unsigned_req};
  seal(bad);
  CHECK(validate_block(bad, w.tangle, w.chain, w.params, ctx).fault == BlockFault::BadRequest);
}

TEST_CASE("mined blocks validate across seeded runs")
{
  for (std::uint64_t seed = 1; seed <= 200; ++seed)
  {
    World w{small_params(6, 1u << (seed % 3)), seed};
    auto m = miner(seed);
    auto out = w.mine(m, w.chain.genesis_id());
    REQUIRE(out.block);
    auto v = validate_block(*out.block, w.tangle, w.chain, w.params);
    CHECK_MESSAGE(v.ok(), "seed ", seed, ": ", to_string(v.fault));
  }

  World w{small_params(), 7};
  auto a = miner(1);
  auto tip = w.chain.genesis_id();
  for (int i = 0; i < 12; ++i)
  {
    tip = w.extend(a, tip).header_hash;
  }
  CHECK(w.chain.fork_choice() == tip);
  CHECK(w.chain.canonical_chain().size() == 13);
  CHECK(w.chain.cumulative_work(tip) == 12 * 4 * 16);
  CHECK(w.tangle.audit());
}

TEST_CASE("block rejections")
{
  World w;
  auto a = miner(1);
  auto tip = w.chain.genesis_id();
  std::vector<Block> blocks;
  for (int i = 0; i < 5; ++i)
  {
    blocks.push_back(w.extend(a, tip));
    tip = blocks.back().header_hash;
  }
  auto fresh = w.mine(a, tip);
  REQUIRE(fresh.block);
  Block const good = *fresh.block;
  REQUIRE(validate_block(good, w.tangle, w.chain, w.params).ok());

  auto expect = [&](Block b, BlockFault f, bool reseal = true) {
    if (reseal)
    {
      seal(b);
    }
    auto v = validate_block(b, w.tangle, w.chain, w.params);
    CHECK_MESSAGE(v.fault == f, to_string(v.fault), " != ", to_string(f));
  };

  SUBCASE("N - 1 dumb refs")
  {
    Block b = good;
    b.dumb_refs.pop_back();
    expect(b, BlockFault::InsufficientDumbWork);
  }
  SUBCASE("dumb ref reused from the parent block")
  {
    Block b = good;
    b.dumb_refs[0] = blocks.back().dumb_refs[0];
    expect(b, BlockFault::DumbRefReuse);
  }
  SUBCASE("anchor one step behind")
  {
    Block b = good;
    for (auto &ref : b.dumb_refs)
    {
      auto draft = dumb_draft({5, tip}, ++w.clock);
      draft.parents = w.tangle.select_tips(w.rng);
      auto msg = a.author.emit(std::move(draft), 4);
      w.tangle.attach_message(msg);
      ref = msg.id();
    }
    expect(b, BlockFault::OutsideWindow);
  }
  SUBCASE("header and metadata")
  {
    Block b = good;
    b.nonce ^= 1;
    expect(b, BlockFault::BadHeaderPow, false);
    b = good;
    b.difficulty_bits = 5;
    expect(b, BlockFault::WrongDifficulty);
    b = good;
    b.coinbase = Money{51};
    expect(b, BlockFault::BadCoinbase);
    b = good;
    b.height = 9;
    expect(b, BlockFault::BadHeight);
    b = good;
    b.prev_hash = tag(9);
    expect(b, BlockFault::UnknownParent);
  }
  SUBCASE("dumb ref faults")
  {
    Block b = good;
    b.dumb_refs[1] = b.dumb_refs[0];
    expect(b, BlockFault::DuplicateDumbRef);
    b = good;
    b.dumb_refs[0] = tag(3);
    expect(b, BlockFault::UnknownDumbRef);
    b = good;
    b.dumb_refs[0] = w.tangle.genesis_id();
    expect(b, BlockFault::NotDumb);
    b = good;
    b.miner = miner(2).author.id();
    expect(b, BlockFault::ForeignDumbRef);

    auto weak = dumb_draft({3, blocks[2].header_hash}, ++w.clock);
    weak.parents = w.tangle.select_tips(w.rng);
    auto msg = a.author.emit(std::move(weak), 4);
    w.tangle.attach_message(msg);
    DifficultyParams harder = w.params;
    harder.difficulty_bits = 7;
    b = good;
    b.difficulty_bits = 5;
    b.dumb_refs[0] = msg.id();
    seal(b);
    CHECK(validate_block(b, w.tangle, w.chain, harder).fault == BlockFault::WeakDumbRef);

    auto wrong = dumb_draft({3, tag(4)}, ++w.clock);
    wrong.parents = w.tangle.select_tips(w.rng);
    msg = a.author.emit(std::move(wrong), 4);
    w.tangle.attach_message(msg);
    b = good;
    b.dumb_refs[0] = msg.id();
    expect(b, BlockFault::AnchorMismatch);
  }
  // Nothing above mutated the chain.
  CHECK(w.chain.size() == 6);
}

TEST_CASE("fork choice")
{
  World w;
  auto a = miner(1);
  auto b = miner(2);
  auto light = w.extend(a, w.chain.genesis_id());
  CHECK(w.chain.fork_choice() == light.header_hash);

  // Pre-mint F dumb messages at two extra bits of difficulty for miner b.
  for (int i = 0; i < 4; ++i)
  {
    auto draft = dumb_draft({0, w.chain.genesis_id()}, ++w.clock);
    draft.parents = w.tangle.select_tips(w.rng);
    auto msg = b.author.emit(std::move(draft), 6);
    w.tangle.attach_message(msg);
    b.dumb_pool.push_back(msg.id());
  }
  auto heavy = w.extend(b, w.chain.genesis_id());
  CHECK(heavy.height == light.height);
  CHECK(w.chain.cumulative_work(heavy.header_hash) == 4 * w.chain.cumulative_work(light.header_hash));
  CHECK(w.chain.fork_choice() == heavy.header_hash);

  // Equal work: the lower header hash wins regardless of insertion order.
  World t;
  auto c = miner(3);
  auto d = miner(4);
  auto x = t.extend(c, t.chain.genesis_id());
  auto y = t.extend(d, t.chain.genesis_id());
  REQUIRE(t.chain.cumulative_work(x.header_hash) == t.chain.cumulative_work(y.header_hash));
  CHECK(t.chain.fork_choice() == std::min(x.header_hash, y.header_hash));
  CHECK(t.chain.tips().size() == 2);

  // Canonical chain closure.
  for (auto const &id : w.chain.canonical_chain())
  {
    if (id == w.chain.genesis_id())
    {
      continue;
    }
    ChainState replay;
    for (auto const &prev : w.chain.canonical_chain())
    {
      if (prev == id)
      {
        break;
      }
      if (prev != replay.genesis_id())
      {
        replay.insert(w.chain.block(prev), w.tangle);
      }
    }
    CHECK(validate_block(w.chain.block(id), w.tangle, replay, w.params).ok());
  }
}

TEST_CASE("interruption keeps minted dumb messages")
{
  World w;
  auto a = miner(1);
  auto const before = w.tangle.size();

  MiningJob job;
  job.parent = w.chain.genesis_id();
  job.timestamp = 1;
  job.should_stop = [&] { return w.tangle.size() >= before + 2; };
  auto out = mine_block(a, w.tangle, w.chain, w.params, w.rng, job);
  CHECK(out.status == MineStatus::Interrupted);
  CHECK_FALSE(out.block);
  CHECK(a.dumb_pool.size() == 2);
  CHECK(w.tangle.size() == before + 2);

  job.should_stop = {};
  job.timestamp = 2;
  auto resumed = mine_block(a, w.tangle, w.chain, w.params, w.rng, job);
  REQUIRE(resumed.block);
  CHECK(resumed.minted.size() == 2);
  CHECK(validate_block(*resumed.block, w.tangle, w.chain, w.params).ok());

  job.should_stop = [] { return true; };
  auto stopped = mine_block(a, w.tangle, w.chain, w.params, w.rng, job);
  CHECK(stopped.status == MineStatus::Interrupted);

  job.parent = tag(1);
  CHECK_THROWS_AS(mine_block(a, w.tangle, w.chain, w.params, w.rng, job), Error);
}

TEST_CASE("semi-progressive mining")
{
  World w;
  auto loser = miner(1);
  auto winner = miner(2);
  auto tip = w.chain.genesis_id();
  for (int i = 0; i < 5; ++i)
  {
    tip = w.extend(winner, tip).header_hash;
  }
  // Both race for height 6; the loser's block never reaches the chain.
  auto lost = w.mine(loser, tip);
  REQUIRE(lost.block);
  CHECK(lost.minted.size() == 4);
  auto won = w.extend(winner, tip);

  // Height 7 reuses every dumb message the loser minted for height 6.
  auto next = w.mine(loser, won.header_hash);
  REQUIRE(next.block);
  CHECK(next.minted.empty());
  CHECK(std::set<HashDigest>(next.block->dumb_refs.begin(), next.block->dumb_refs.end()) ==
        std::set<HashDigest>(lost.block->dumb_refs.begin(), lost.block->dumb_refs.end()));
  CHECK(validate_block(*next.block, w.tangle, w.chain, w.params).ok());
  w.chain.insert(*next.block, w.tangle);

  // Dumb messages tied to a height that has left the window are dropped.
  auto stale = w.mine(loser, next.block->header_hash);
  REQUIRE(stale.block);
  CHECK(stale.minted.size() == 4);
}

TEST_CASE("expected work is conserved under relaxation")
{
  unsigned const d = 10;
  int const trials = 500;
  auto mean_attempts = [&](unsigned bits, unsigned count, std::uint64_t stream) {
    std::uint64_t total = 0;
    for (int t = 0; t < trials; ++t)
    {
      for (unsigned k = 0; k < count; ++k)
      {
        Encoder e;
        e.u64(stream).u64(static_cast<std::uint64_t>(t)).u32(k);
        total += pow_solve(e.data(), bits).attempts;
      }
    }
    return static_cast<double>(total) / trials;
  };
  double const baseline = mean_attempts(d, 1, 0);
  CHECK(baseline == doctest::Approx(1024.0).epsilon(0.10));
  for (unsigned f : {1u, 2u, 4u, 8u, 16u})
  {
    auto const target = relaxed_target(small_params(d, f));
    double const relaxed = mean_attempts(target.bits, target.dumb_count, f);
    CHECK_MESSAGE(relaxed == doctest::Approx(baseline).epsilon(0.10), "F = ", f);
  }
}
