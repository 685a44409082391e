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

#pragma once

#include "tangletrs/core.hpp"
#include "tangletrs/random.hpp"
#include "tangletrs/tangle.hpp"
#include "tangletrs/trade.hpp"
#include "tangletrs/weakreq.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tangletrs {

struct DifficultyParams
{
  /// Network difficulty in leading zero bits.
  unsigned difficulty_bits{12};
  /// Reference minimum difficulty of the unrelaxed chain. Recorded for
  /// completeness; the simulator works directly on bit counts.
  std::uint64_t min_difficulty{std::uint64_t{1} << 23};
  /// Relaxation factor F; N = F dumb messages are required per block.
  unsigned relaxation{4};
  Money coinbase{50};
};

struct RelaxedTarget
{
  unsigned bits{0};
  unsigned dumb_count{0};

  bool operator==(RelaxedTarget const &) const = default;
};

/// (d − log2 F, F). Throws Error(InvalidRelaxation) unless F is a power of two
/// and d > log2 F.
RelaxedTarget relaxed_target(DifficultyParams const &params);

/// Heights whose dumb messages may back a block at `height`: the three heights
/// one step behind it. Throws for height 0.
std::vector<std::uint64_t> window_for(std::uint64_t height);

/// Payload of a dumb message: the fork position it is associated with.
struct DumbAnchor
{
  std::uint64_t height{0};
  HashDigest block{};

  bool operator==(DumbAnchor const &) const = default;
};

MessageDraft dumb_draft(DumbAnchor const &anchor, std::uint64_t timestamp);
std::optional<DumbAnchor> dumb_anchor_of(TangleMessage const &msg);

struct Block
{
  std::uint64_t height{0};
  HashDigest prev_hash{};
  std::vector<HashDigest> dumb_refs;
  std::vector<WeakReqRequest> weakreq_reqs;
  Money coinbase;
  NodeId miner;
  std::uint64_t timestamp{0};
  unsigned difficulty_bits{0};
  std::uint64_t nonce{0};
  HashDigest header_hash{};

  /// Header fields covered by the nonce search, excluding prev_hash and nonce.
  Bytes header_bytes() const;
  /// prev_hash || header_bytes; the header hash is SHA3-512(preimage || nonce_le64).
  Bytes pow_preimage() const;
  Bytes canonical_bytes() const;

  static Block decode(ByteView bytes);
};

/// Fixed height-0 block shared by every chain.
Block const &genesis_block();

enum class BlockFault : std::uint8_t
{
  Ok = 0,
  UnknownParent,
  BadHeight,
  WrongDifficulty,
  BadHeaderPow,
  BadCoinbase,
  InsufficientDumbWork,
  DuplicateDumbRef,
  UnknownDumbRef,
  NotDumb,
  WeakDumbRef,
  ForeignDumbRef,
  OutsideWindow,
  AnchorMismatch,
  DumbRefReuse,
  BadRequest,
  PobReuse,
};

std::string_view to_string(BlockFault f);

struct BlockVerdict
{
  BlockFault fault{BlockFault::Ok};
  std::string detail;

  bool ok() const { return fault == BlockFault::Ok; }
};

class ChainState
{
public:
  ChainState();

  HashDigest const &genesis_id() const { return genesis_id_; }
  bool contains(HashDigest const &id) const { return entries_.contains(id); }
  Block const &block(HashDigest const &id) const;
  std::size_t size() const { return order_.size(); }
  /// Block ids in insertion order.
  std::vector<HashDigest> const &insertion_order() const { return order_; }

  /// Σ over the fork ending at `id` of Σ 2^bits per dumb ref.
  std::uint64_t cumulative_work(HashDigest const &id) const;

  /// Block at `height` on the fork ending at `tip`.
  std::optional<HashDigest> ancestor_at(HashDigest const &tip, std::uint64_t height) const;

  /// True if any block on the fork ending at `tip`, at heights >= `min_height`,
  /// references `dumb`.
  bool dumb_ref_used(HashDigest const &tip, HashDigest const &dumb, std::uint64_t min_height) const;
  /// True if any block on the fork ending at `tip` anchors a request burning `burn`.
  bool pob_used(HashDigest const &tip, OutputRef const &burn) const;

  /// Inserts a block that already passed validate_block; `tangle` supplies
  /// the difficulty of each dumb ref.
  void insert(Block block, TangleState const &tangle);

  /// Tip of the fork with the greatest cumulative dumb-work; ties go to the
  /// lower header hash.
  HashDigest fork_choice() const;
  /// Genesis .. fork_choice().
  std::vector<HashDigest> canonical_chain() const;
  std::vector<HashDigest> tips() const;

  HashDigest state_digest() const;

private:
  struct Entry
  {
    Block block;
    std::uint64_t work{0};
    std::uint64_t cumulative{0};
    std::vector<HashDigest> children;
  };

  HashDigest genesis_id_{};
  std::map<HashDigest, Entry> entries_;
  std::vector<HashDigest> order_;
};

/// Work credited for one dumb message.
std::uint64_t dumb_work(unsigned bits);

struct ValidationContext
{
  UtxoSet const *ledger{nullptr};  ///< null skips PoB verification
  WeakReqConfig weakreq{};
};

/// Checks every block invariant without mutating anything.
BlockVerdict validate_block(Block const &block, TangleState const &tangle, ChainState const &chain,
                            DifficultyParams const &params, ValidationContext const &ctx = {});

//------------------------------------------------------------------------------
// Mining
//------------------------------------------------------------------------------

/// A miner's identity plus the dumb messages it minted and may still use.
struct MinerState
{
  MessageAuthor author;
  std::vector<HashDigest> dumb_pool;
};

struct MiningJob
{
  HashDigest parent{};
  std::uint64_t timestamp{0};
  std::vector<WeakReqRequest> mempool;
  Money min_share{2};
  ValidationContext validation{};
  /// Polled between hash attempts; returning true aborts the job.
  std::function<bool()> should_stop{};
  std::uint64_t start_nonce{0};
};

enum class MineStatus : std::uint8_t
{
  Mined,
  Interrupted,
};

struct MineOutcome
{
  MineStatus status{MineStatus::Mined};
  std::optional<Block> block;
  /// Dumb messages attached to the Tangle during this job (kept on interruption).
  std::vector<HashDigest> minted;
  std::uint64_t attempts{0};
};

/// Mints dumb messages into the Tangle until N window-eligible ones are
/// available, adds profitable requests, then searches the header nonce.
/// Throws Error(NoEligibleWindow) if the parent is unknown.
MineOutcome mine_block(MinerState &miner, TangleState &tangle, ChainState const &chain,
                       DifficultyParams const &params, Rng &rng, MiningJob const &job);

}  // namespace tangletrs
