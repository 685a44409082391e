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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tangletrs {

enum class MessageKind : std::uint8_t
{
  Normal = 0,
  Dumb = 1,
  WeakReqAttached = 2,
};

/// Tag for the protocol envelope carried in a message payload. The tangle
/// treats payloads as opaque bytes; upper layers decode them.
enum class PayloadType : std::uint8_t
{
  Raw = 0,
  Bundle = 1,
  Initial = 2,
  Rep = 3,
  DumbAnchor = 4,
  WeakReq = 5,
};

/// Reference to one output of a bundle.
struct OutputRef
{
  HashDigest bundle{};
  std::uint32_t index{0};

  auto operator<=>(OutputRef const &) const = default;
};

inline void encode(Encoder &e, OutputRef const &r)
{
  encode(e, r.bundle);
  e.u32(r.index);
}

inline OutputRef decode_output_ref(Decoder &d)
{
  OutputRef r;
  r.bundle = decode_digest(d);
  r.index = d.u32();
  return r;
}

struct TangleMessage
{
  MessageKind kind{MessageKind::Normal};
  std::vector<HashDigest> parents;  ///< exactly two, empty only for genesis
  PayloadType payload_type{PayloadType::Raw};
  Bytes payload;
  std::vector<OutputRef> spends;  ///< UTXOs consumed by the carried bundle, if any
  NodeId sender{};
  std::uint64_t seq_no{0};
  std::uint64_t timestamp{0};
  PowSolution pow{};
  Signature signature{};

  bool is_genesis() const { return parents.empty(); }

  /// Bytes the PoW is computed over.
  Bytes body_bytes() const;
  /// Bytes the sender signs: body plus the PoW solution.
  Bytes signed_bytes() const;
  /// Full record, signature included.
  Bytes canonical_bytes() const;
  HashDigest id() const;

  static TangleMessage decode(ByteView bytes);
};

struct MessageDraft
{
  MessageKind kind{MessageKind::Normal};
  std::pair<HashDigest, HashDigest> parents{};
  PayloadType payload_type{PayloadType::Raw};
  Bytes payload;
  std::vector<OutputRef> spends;
  std::uint64_t seq_no{0};
  std::uint64_t timestamp{0};
};

/// Fills in the sender, solves the PoW at `difficulty_bits` and signs.
TangleMessage make_message(KeyPair const &keys, MessageDraft draft, unsigned difficulty_bits,
                           PowOptions const &opts = {});

/// A key pair together with its per-sender sequence counter.
struct MessageAuthor
{
  KeyPair keys;
  std::uint64_t seq{0};

  NodeId const &id() const { return keys.id(); }

  /// Stamps the next sequence number, solves and signs.
  TangleMessage emit(MessageDraft draft, unsigned difficulty_bits, PowOptions const &opts = {})
  {
    draft.seq_no = ++seq;
    return make_message(keys, std::move(draft), difficulty_bits, opts);
  }
};

struct TangleConfig
{
  unsigned min_pow_bits{4};
};

struct ConflictOutcome
{
  OutputRef output;
  std::vector<HashDigest> members;  ///< attachment order
  std::optional<HashDigest> winner;  ///< empty = Undecided
};

struct ConflictResolution
{
  std::vector<ConflictOutcome> outcomes;
  /// Losing or undecided conflict members together with their descendants.
  std::set<HashDigest> excluded;
};

class TangleState
{
public:
  using TipFilter = std::function<bool(HashDigest const &)>;

  explicit TangleState(TangleConfig config = {});

  static TangleMessage const &genesis_message();

  TangleConfig const &config() const { return config_; }
  HashDigest const &genesis_id() const { return nodes_.front().id; }

  /// Runs every admission check of try_attach without committing.
  Errc check(TangleMessage const &msg) const;
  /// Validates and appends. On any failure the state is left unchanged and
  /// the error code is returned.
  Errc try_attach(TangleMessage const &msg);
  /// check(), then the caller's `gate` (an application-layer admission rule),
  /// then commit. Nothing is committed unless both return Ok.
  Errc admit(TangleMessage const &msg, std::function<Errc()> const &gate);
  /// Throwing variant of try_attach.
  void attach_message(TangleMessage const &msg);

  /// Two parents drawn uniformly from the current tips. With a single tip the
  /// second parent falls back to the most recently attached non-tip message
  /// (the genesis itself at bootstrap).
  std::pair<HashDigest, HashDigest> select_tips(Rng &rng) const;
  /// As above, restricted to tips accepted by `filter`.
  std::pair<HashDigest, HashDigest> select_tips(Rng &rng, TipFilter const &filter) const;

  /// 1 + number of distinct descendants. Computed on demand and cached until
  /// the next attachment.
  std::uint64_t cumulative_weight(HashDigest const &id) const;
  /// cumulative_weight(id) >= threshold, stopping the count early.
  bool weight_at_least(HashDigest const &id, std::uint64_t threshold) const;

  ConflictResolution resolve_conflicts(std::uint64_t confirmation_threshold) const;
  bool is_confirmed(HashDigest const &id, ConflictResolution const &resolution,
                    std::uint64_t confirmation_threshold) const;

  bool contains(HashDigest const &id) const { return index_.contains(id); }
  TangleMessage const &message(HashDigest const &id) const;
  std::optional<std::uint64_t> last_seq_no(NodeId const &sender) const;
  std::size_t size() const { return nodes_.size(); }

  /// Tips in a deterministic (insertion-dependent) order.
  std::vector<HashDigest> tips() const;
  bool is_tip(HashDigest const &id) const;
  std::vector<HashDigest> const &attachment_order() const { return order_; }
  std::vector<HashDigest> children(HashDigest const &id) const;

  /// True iff `descendant` is reachable from `ancestor` by child links
  /// (a message is its own descendant).
  bool is_descendant(HashDigest const &ancestor, HashDigest const &descendant) const;
  std::vector<HashDigest> descendants(HashDigest const &id) const;

  /// Groups of two or more messages spending the same output.
  std::vector<ConflictOutcome> conflict_sets() const;

  /// SHA3-512 over the ids in attachment order. Equal digests mean equal
  /// ledgers.
  HashDigest state_digest() const;

  /// Checks the tip set, the parent order and every weight against an
  /// independent recount. Intended for tests and audits.
  bool audit() const;

private:
  struct Node
  {
    TangleMessage msg;
    HashDigest id;
    std::array<std::uint32_t, 2> parents{};
    std::uint32_t parent_count{0};
    std::vector<std::uint32_t> children;
  };

  struct SenderState
  {
    std::uint64_t last_seq{0};
    std::uint64_t last_timestamp{0};
  };

  std::uint32_t index_of(HashDigest const &id) const;
  void commit(TangleMessage const &msg);
  void add_tip(std::uint32_t idx);
  void remove_tip(std::uint32_t idx);
  void mark_descendants(std::uint32_t root, std::vector<std::uint8_t> &marks) const;
  std::uint64_t count_descendants(std::uint32_t root, std::uint64_t cap) const;

  TangleConfig config_;
  std::vector<Node> nodes_;
  std::vector<HashDigest> order_;
  std::unordered_map<HashDigest, std::uint32_t, DigestHasher> index_;
  std::vector<std::uint32_t> tips_;
  std::vector<std::int64_t> tip_pos_;
  std::map<NodeId, SenderState> senders_;
  std::map<OutputRef, std::vector<std::uint32_t>> spenders_;

  mutable std::vector<std::uint32_t> visit_mark_;
  mutable std::uint32_t visit_epoch_{0};
  /// (weight, tangle size when computed) per message.
  mutable std::vector<std::pair<std::uint64_t, std::uint32_t>> weight_cache_;
};

}  // namespace tangletrs
