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

#include "tangletrs/tangle.hpp"

#include <algorithm>

namespace tangletrs {

namespace {

void encode_body(Encoder &e, TangleMessage const &m)
{
  e.u8(static_cast<std::uint8_t>(m.kind));
  e.u32(static_cast<std::uint32_t>(m.parents.size()));
  for (auto const &p : m.parents)
  {
    encode(e, p);
  }
  e.u8(static_cast<std::uint8_t>(m.payload_type));
  e.bytes(m.payload);
  e.u32(static_cast<std::uint32_t>(m.spends.size()));
  for (auto const &s : m.spends)
  {
    encode(e, s);
  }
  encode(e, m.sender);
  e.u64(m.seq_no).u64(m.timestamp);
}

}  // namespace

Bytes TangleMessage::body_bytes() const
{
  Encoder e;
  encode_body(e, *this);
  return e.take();
}

Bytes TangleMessage::signed_bytes() const
{
  Encoder e;
  encode_body(e, *this);
  encode(e, pow);
  return e.take();
}

Bytes TangleMessage::canonical_bytes() const
{
  Encoder e;
  encode_body(e, *this);
  encode(e, pow);
  encode(e, signature);
  return e.take();
}

HashDigest TangleMessage::id() const
{
  return sha3_512(canonical_bytes());
}

TangleMessage TangleMessage::decode(ByteView bytes)
{
  Decoder d{bytes};
  TangleMessage m;
  auto kind = d.u8();
  if (kind > static_cast<std::uint8_t>(MessageKind::WeakReqAttached))
  {
    throw DecodeError("unknown message kind");
  }
  m.kind = static_cast<MessageKind>(kind);
  auto np = d.count(2);
  for (std::uint32_t i = 0; i < np; ++i)
  {
    m.parents.push_back(decode_digest(d));
  }
  auto pt = d.u8();
  if (pt > static_cast<std::uint8_t>(PayloadType::WeakReq))
  {
    throw DecodeError("unknown payload type");
  }
  m.payload_type = static_cast<PayloadType>(pt);
  m.payload = d.bytes();
  auto ns = d.count(4096);
  for (std::uint32_t i = 0; i < ns; ++i)
  {
    m.spends.push_back(decode_output_ref(d));
  }
  m.sender = decode_node_id(d);
  m.seq_no = d.u64();
  m.timestamp = d.u64();
  m.pow = decode_pow(d);
  m.signature = decode_signature(d);
  d.expect_done();
  return m;
}

TangleMessage make_message(KeyPair const &keys, MessageDraft draft, unsigned difficulty_bits,
                           PowOptions const &opts)
{
  TangleMessage m;
  m.kind = draft.kind;
  m.parents = {draft.parents.first, draft.parents.second};
  m.payload_type = draft.payload_type;
  m.payload = std::move(draft.payload);
  m.spends = std::move(draft.spends);
  m.sender = keys.id();
  m.seq_no = draft.seq_no;
  m.timestamp = draft.timestamp;

  m.pow = pow_solve(m.body_bytes(), difficulty_bits, opts).solution;
  m.signature = keys.sign(m.signed_bytes());
  return m;
}

//------------------------------------------------------------------------------

TangleMessage const &TangleState::genesis_message()
{
  static TangleMessage const genesis = [] {
    TangleMessage g;
    g.payload = Bytes{'t', 'a', 'n', 'g', 'l', 'e', 't', 'r', 's', '-', 'g', 'e', 'n', 'e', 's', 'i', 's'};
    g.pow = pow_solve(g.body_bytes(), 0).solution;
    return g;
  }();
  return genesis;
}

TangleState::TangleState(TangleConfig config)
  : config_{config}
{
  Node g;
  g.msg = genesis_message();
  g.id = g.msg.id();
  nodes_.push_back(std::move(g));
  order_.push_back(nodes_.front().id);
  index_.emplace(nodes_.front().id, 0);
  tip_pos_.push_back(-1);
  visit_mark_.push_back(0);
  add_tip(0);
}

std::uint32_t TangleState::index_of(HashDigest const &id) const
{
  auto it = index_.find(id);
  if (it == index_.end())
  {
    throw Error(Errc::UnknownMessage, id.short_hex());
  }
  return it->second;
}

void TangleState::add_tip(std::uint32_t idx)
{
  tip_pos_[idx] = static_cast<std::int64_t>(tips_.size());
  tips_.push_back(idx);
}

void TangleState::remove_tip(std::uint32_t idx)
{
  auto pos = tip_pos_[idx];
  if (pos < 0)
  {
    return;
  }
  auto last = tips_.back();
  tips_[static_cast<std::size_t>(pos)] = last;
  tip_pos_[last] = pos;
  tips_.pop_back();
  tip_pos_[idx] = -1;
}

Errc TangleState::check(TangleMessage const &msg) const
{
  if (msg.is_genesis())
  {
    return Errc::BadParents;
  }
  if (msg.parents.size() != 2)
  {
    return Errc::BadParents;
  }
  auto id = msg.id();
  if (index_.contains(id))
  {
    // Byte-identical resubmission.
    return Errc::StaleSeqNo;
  }

  std::array<std::uint32_t, 2> parent_idx{};
  for (std::size_t i = 0; i < 2; ++i)
  {
    auto it = index_.find(msg.parents[i]);
    if (it == index_.end())
    {
      return Errc::UnknownParent;
    }
    parent_idx[i] = it->second;
  }
  if (parent_idx[0] == parent_idx[1] && parent_idx[0] != 0)
  {
    return Errc::BadParents;
  }

  auto sender_it = senders_.find(msg.sender);
  if (sender_it != senders_.end())
  {
    if (msg.seq_no <= sender_it->second.last_seq)
    {
      return Errc::StaleSeqNo;
    }
    if (msg.timestamp < sender_it->second.last_timestamp)
    {
      return Errc::StaleTimestamp;
    }
  }
  else if (msg.seq_no == 0)
  {
    return Errc::StaleSeqNo;
  }

  if (msg.pow.difficulty_bits < config_.min_pow_bits || !pow_verify(msg.body_bytes(), msg.pow))
  {
    return Errc::BadPow;
  }
  if (!verify(msg.sender, msg.signed_bytes(), msg.signature))
  {
    return Errc::BadSignature;
  }

  return Errc::Ok;
}

Errc TangleState::try_attach(TangleMessage const &msg)
{
  return admit(msg, {});
}

Errc TangleState::admit(TangleMessage const &msg, std::function<Errc()> const &gate)
{
  auto rc = check(msg);
  if (rc == Errc::Ok && gate)
  {
    rc = gate();
  }
  if (rc == Errc::Ok)
  {
    commit(msg);
  }
  return rc;
}

void TangleState::commit(TangleMessage const &msg)
{
  auto id = msg.id();
  std::array<std::uint32_t, 2> parent_idx{index_.at(msg.parents[0]), index_.at(msg.parents[1])};

  // Commit.
  auto const idx = static_cast<std::uint32_t>(nodes_.size());
  Node node;
  node.msg = msg;
  node.id = id;
  node.parents = parent_idx;
  node.parent_count = parent_idx[0] == parent_idx[1] ? 1 : 2;
  nodes_.push_back(std::move(node));
  order_.push_back(id);
  index_.emplace(id, idx);
  tip_pos_.push_back(-1);
  visit_mark_.push_back(0);

  for (std::uint32_t i = 0; i < nodes_[idx].parent_count; ++i)
  {
    auto p = parent_idx[i];
    nodes_[p].children.push_back(idx);
    remove_tip(p);
  }
  add_tip(idx);

  auto &sender = senders_[msg.sender];
  sender.last_seq = msg.seq_no;
  sender.last_timestamp = msg.timestamp;

  std::set<OutputRef> distinct(msg.spends.begin(), msg.spends.end());
  for (auto const &ref : distinct)
  {
    spenders_[ref].push_back(idx);
  }
}

void TangleState::attach_message(TangleMessage const &msg)
{
  auto rc = try_attach(msg);
  if (rc != Errc::Ok)
  {
    throw Error(rc, "attach_message");
  }
}

std::pair<HashDigest, HashDigest> TangleState::select_tips(Rng &rng) const
{
  return select_tips(rng, TipFilter{});
}

std::pair<HashDigest, HashDigest> TangleState::select_tips(Rng &rng, TipFilter const &filter) const
{
  if (nodes_.empty())
  {
    throw Error(Errc::EmptyLedger);
  }
  std::vector<std::uint32_t> eligible;
  eligible.reserve(tips_.size());
  for (auto t : tips_)
  {
    if (!filter || filter(nodes_[t].id))
    {
      eligible.push_back(t);
    }
  }

  if (eligible.size() >= 2)
  {
    auto n = eligible.size();
    auto i = uniform_index(rng, n);
    auto j = uniform_index(rng, n - 1);
    if (j >= i)
    {
      ++j;
    }
    return {nodes_[eligible[i]].id, nodes_[eligible[j]].id};
  }

  // Fallback: most recent non-tip messages that pass the filter.
  std::vector<std::uint32_t> picks(eligible.begin(), eligible.end());
  for (auto i = nodes_.size(); i-- > 0 && picks.size() < 2;)
  {
    auto idx = static_cast<std::uint32_t>(i);
    if (tip_pos_[idx] >= 0)
    {
      continue;
    }
    if (!filter || filter(nodes_[idx].id))
    {
      picks.push_back(idx);
    }
  }
  if (picks.size() >= 2)
  {
    return {nodes_[picks[0]].id, nodes_[picks[1]].id};
  }
  if (picks.size() == 1 && picks[0] == 0)
  {
    return {nodes_[0].id, nodes_[0].id};
  }
  if (picks.size() == 1)
  {
    return {nodes_[picks[0]].id, nodes_[0].id};
  }
  throw Error(Errc::EmptyLedger, "no eligible tips");
}

std::uint64_t TangleState::cumulative_weight(HashDigest const &id) const
{
  auto const idx = index_of(id);
  auto const tag = static_cast<std::uint32_t>(nodes_.size());
  if (weight_cache_.size() < nodes_.size())
  {
    weight_cache_.resize(nodes_.size());
  }
  auto &slot = weight_cache_[idx];
  if (slot.second != tag)
  {
    slot = {count_descendants(idx, UINT64_MAX), tag};
  }
  return slot.first;
}

bool TangleState::weight_at_least(HashDigest const &id, std::uint64_t threshold) const
{
  return count_descendants(index_of(id), threshold) >= threshold;
}

std::uint64_t TangleState::count_descendants(std::uint32_t root, std::uint64_t cap) const
{
  ++visit_epoch_;
  std::vector<std::uint32_t> stack{root};
  visit_mark_[root] = visit_epoch_;
  std::uint64_t count = 0;
  while (!stack.empty())
  {
    auto cur = stack.back();
    stack.pop_back();
    if (++count >= cap)
    {
      return count;
    }
    for (auto c : nodes_[cur].children)
    {
      if (visit_mark_[c] != visit_epoch_)
      {
        visit_mark_[c] = visit_epoch_;
        stack.push_back(c);
      }
    }
  }
  return count;
}

void TangleState::mark_descendants(std::uint32_t root, std::vector<std::uint8_t> &marks) const
{
  std::vector<std::uint32_t> stack{root};
  marks[root] = 1;
  while (!stack.empty())
  {
    auto cur = stack.back();
    stack.pop_back();
    for (auto c : nodes_[cur].children)
    {
      if (!marks[c])
      {
        marks[c] = 1;
        stack.push_back(c);
      }
    }
  }
}

std::vector<ConflictOutcome> TangleState::conflict_sets() const
{
  std::vector<ConflictOutcome> out;
  for (auto const &[ref, members] : spenders_)
  {
    if (members.size() < 2)
    {
      continue;
    }
    ConflictOutcome c;
    c.output = ref;
    for (auto m : members)
    {
      c.members.push_back(nodes_[m].id);
    }
    out.push_back(std::move(c));
  }
  return out;
}

ConflictResolution TangleState::resolve_conflicts(std::uint64_t confirmation_threshold) const
{
  ConflictResolution res;
  std::vector<std::uint8_t> marks(nodes_.size(), 0);
  for (auto const &[ref, members] : spenders_)
  {
    if (members.size() < 2)
    {
      continue;
    }
    ConflictOutcome c;
    c.output = ref;
    std::uint64_t best = 0;
    std::uint64_t runner_up = 0;
    std::uint32_t best_idx = 0;
    for (auto m : members)
    {
      c.members.push_back(nodes_[m].id);
      auto w = cumulative_weight(nodes_[m].id);
      if (w > best)
      {
        runner_up = best;
        best = w;
        best_idx = m;
      }
      else if (w > runner_up)
      {
        runner_up = w;
      }
    }
    bool const decided = best > runner_up && best >= confirmation_threshold;
    if (decided)
    {
      c.winner = nodes_[best_idx].id;
    }
    for (auto m : members)
    {
      if (!decided || m != best_idx)
      {
        mark_descendants(m, marks);
      }
    }
    res.outcomes.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < marks.size(); ++i)
  {
    if (marks[i])
    {
      res.excluded.insert(nodes_[i].id);
    }
  }
  return res;
}

bool TangleState::is_confirmed(HashDigest const &id, ConflictResolution const &resolution,
                               std::uint64_t confirmation_threshold) const
{
  return weight_at_least(id, confirmation_threshold) && !resolution.excluded.contains(id);
}

TangleMessage const &TangleState::message(HashDigest const &id) const
{
  return nodes_[index_of(id)].msg;
}

std::optional<std::uint64_t> TangleState::last_seq_no(NodeId const &sender) const
{
  auto it = senders_.find(sender);
  if (it == senders_.end())
  {
    return std::nullopt;
  }
  return it->second.last_seq;
}

std::vector<HashDigest> TangleState::tips() const
{
  std::vector<HashDigest> out;
  out.reserve(tips_.size());
  for (auto t : tips_)
  {
    out.push_back(nodes_[t].id);
  }
  return out;
}

bool TangleState::is_tip(HashDigest const &id) const
{
  return tip_pos_[index_of(id)] >= 0;
}

std::vector<HashDigest> TangleState::children(HashDigest const &id) const
{
  std::vector<HashDigest> out;
  for (auto c : nodes_[index_of(id)].children)
  {
    out.push_back(nodes_[c].id);
  }
  return out;
}

bool TangleState::is_descendant(HashDigest const &ancestor, HashDigest const &descendant) const
{
  auto const a = index_of(ancestor);
  auto const d = index_of(descendant);
  if (a == d)
  {
    return true;
  }
  if (d < a)
  {
    // Attachment order is a topological order.
    return false;
  }
  // Walk parents of `d` back towards `a`.
  ++visit_epoch_;
  std::vector<std::uint32_t> stack{d};
  visit_mark_[d] = visit_epoch_;
  while (!stack.empty())
  {
    auto cur = stack.back();
    stack.pop_back();
    auto const &n = nodes_[cur];
    for (std::uint32_t i = 0; i < n.parent_count; ++i)
    {
      auto p = n.parents[i];
      if (p == a)
      {
        return true;
      }
      if (p > a && visit_mark_[p] != visit_epoch_)
      {
        visit_mark_[p] = visit_epoch_;
        stack.push_back(p);
      }
    }
  }
  return false;
}

std::vector<HashDigest> TangleState::descendants(HashDigest const &id) const
{
  std::vector<std::uint8_t> marks(nodes_.size(), 0);
  auto root = index_of(id);
  mark_descendants(root, marks);
  std::vector<HashDigest> out;
  for (std::size_t i = 0; i < marks.size(); ++i)
  {
    if (marks[i] && i != root)
    {
      out.push_back(nodes_[i].id);
    }
  }
  return out;
}

HashDigest TangleState::state_digest() const
{
  Sha3 h;
  for (auto const &id : order_)
  {
    h.update(id.view());
  }
  return h.finish();
}

bool TangleState::audit() const
{
  std::vector<std::uint8_t> marks(nodes_.size());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i)
  {
    std::fill(marks.begin(), marks.end(), 0);
    mark_descendants(i, marks);
    std::uint64_t count = 0;
    for (auto m : marks)
    {
      count += m;
    }
    if (count != cumulative_weight(nodes_[i].id))
    {
      return false;
    }
    bool const tip = nodes_[i].children.empty();
    if (tip != (tip_pos_[i] >= 0))
    {
      return false;
    }
    for (std::uint32_t p = 0; p < nodes_[i].parent_count; ++p)
    {
      if (nodes_[i].parents[p] >= i)
      {
        return false;
      }
    }
  }
  return true;
}

}  // namespace tangletrs
