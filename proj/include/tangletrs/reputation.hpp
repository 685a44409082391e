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
#include "tangletrs/trade.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace tangletrs {

//------------------------------------------------------------------------------
// Average aggregator
//------------------------------------------------------------------------------

struct Rating
{
  NodeId rater;
  std::uint32_t rating_milli{0};
};

/// Per-rater means first, then the mean of those means. No ratings gives 0.
double aggregate_average(std::span<Rating const> ratings);

/// Average score of every subject named in `feedback`.
std::map<NodeId, double> average_scores(std::vector<Feedback> const &feedback);

//------------------------------------------------------------------------------
// Interaction graph and NetFlow
//------------------------------------------------------------------------------

/// Directed graph with integral capacities. An edge i -> j carries what i
/// contributed to j: seller -> buyer, weighted by rating_milli × amount.
class InteractionGraph
{
public:
  using Edge = std::pair<NodeId, NodeId>;

  /// Adds `capacity` to edge from -> to. Self-loops are ignored.
  void add(NodeId const &from, NodeId const &to, std::uint64_t capacity);
  void add_vertex(NodeId const &v) { vertices_.insert(v); }

  static InteractionGraph from_feedback(std::vector<Feedback> const &feedback);

  bool contains(NodeId const &v) const { return vertices_.contains(v); }
  std::uint64_t capacity(NodeId const &from, NodeId const &to) const;
  std::uint64_t out_capacity(NodeId const &v) const;
  std::set<NodeId> const &vertices() const { return vertices_; }
  std::map<Edge, std::uint64_t> const &edges() const { return edges_; }

  /// One "from to capacity" line per edge, ids in hex, sorted.
  void write_edge_list(std::ostream &out) const;
  /// Throws Error(InvalidArgument) on a malformed line.
  static InteractionGraph read_edge_list(std::istream &in);

private:
  std::set<NodeId> vertices_;
  std::map<Edge, std::uint64_t> edges_;
  std::map<NodeId, std::uint64_t> out_;
};

/// Residual network compiled once for repeated max-flow queries (Dinic).
class FlowNetwork
{
public:
  using Arc = std::tuple<std::uint32_t, std::uint32_t, std::uint64_t>;

  FlowNetwork(std::uint32_t vertex_count, std::vector<Arc> const &arcs);
  explicit FlowNetwork(InteractionGraph const &graph);

  std::uint32_t vertex_count() const { return static_cast<std::uint32_t>(head_.size() - 1); }
  std::optional<std::uint32_t> index_of(NodeId const &v) const;

  /// Maximum flow from `source` to `sink`, stopping early once `limit` is reached.
  std::uint64_t max_flow(std::uint32_t source, std::uint32_t sink,
                         std::uint64_t limit = UINT64_MAX);

  /// max_flow(subject -> evaluator) / out_capacity(evaluator), clamped to [0, 1].
  /// Absent vertices, evaluator == subject or no out-capacity give 0.
  double netflow_score(NodeId const &evaluator, NodeId const &subject);

private:
  bool build_levels(std::uint32_t source, std::uint32_t sink);
  std::uint64_t push(std::uint32_t v, std::uint32_t sink, std::uint64_t pushed);

  std::vector<std::uint32_t> head_;  ///< first arc index per vertex, CSR layout
  std::vector<std::uint32_t> to_;
  std::vector<std::uint32_t> rev_;
  std::vector<std::uint64_t> base_;  ///< original capacities
  std::vector<std::uint64_t> cap_;  ///< residual capacities
  std::vector<std::uint64_t> out_capacity_;
  std::vector<std::int32_t> level_;
  std::vector<std::uint32_t> next_;
  std::map<NodeId, std::uint32_t> index_;
};

/// One-shot convenience wrapper around FlowNetwork.
double netflow_score(InteractionGraph const &graph, NodeId const &evaluator, NodeId const &subject);

//------------------------------------------------------------------------------
// Classification and scoring
//------------------------------------------------------------------------------

enum class TrustClass : std::uint8_t
{
  Trusted,
  Distrusted,
};

/// Trusted iff score > threshold.
TrustClass classify(double score, double threshold);

enum class NodeClass : std::uint8_t
{
  Honest,
  Malicious,  ///< the positive class
};

struct Confusion
{
  std::uint64_t tp{0};
  std::uint64_t fp{0};
  std::uint64_t fn{0};
  std::uint64_t tn{0};

  double precision() const;
  double recall() const;
  /// 2PR / (P + R), or 0 when P + R = 0.
  double fscore() const;
};

/// Throws Error(KeyMismatch) unless both maps have the same keys.
Confusion confusion(std::map<NodeId, NodeClass> const &predicted,
                    std::map<NodeId, NodeClass> const &truth);

double fscore(std::map<NodeId, NodeClass> const &predicted, std::map<NodeId, NodeClass> const &truth);

}  // namespace tangletrs
