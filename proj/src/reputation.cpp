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

#include "tangletrs/reputation.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace tangletrs {

double aggregate_average(std::span<Rating const> ratings)
{
  std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>> per_rater;
  for (auto const &r : ratings)
  {
    auto &[sum, count] = per_rater[r.rater];
    sum += r.rating_milli;
    ++count;
  }
  if (per_rater.empty())
  {
    return 0.0;
  }
  double total = 0.0;
  for (auto const &[rater, acc] : per_rater)
  {
    total += static_cast<double>(acc.first) / static_cast<double>(acc.second) / 1000.0;
  }
  return total / static_cast<double>(per_rater.size());
}

std::map<NodeId, double> average_scores(std::vector<Feedback> const &feedback)
{
  std::map<NodeId, std::vector<Rating>> by_subject;
  for (auto const &fb : feedback)
  {
    by_subject[fb.subject].push_back({fb.rater, fb.rating_milli});
  }
  std::map<NodeId, double> out;
  for (auto const &[subject, ratings] : by_subject)
  {
    out.emplace(subject, aggregate_average(ratings));
  }
  return out;
}

//------------------------------------------------------------------------------

void InteractionGraph::add(NodeId const &from, NodeId const &to, std::uint64_t capacity)
{
  vertices_.insert(from);
  vertices_.insert(to);
  if (from == to || capacity == 0)
  {
    return;
  }
  edges_[{from, to}] += capacity;
  out_[from] += capacity;
}

InteractionGraph InteractionGraph::from_feedback(std::vector<Feedback> const &feedback)
{
  InteractionGraph g;
  for (auto const &fb : feedback)
  {
    g.add(fb.subject, fb.rater, Money{fb.rating_milli}.times(fb.amount.units()).units());
  }
  return g;
}

std::uint64_t InteractionGraph::capacity(NodeId const &from, NodeId const &to) const
{
  auto it = edges_.find({from, to});
  return it == edges_.end() ? 0 : it->second;
}

std::uint64_t InteractionGraph::out_capacity(NodeId const &v) const
{
  auto it = out_.find(v);
  return it == out_.end() ? 0 : it->second;
}

void InteractionGraph::write_edge_list(std::ostream &out) const
{
  for (auto const &[edge, cap] : edges_)
  {
    out << edge.first.hex() << ' ' << edge.second.hex() << ' ' << cap << '\n';
  }
}

InteractionGraph InteractionGraph::read_edge_list(std::istream &in)
{
  InteractionGraph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    std::istringstream fields{line};
    std::string from;
    std::string to;
    std::uint64_t cap = 0;
    std::string extra;
    if (!(fields >> from >> to >> cap) || (fields >> extra))
    {
      throw Error(Errc::InvalidArgument, "edge list line " + std::to_string(lineno));
    }
    try
    {
      g.add(NodeId::from_hex(from), NodeId::from_hex(to), cap);
    }
    catch (DecodeError const &e)
    {
      throw Error(Errc::InvalidArgument,
                  "edge list line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

//------------------------------------------------------------------------------

FlowNetwork::FlowNetwork(std::uint32_t vertex_count, std::vector<Arc> const &arcs)
{
  std::vector<std::uint32_t> degree(vertex_count, 0);
  for (auto const &[u, v, c] : arcs)
  {
    if (u >= vertex_count || v >= vertex_count)
    {
      throw Error(Errc::InvalidArgument, "arc endpoint out of range");
    }
    ++degree[u];
    ++degree[v];
  }
  head_.assign(vertex_count + 1, 0);
  for (std::uint32_t i = 0; i < vertex_count; ++i)
  {
    head_[i + 1] = head_[i] + degree[i];
  }
  auto const total = head_[vertex_count];
  to_.assign(total, 0);
  rev_.assign(total, 0);
  base_.assign(total, 0);
  out_capacity_.assign(vertex_count, 0);
  std::vector<std::uint32_t> fill(head_.begin(), head_.end() - 1);
  for (auto const &[u, v, c] : arcs)
  {
    auto const a = fill[u]++;
    auto const b = fill[v]++;
    to_[a] = v;
    base_[a] = c;
    rev_[a] = b;
    to_[b] = u;
    rev_[b] = a;
    if (u != v)
    {
      out_capacity_[u] += c;
    }
  }
  cap_ = base_;
  level_.assign(vertex_count, -1);
  next_.assign(vertex_count, 0);
}

namespace {

std::vector<FlowNetwork::Arc> arcs_of(InteractionGraph const &graph,
                                      std::map<NodeId, std::uint32_t> &index)
{
  std::uint32_t n = 0;
  for (auto const &v : graph.vertices())
  {
    index.emplace(v, n++);
  }
  std::vector<FlowNetwork::Arc> arcs;
  arcs.reserve(graph.edges().size());
  for (auto const &[edge, cap] : graph.edges())
  {
    arcs.emplace_back(index.at(edge.first), index.at(edge.second), cap);
  }
  return arcs;
}

}  // namespace

FlowNetwork::FlowNetwork(InteractionGraph const &graph)
{
  std::map<NodeId, std::uint32_t> index;
  auto arcs = arcs_of(graph, index);
  *this = FlowNetwork(static_cast<std::uint32_t>(index.size()), arcs);
  index_ = std::move(index);
}

std::optional<std::uint32_t> FlowNetwork::index_of(NodeId const &v) const
{
  auto it = index_.find(v);
  if (it == index_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

bool FlowNetwork::build_levels(std::uint32_t source, std::uint32_t sink)
{
  std::fill(level_.begin(), level_.end(), -1);
  std::vector<std::uint32_t> queue{source};
  level_[source] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi)
  {
    auto const v = queue[qi];
    if (level_[sink] >= 0 && level_[v] >= level_[sink])
    {
      break;  // deeper vertices cannot lie on a shortest path
    }
    for (auto a = head_[v]; a < head_[v + 1]; ++a)
    {
      if (cap_[a] > 0 && level_[to_[a]] < 0)
      {
        level_[to_[a]] = level_[v] + 1;
        queue.push_back(to_[a]);
      }
    }
  }
  return level_[sink] >= 0;
}

std::uint64_t FlowNetwork::push(std::uint32_t v, std::uint32_t sink, std::uint64_t pushed)
{
  if (v == sink)
  {
    return pushed;
  }
  for (auto &a = next_[v]; a < head_[v + 1]; ++a)
  {
    auto const w = to_[a];
    if (cap_[a] == 0 || level_[w] != level_[v] + 1)
    {
      continue;
    }
    auto const got = push(w, sink, std::min(pushed, cap_[a]));
    if (got > 0)
    {
      cap_[a] -= got;
      cap_[rev_[a]] += got;
      return got;
    }
  }
  return 0;
}

std::uint64_t FlowNetwork::max_flow(std::uint32_t source, std::uint32_t sink, std::uint64_t limit)
{
  if (source >= vertex_count() || sink >= vertex_count())
  {
    throw Error(Errc::InvalidArgument, "flow endpoint out of range");
  }
  cap_ = base_;
  if (source == sink)
  {
    return 0;
  }
  std::uint64_t flow = 0;
  while (flow < limit && build_levels(source, sink))
  {
    std::copy(head_.begin(), head_.end() - 1, next_.begin());
    while (flow < limit)
    {
      auto const got = push(source, sink, limit - flow);
      if (got == 0)
      {
        break;
      }
      flow += got;
    }
  }
  return flow;
}

double FlowNetwork::netflow_score(NodeId const &evaluator, NodeId const &subject)
{
  auto e = index_of(evaluator);
  auto s = index_of(subject);
  if (!e || !s || *e == *s)
  {
    return 0.0;
  }
  auto const out = out_capacity_[*e];
  if (out == 0 || out_capacity_[*s] == 0)
  {
    return 0.0;
  }
  auto const flow = max_flow(*s, *e, out);
  return std::min(1.0, static_cast<double>(flow) / static_cast<double>(out));
}

double netflow_score(InteractionGraph const &graph, NodeId const &evaluator, NodeId const &subject)
{
  FlowNetwork net{graph};
  return net.netflow_score(evaluator, subject);
}

//------------------------------------------------------------------------------

TrustClass classify(double score, double threshold)
{
  return score > threshold ? TrustClass::Trusted : TrustClass::Distrusted;
}

double Confusion::precision() const
{
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Confusion::recall() const
{
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Confusion::fscore() const
{
  auto const p = precision();
  auto const r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Confusion confusion(std::map<NodeId, NodeClass> const &predicted,
                    std::map<NodeId, NodeClass> const &truth)
{
  if (predicted.size() != truth.size())
  {
    throw Error(Errc::KeyMismatch, "prediction and truth sizes differ");
  }
  Confusion c;
  auto pi = predicted.begin();
  for (auto const &[id, actual] : truth)
  {
    if (pi->first != id)
    {
      throw Error(Errc::KeyMismatch, id.short_hex());
    }
    bool const flagged = pi->second == NodeClass::Malicious;
    bool const bad = actual == NodeClass::Malicious;
    if (flagged && bad)
    {
      ++c.tp;
    }
    else if (flagged)
    {
      ++c.fp;
    }
    else if (bad)
    {
      ++c.fn;
    }
    else
    {
      ++c.tn;
    }
    ++pi;
  }
  return c;
}

double fscore(std::map<NodeId, NodeClass> const &predicted, std::map<NodeId, NodeClass> const &truth)
{
  return confusion(predicted, truth).fscore();
}

}  // namespace tangletrs
