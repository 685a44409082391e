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

#include "internal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <set>

namespace tangletrs {

namespace sim {

double median(std::vector<double> values)
{
  if (values.empty())
  {
    return 0.0;
  }
  std::sort(values.begin(), values.end());
  auto const n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

/// Attempts until the first success of a Bernoulli(p) trial.
std::uint64_t geometric_attempts(Rng &rng, double p)
{
  auto const u = 1.0 - uniform01(rng);  // (0, 1]
  return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p))) + 1;
}

namespace {

ScenarioResult empty_result(SimConfig const &config)
{
  ScenarioResult result{MetricsReport{}, TangleState{}, ChainState{}};
  auto &report = result.report;
  report.seed = config.seed;
  report.experiment = std::string{to_string(config.experiment)};
  report.config_digest = config_digest(config).hex();
  report.protections = config.protections;
  return result;
}

}  // namespace

ScenarioResult run_liveness_experiment(SimConfig const &config)
{
  auto result = empty_result(config);
  auto &report = result.report;
  auto const &params = config.liveness;
  std::vector<double> wta;
  std::vector<double> sw;
  std::uint64_t sw_leads = 0;
  std::uint64_t wta_leads = 0;
  std::uint64_t elapsed = 0;
  for (std::uint32_t i = 0; i < params.trials; ++i)
  {
    auto const seed = config.seed * 1000003 + i;
    auto a = run_liveness(params, MiningMode::WinnerTakeAll, seed);
    auto b = run_liveness(params, MiningMode::SlidingWindow, seed);
    wta.push_back(static_cast<double>(a.balance_ticks));
    sw.push_back(static_cast<double>(b.balance_ticks));
    wta_leads += a.honest_lead_block ? 1 : 0;
    sw_leads += b.honest_lead_block ? 1 : 0;
    elapsed = std::max({elapsed, a.balance_ticks, b.balance_ticks});
  }
  auto const wta_median = median(wta);
  auto const sw_median = median(sw);
  report.elapsed_ticks = elapsed;
  report.metrics["trials"] = params.trials;
  report.metrics["wta_median_balance_ticks"] = wta_median;
  report.metrics["sw_median_balance_ticks"] = sw_median;
  report.metrics["balance_ratio"] = sw_median > 0.0 ? wta_median / sw_median : 0.0;
  report.metrics["wta_honest_lead_within_horizon"] = static_cast<double>(wta_leads);
  report.metrics["sw_honest_lead_within_horizon"] = static_cast<double>(sw_leads);
  report.attacks[AttackKind::Liveness] =
    AttackOutcome{params.trials, params.trials - sw_leads};
  report.notes["liveness_model"] =
    "abstract fork race: two honest camps, attacker releases held solutions to equalize";
  return result;
}

ScenarioResult run_double_spend_experiment(SimConfig const &config)
{
  auto result = empty_result(config);
  auto &report = result.report;
  auto const &params = config.double_spend;
  std::uint64_t plain_attacker = 0;
  std::uint64_t plain_honest = 0;
  std::uint64_t inflow_honest = 0;
  std::uint64_t inflow_attacker = 0;
  for (std::uint32_t i = 0; i < params.trials; ++i)
  {
    auto const seed = config.seed * 1000003 + i;
    auto plain = run_double_spend(params, false, seed);
    auto inflow = run_double_spend(params, true, seed);
    plain_attacker += plain.attacker_confirmed ? 1 : 0;
    plain_honest += plain.honest_confirmed ? 1 : 0;
    inflow_honest += inflow.honest_confirmed ? 1 : 0;
    inflow_attacker += inflow.attacker_confirmed ? 1 : 0;
  }
  report.elapsed_ticks = params.ticks;
  report.metrics["trials"] = params.trials;
  report.metrics["no_dumb_attacker_confirmed"] = static_cast<double>(plain_attacker);
  report.metrics["no_dumb_honest_confirmed"] = static_cast<double>(plain_honest);
  report.metrics["dumb_inflow_honest_confirmed"] = static_cast<double>(inflow_honest);
  report.metrics["dumb_inflow_attacker_confirmed"] = static_cast<double>(inflow_attacker);
  return result;
}

ScenarioResult run_scalability_experiment(SimConfig const &config)
{
  auto result = empty_result(config);
  auto &report = result.report;
  auto const &params = config.throughput;
  double base = 0.0;
  double worst = 0.0;
  bool first = true;
  for (auto k : params.node_counts)
  {
    auto point = run_throughput(params, k, config.seed);
    report.tps["nodes_" + std::to_string(k)] = point.tps;
    report.metrics["issued_nodes_" + std::to_string(k)] = static_cast<double>(point.issued);
    report.metrics["confirmed_nodes_" + std::to_string(k)] = static_cast<double>(point.confirmed);
    if (k == 1)
    {
      base = point.tps;
    }
    if (base > 0.0)
    {
      auto const ratio = point.tps / (k * base);
      worst = first ? ratio : std::min(worst, ratio);
      first = false;
    }
  }
  report.elapsed_ticks = params.ticks;
  report.metrics["min_scaling_ratio"] = worst;
  return result;
}

}  // namespace sim

std::string_view to_string(MiningMode m)
{
  return m == MiningMode::WinnerTakeAll ? "winner_take_all" : "sliding_window";
}

LivenessTrace run_liveness(LivenessParams const &params, MiningMode mode, std::uint64_t seed)
{
  auto rng = make_rng(seed, sim::kLivenessStream + static_cast<std::uint64_t>(mode) * 16);
  bool const sliding = mode == MiningMode::SlidingWindow;
  // Work is counted in solutions; a block needs F of them when sliding.
  std::uint64_t const per_block = sliding ? params.relaxation : 1;
  double const ticks = static_cast<double>(params.block_ticks);
  double const camp_p = (1.0 - params.attacker_share) / 2.0 * per_block / ticks;
  double const attacker_p = params.attacker_share * per_block / ticks;

  std::array<std::uint64_t, 2> work{0, 0};
  auto height = [&](std::size_t f) { return work[f] / per_block; };
  // Held solutions, oldest first, tagged with the fork height they anchor to.
  std::deque<std::uint64_t> stash;
  auto usable = [&](std::uint64_t anchor, std::size_t fork) {
    return !sliding || anchor + 3 >= height(fork);
  };

  LivenessTrace trace;
  for (std::uint64_t t = 0; t < params.hold_ticks; ++t)
  {
    if (bernoulli(rng, attacker_p))
    {
      stash.push_back(0);
    }
  }

  std::uint64_t age = 0;
  bool broken = false;
  for (std::uint64_t t = 1; t <= params.max_ticks; ++t)
  {
    for (std::size_t c = 0; c < 2; ++c)
    {
      if (bernoulli(rng, camp_p))
      {
        ++work[c];
      }
    }
    if (bernoulli(rng, attacker_p))
    {
      stash.push_back(std::min(height(0), height(1)));
    }
    while (!stash.empty() && !usable(stash.front(), 0) && !usable(stash.front(), 1))
    {
      stash.pop_front();
    }
    if (work[0] != work[1])
    {
      std::size_t const lag = work[0] < work[1] ? 0 : 1;
      while (work[lag] < work[1 - lag] && !stash.empty() && usable(stash.front(), lag))
      {
        stash.pop_front();
        ++work[lag];
        ++trace.attacker_releases;
      }
    }
    if (work[0] != work[1])
    {
      if (++age > params.latency_ticks)
      {
        trace.balance_ticks = t;
        broken = true;
        break;
      }
    }
    else
    {
      age = 0;
    }
  }
  if (!broken)
  {
    trace.balance_ticks = params.max_ticks;
    trace.capped = true;
    return trace;
  }

  // Honest miners converge on the heavier fork; the attacker backs the other.
  std::size_t const honest = work[0] > work[1] ? 0 : 1;
  std::size_t const backed = 1 - honest;
  std::optional<std::uint64_t> lead_since = height(honest);
  while (height(honest) < params.horizon_blocks)
  {
    for (int c = 0; c < 2; ++c)
    {
      if (bernoulli(rng, camp_p))
      {
        ++work[honest];
      }
    }
    if (bernoulli(rng, attacker_p))
    {
      ++work[backed];
    }
    while (!stash.empty() && usable(stash.front(), backed) && work[backed] <= work[honest])
    {
      stash.pop_front();
      ++work[backed];
      ++trace.attacker_releases;
    }
    while (!stash.empty() && !usable(stash.front(), backed))
    {
      stash.pop_front();
    }
    if (work[honest] <= work[backed])
    {
      lead_since.reset();
    }
    else if (!lead_since)
    {
      lead_since = height(honest);
    }
  }
  if (lead_since && *lead_since <= params.horizon_blocks && work[honest] > work[backed])
  {
    trace.honest_lead_block = std::max<std::uint64_t>(*lead_since, 1);
  }
  return trace;
}

DoubleSpendOutcome run_double_spend(DoubleSpendParams const &params, bool dumb_inflow,
                                    std::uint64_t seed)
{
  auto rng = make_rng(seed, sim::kDoubleSpendStream);
  TangleState tangle;
  unsigned const bits = tangle.config().min_pow_bits;
  MessageAuthor honest{KeyPair::derive("sim/ds/honest", seed)};
  MessageAuthor attacker{KeyPair::derive("sim/ds/attacker", seed)};
  MessageAuthor miner{KeyPair::derive("sim/ds/miner", seed)};
  OutputRef const contested{sha3_512({as_bytes("sim/ds/output"), as_bytes(std::to_string(seed))}), 0};

  // Both spends approve the same pre-conflict tips, so neither branch
  // contains the other.
  auto const base = tangle.select_tips(rng);
  auto spend = [&](MessageAuthor &who, std::string_view memo) {
    MessageDraft d;
    d.parents = base;
    d.payload = Bytes(memo.begin(), memo.end());
    d.spends = {contested};
    auto msg = who.emit(std::move(d), bits);
    tangle.attach_message(msg);
    return msg.id();
  };
  auto const honest_spend = spend(honest, "pay merchant");
  auto const attacker_spend = spend(attacker, "pay self");

  std::set<HashDigest> attacker_branch{attacker_spend};
  TangleState::TipFilter const honest_view = [&](HashDigest const &id) {
    return !attacker_branch.contains(id);
  };
  TangleState::TipFilter const attacker_view = [&](HashDigest const &id) {
    return attacker_branch.contains(id);
  };

  enum class Actor : std::uint8_t { Honest, Attacker, Miner };
  for (std::uint64_t t = 1; t <= params.ticks; ++t)
  {
    std::vector<Actor> arrivals;
    arrivals.insert(arrivals.end(), params.honest_rate, Actor::Honest);
    arrivals.insert(arrivals.end(), params.attacker_rate, Actor::Attacker);
    if (dumb_inflow)
    {
      arrivals.insert(arrivals.end(), params.dumb_rate, Actor::Miner);
    }
    for (std::size_t i = arrivals.size(); i > 1; --i)
    {
      std::swap(arrivals[i - 1], arrivals[uniform_index(rng, i)]);
    }
    for (auto who : arrivals)
    {
      MessageDraft d;
      d.timestamp = t;
      d.kind = who == Actor::Miner ? MessageKind::Dumb : MessageKind::Normal;
      d.parents = tangle.select_tips(rng, who == Actor::Attacker ? attacker_view : honest_view);
      auto &author = who == Actor::Honest ? honest : who == Actor::Attacker ? attacker : miner;
      auto msg = author.emit(std::move(d), bits);
      tangle.attach_message(msg);
      if (who == Actor::Attacker)
      {
        attacker_branch.insert(msg.id());
      }
    }
  }

  DoubleSpendOutcome out;
  auto const res = tangle.resolve_conflicts(params.confirmation_threshold);
  for (auto const &c : res.outcomes)
  {
    if (c.output == contested && c.winner)
    {
      out.honest_confirmed = *c.winner == honest_spend;
      out.attacker_confirmed = *c.winner == attacker_spend;
    }
  }
  out.honest_weight = tangle.cumulative_weight(honest_spend);
  out.attacker_weight = tangle.cumulative_weight(attacker_spend);
  out.messages = tangle.size();
  return out;
}

ThroughputPoint run_throughput(ThroughputParams const &params, std::uint32_t nodes,
                               std::uint64_t seed)
{
  if (nodes == 0)
  {
    throw Error(Errc::InvalidArgument, "throughput needs at least one node");
  }
  auto sched = make_rng(seed, sim::kThroughputStream);
  auto tips = make_rng(seed, sim::kTipStream);
  TangleState tangle;
  unsigned const bits = tangle.config().min_pow_bits;
  double const p = std::ldexp(1.0, -static_cast<int>(params.difficulty_bits));

  std::vector<MessageAuthor> authors;
  std::vector<std::uint64_t> remaining;
  std::vector<std::uint64_t> last_arrival(nodes, 0);
  for (std::uint32_t i = 0; i < nodes; ++i)
  {
    authors.push_back(MessageAuthor{KeyPair::derive("sim/throughput", seed, i)});
    remaining.push_back(sim::geometric_attempts(sched, p));
  }
  std::map<std::uint64_t, std::vector<TangleMessage>> in_flight;

  ThroughputPoint point;
  point.nodes = nodes;
  for (std::uint64_t t = 1; t <= params.ticks; ++t)
  {
    if (auto it = in_flight.find(t); it != in_flight.end())
    {
      for (auto const &msg : it->second)
      {
        tangle.attach_message(msg);
      }
      in_flight.erase(it);
    }
    for (std::uint32_t i = 0; i < nodes; ++i)
    {
      auto budget = params.hash_rate;
      while (remaining[i] <= budget)
      {
        budget -= remaining[i];
        remaining[i] = sim::geometric_attempts(sched, p);
        MessageDraft d;
        d.parents = tangle.select_tips(tips);
        d.timestamp = t;
        auto const latency = 1 + uniform_index(sched, std::max<std::uint64_t>(params.max_latency_ticks, 1));
        // Per-sender FIFO delivery keeps sequence numbers in order.
        auto const arrival = std::max(t + latency, last_arrival[i]);
        last_arrival[i] = arrival;
        in_flight[arrival].push_back(authors[i].emit(std::move(d), bits));
        ++point.issued;
      }
      remaining[i] -= budget;
    }
  }
  for (auto const &id : tangle.attachment_order())
  {
    if (id != tangle.genesis_id() && tangle.weight_at_least(id, params.confirmation_threshold))
    {
      ++point.confirmed;
    }
  }
  point.tps = static_cast<double>(point.confirmed) / static_cast<double>(params.ticks);
  return point;
}

WorkConservation measure_work_conservation(unsigned base_bits, std::vector<unsigned> const &factors,
                                           std::uint32_t trials, std::uint64_t seed)
{
  struct Target
  {
    unsigned factor;
    unsigned bits;
  };
  std::vector<Target> targets;
  for (auto f : factors)
  {
    if (f == 0 || !std::has_single_bit(f) || static_cast<unsigned>(std::countr_zero(f)) >= base_bits)
    {
      throw Error(Errc::InvalidRelaxation, "factor " + std::to_string(f));
    }
    targets.push_back({f, base_bits - static_cast<unsigned>(std::countr_zero(f))});
  }

  WorkConservation out;
  out.base_bits = base_bits;
  double baseline_total = 0.0;
  std::vector<double> relaxed_total(targets.size(), 0.0);
  for (std::uint32_t trial = 0; trial < trials; ++trial)
  {
    Encoder e;
    e.str("sim/work-conservation").u64(seed).u32(trial);
    Sha3 prefix;
    prefix.update(e.take());
    Sha3 work;
    std::optional<std::uint64_t> baseline;
    std::vector<std::uint64_t> hits(targets.size(), 0);
    std::vector<std::optional<std::uint64_t>> done(targets.size());
    std::size_t pending = targets.size() + 1;
    for (std::uint64_t nonce = 0; pending > 0; ++nonce)
    {
      Encoder n;
      n.u64(nonce);
      prefix.fork_into(work);
      work.update(n.data());
      auto const zeros = work.finish().leading_zero_bits();
      if (!baseline && zeros >= base_bits)
      {
        baseline = nonce + 1;
        --pending;
      }
      for (std::size_t i = 0; i < targets.size(); ++i)
      {
        if (!done[i] && zeros >= targets[i].bits && ++hits[i] == targets[i].factor)
        {
          done[i] = nonce + 1;
          --pending;
        }
      }
    }
    baseline_total += static_cast<double>(*baseline);
    for (std::size_t i = 0; i < targets.size(); ++i)
    {
      relaxed_total[i] += static_cast<double>(*done[i]);
    }
  }
  auto const n = static_cast<double>(std::max<std::uint32_t>(trials, 1));
  out.baseline_mean = baseline_total / n;
  for (std::size_t i = 0; i < targets.size(); ++i)
  {
    out.relaxed_mean[targets[i].factor] = relaxed_total[i] / n;
  }
  return out;
}

}  // namespace tangletrs
