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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include "tangletrs/bench.hpp"
#include "tangletrs/ledger.hpp"
#include "tangletrs/reputation.hpp"
#include "tangletrs/simnet.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace tangletrs;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict
{
  bool pass{false};
  std::string detail;
};

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3)
{
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

//------------------------------------------------------------------------------

Verdict pow_statistics()
{
  auto const start = Clock::now();
  std::uint64_t total = 0;
  constexpr int kRuns = 1000;
  for (int i = 0; i < kRuns; ++i)
  {
    Encoder payload;
    payload.str("acceptance/pow").u32(static_cast<std::uint32_t>(i));
    total += pow_solve(payload.take(), 8).attempts;
  }
  auto const mean = static_cast<double>(total) / kRuns;
  auto const secs = seconds_since(start);
  return {mean >= 218.0 && mean <= 294.0 && secs < 30.0,
          "mean attempts " + fmt(mean, 1) + " in [218, 294], " + fmt(secs, 1) + "s < 30s"};
}

Verdict work_conservation()
{
  auto const start = Clock::now();
  auto w = measure_work_conservation(16, {2, 4, 8, 16}, 500, 1);
  auto const secs = seconds_since(start);
  bool ok = secs < 120.0;
  std::string detail = "baseline " + fmt(w.baseline_mean, 0);
  for (auto const &[f, mean] : w.relaxed_mean)
  {
    auto const ratio = mean / w.baseline_mean;
    ok = ok && std::abs(ratio - 1.0) <= 0.10;
    detail += ", F=" + std::to_string(f) + " ratio " + fmt(ratio);
  }
  return {ok, detail + ", " + fmt(secs, 1) + "s < 120s"};
}

Verdict throughput_ordering()
{
  auto const pow15 = run_bench({BenchClass::Pow15, 1, 5.0, 1}).tps;
  auto const pow20 = run_bench({BenchClass::Pow20, 1, 5.0, 1}).tps;
  auto const weak = run_bench({BenchClass::WeakReq, 1, 5.0, 1}).tps;
  bool const ok = weak > pow15 && pow15 > pow20 && weak >= 10.0 * pow15;
  return {ok, "weakreq " + fmt(weak, 1) + " > pow15 " + fmt(pow15, 2) + " > pow20 " + fmt(pow20, 2) +
                ", weakreq/pow15 " + fmt(pow15 > 0.0 ? weak / pow15 : 0.0, 1) + " >= 10"};
}

Verdict scalability_shape()
{
  auto const start = Clock::now();
  SimConfig c;
  c.experiment = Experiment::Scalability;
  auto r = run_scenario(c).report;
  auto const secs = seconds_since(start);
  auto const base = r.tps.at("nodes_1");
  bool ok = base > 0.0 && secs < 120.0;
  std::string detail;
  for (auto k : c.throughput.node_counts)
  {
    auto const tps = r.tps.at("nodes_" + std::to_string(k));
    ok = ok && tps >= 0.8 * k * base;
    detail += "TPS(" + std::to_string(k) + ")=" + fmt(tps, 2) + " ";
  }
  return {ok, detail + "each >= 0.8*k*TPS(1), " + fmt(secs, 1) + "s < 120s"};
}

Verdict liveness_attack()
{
  auto const start = Clock::now();
  SimConfig c;
  c.experiment = Experiment::Liveness;
  auto const &m = run_scenario(c).report.metrics;
  auto const secs = seconds_since(start);
  auto const wta = m.at("wta_median_balance_ticks");
  auto const sw = m.at("sw_median_balance_ticks");
  auto const leads = m.at("sw_honest_lead_within_horizon");
  bool const ok = wta >= 5.0 * sw && leads >= 19.0 && secs < 300.0;
  return {ok, "median balance WTA " + fmt(wta, 1) + " >= 5 x SW " + fmt(sw, 1) +
                ", SW honest lead within 50 blocks " + fmt(leads, 0) + "/20 >= 19, " + fmt(secs, 1) +
                "s < 300s"};
}

Verdict double_spend_defense()
{
  SimConfig c;
  c.experiment = Experiment::DoubleSpend;
  auto const &m = run_scenario(c).report.metrics;
  auto const trials = m.at("trials");
  auto const plain_attacker = m.at("no_dumb_attacker_confirmed");
  auto const inflow_honest = m.at("dumb_inflow_honest_confirmed");
  bool const ok = trials == 20.0 && plain_attacker == trials && inflow_honest == trials;
  return {ok, "without dumb inflow attacker wins " + fmt(plain_attacker, 0) + "/20, with inflow honest confirmed " +
                fmt(inflow_honest, 0) + "/20"};
}

Verdict attack_mitigation()
{
  auto const start = Clock::now();
  auto r = run_scenario(SimConfig{}).report;
  auto const secs = seconds_since(start);
  auto const &a = r.attacks;
  auto const &m = r.metrics;
  auto const slander = a.at(AttackKind::Slandering);
  auto const unacked = m.contains("slandering_rejected_unacked") ? m.at("slandering_rejected_unacked") : 0.0;
  bool ok = secs < 180.0;
  ok = ok && a.at(AttackKind::Replay).attempts > 0 && a.at(AttackKind::Replay).successes == 0;
  ok = ok && a.at(AttackKind::BallotStuffing).attempts > 0 && a.at(AttackKind::BallotStuffing).successes == 0;
  ok = ok && a.at(AttackKind::Whitewashing).attempts > 0 && m.at("whitewashing_max_start_average") == 0.0 &&
       m.at("whitewashing_max_start_netflow") == 0.0;
  ok = ok && slander.attempts > 0 && slander.successes == 0 &&
       unacked == static_cast<double>(slander.attempts);
  ok = ok && a.at(AttackKind::AppDoS).attempts > 0 && a.at(AttackKind::AppDoS).successes == 0;
  ok = ok && a.at(AttackKind::WeakReqAbuse).attempts > 0 && a.at(AttackKind::WeakReqAbuse).successes == 0;
  std::ostringstream d;
  d << "replay " << a.at(AttackKind::Replay).successes << "/" << a.at(AttackKind::Replay).attempts
    << ", ballot " << a.at(AttackKind::BallotStuffing).successes << "/"
    << a.at(AttackKind::BallotStuffing).attempts << ", whitewash start avg "
    << m.at("whitewashing_max_start_average") << " netflow " << m.at("whitewashing_max_start_netflow")
    << ", slander rejected unacked " << unacked << "/" << slander.attempts << ", app_dos "
    << a.at(AttackKind::AppDoS).successes << "/" << a.at(AttackKind::AppDoS).attempts
    << ", weakreq_abuse served " << a.at(AttackKind::WeakReqAbuse).successes << "/"
    << a.at(AttackKind::WeakReqAbuse).attempts << ", " << fmt(secs, 1) << "s < 180s";
  return {ok, d.str()};
}

/// Recomputes the average aggregator's confusion and mean F-score from the
/// feedback carried by the Tangle and the planted cohorts.
bool average_score_exact(ScenarioResult const &run, double threshold)
{
  std::map<NodeId, std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>>> sums;
  for (auto const &fb : ledger_feedback(run.tangle))
  {
    auto &[sum, count] = sums[fb.subject][fb.rater];
    sum += fb.rating_milli;
    ++count;
  }
  std::map<std::string, double> averages;
  for (auto const &[subject, raters] : sums)
  {
    double total = 0.0;
    for (auto const &[rater, acc] : raters)
    {
      total += static_cast<double>(acc.first) / static_cast<double>(acc.second) / 1000.0;
    }
    averages[subject.short_hex()] = total / static_cast<double>(raters.size());
  }

  auto const &rows = run.report.nodes;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double fsum = 0.0;
  std::size_t evaluators = 0;
  for (auto const &e : rows)
  {
    if (!e.evaluator)
    {
      continue;
    }
    ++evaluators;
    std::uint64_t etp = 0, efp = 0, efn = 0, etn = 0;
    for (auto const &s : rows)
    {
      if (&s == &e)
      {
        continue;
      }
      auto it = averages.find(s.id);
      auto const avg = it == averages.end() ? 0.0 : it->second;
      if (avg != s.average)
      {
        return false;
      }
      bool const flagged = !(avg > threshold);
      bool const bad = s.cohort != "honest";
      (flagged ? (bad ? etp : efp) : (bad ? efn : etn))++;
    }
    // F = 2PR / (P + R)
    double const p = etp + efp == 0 ? 0.0 : static_cast<double>(etp) / static_cast<double>(etp + efp);
    double const r = etp + efn == 0 ? 0.0 : static_cast<double>(etp) / static_cast<double>(etp + efn);
    fsum += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    tp += etp;
    fp += efp;
    fn += efn;
    tn += etn;
  }
  auto const &score = run.report.fscore.at("average");
  auto const &c = score.pooled;
  return evaluators > 0 && c.tp == tp && c.fp == fp && c.fn == fn && c.tn == tn &&
         std::abs(score.fscore - fsum / static_cast<double>(evaluators)) < 1e-12;
}

/// Pooled confusion totals must match the planted cohorts for every aggregator.
bool totals_match_truth(MetricsReport const &r)
{
  std::uint64_t bad = 0;
  std::uint64_t good = 0;
  std::uint64_t evaluators = 0;
  for (auto const &n : r.nodes)
  {
    (n.cohort == "honest" ? good : bad)++;
    evaluators += n.evaluator ? 1 : 0;
  }
  for (auto const &[name, score] : r.fscore)
  {
    auto const &c = score.pooled;
    if (c.tp + c.fn != bad * evaluators || c.fp + c.tn != (good - 1) * evaluators)
    {
      return false;
    }
  }
  return evaluators > 0;
}

Verdict trs_evaluation()
{
  auto const start = Clock::now();
  int exact = 0;
  int avg_better = 0;
  int flow_better = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    SimConfig on;
    on.seed = seed;
    SimConfig off = on;
    off.protections = false;
    auto const a = run_scenario(on);
    auto const b = run_scenario(off);
    if (average_score_exact(a, on.trust_threshold) && average_score_exact(b, off.trust_threshold) &&
        totals_match_truth(a.report) && totals_match_truth(b.report))
    {
      ++exact;
    }
    auto const fa = a.report.fscore.at("average").fscore;
    auto const fb = b.report.fscore.at("average").fscore;
    auto const na = a.report.fscore.at("netflow").fscore;
    auto const nb = b.report.fscore.at("netflow").fscore;
    avg_better += fa > fb ? 1 : 0;
    flow_better += na > nb ? 1 : 0;
    std::cerr << "  seed " << seed << " average " << fmt(fa, 4) << " vs " << fmt(fb, 4) << ", netflow "
              << fmt(na, 4) << " vs " << fmt(nb, 4) << '\n';
  }
  auto const secs = seconds_since(start);
  bool const ok = exact == 10 && avg_better >= 9 && flow_better >= 9 && secs < 600.0;
  return {ok, "exact F-score " + std::to_string(exact) + "/10, protected beats unprotected: average " +
                std::to_string(avg_better) + "/10, netflow " + std::to_string(flow_better) +
                "/10 (>= 9), " + fmt(secs, 1) + "s < 600s"};
}

/// Max-flow by min-cut enumeration over every source-side vertex set.
std::uint64_t min_cut(std::uint32_t n, std::vector<std::vector<std::uint64_t>> const &cap,
                      std::uint32_t s, std::uint32_t t)
{
  std::uint64_t best = UINT64_MAX;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
  {
    if (!(mask & (1u << s)) || (mask & (1u << t)))
    {
      continue;
    }
    std::uint64_t cut = 0;
    for (std::uint32_t u = 0; u < n; ++u)
    {
      for (std::uint32_t v = 0; v < n; ++v)
      {
        if ((mask & (1u << u)) && !(mask & (1u << v)))
        {
          cut += cap[u][v];
        }
      }
    }
    best = std::min(best, cut);
  }
  return best;
}

/// Compares netflow_score with the oracle for every (evaluator, subject) pair.
int netflow_mismatches(std::vector<std::vector<std::uint64_t>> const &cap,
                       std::vector<NodeId> const &ids)
{
  auto const n = static_cast<std::uint32_t>(cap.size());
  InteractionGraph graph;
  std::vector<std::uint64_t> out(n, 0);
  for (std::uint32_t u = 0; u < n; ++u)
  {
    graph.add_vertex(ids[u]);
    for (std::uint32_t v = 0; v < n; ++v)
    {
      if (u != v && cap[u][v] > 0)
      {
        graph.add(ids[u], ids[v], cap[u][v]);
        out[u] += cap[u][v];
      }
    }
  }
  FlowNetwork net{graph};
  int bad = 0;
  for (std::uint32_t e = 0; e < n; ++e)
  {
    for (std::uint32_t s = 0; s < n; ++s)
    {
      if (s == e)
      {
        continue;
      }
      double expected = 0.0;
      if (out[e] > 0)
      {
        expected = std::min(1.0, static_cast<double>(min_cut(n, cap, s, e)) / static_cast<double>(out[e]));
      }
      bad += net.netflow_score(ids[e], ids[s]) == expected ? 0 : 1;
    }
  }
  return bad;
}

Verdict netflow_oracle()
{
  std::vector<NodeId> ids;
  for (std::uint32_t i = 0; i < 5; ++i)
  {
    ids.push_back(KeyPair::derive("acceptance/netflow", i).id());
  }
  auto decode = [](std::uint32_t n, std::uint64_t code, std::uint64_t base) {
    std::vector<std::vector<std::uint64_t>> cap(n, std::vector<std::uint64_t>(n, 0));
    for (std::uint32_t u = 0; u < n; ++u)
    {
      for (std::uint32_t v = 0; v < n; ++v)
      {
        if (u != v)
        {
          cap[u][v] = code % base;
          code /= base;
        }
      }
    }
    return cap;
  };
  std::uint64_t graphs = 0;
  int bad = 0;
  // Every graph on 2 and 3 vertices with capacities 0..4.
  for (std::uint64_t code = 0; code < 25; ++code, ++graphs)
  {
    bad += netflow_mismatches(decode(2, code, 5), ids);
  }
  for (std::uint64_t code = 0; code < 15625; ++code, ++graphs)
  {
    bad += netflow_mismatches(decode(3, code, 5), ids);
  }
  // Every 4-vertex graph with capacities 0..1.
  for (std::uint64_t code = 0; code < 4096; ++code, ++graphs)
  {
    bad += netflow_mismatches(decode(4, code, 2), ids);
  }
  // Seeded 4- and 5-vertex graphs with capacities 0..4.
  auto rng = make_rng(9);
  for (int i = 0; i < 10000; ++i, ++graphs)
  {
    std::uint32_t const n = 4 + static_cast<std::uint32_t>(i % 2);
    std::uint64_t code = 0;
    for (std::uint32_t k = 0; k < n * (n - 1); ++k)
    {
      code = code * 5 + uniform_index(rng, 5);
    }
    bad += netflow_mismatches(decode(n, code, 5), ids);
  }
  return {bad == 0 && graphs >= 10000,
          std::to_string(graphs) + " graphs, " + std::to_string(bad) + " mismatches"};
}

struct Capture
{
  std::string report;
  std::string csvs;
  std::string snapshot;

  bool operator==(Capture const &) const = default;
};

Capture capture(SimConfig const &c)
{
  auto r = run_scenario(c);
  std::ostringstream snap;
  write_snapshot(snap, r.tangle, r.chain);
  return {report_json(r.report), tps_csv(r.report) + fscore_csv(r.report) + attacks_csv(r.report),
          snap.str()};
}

Verdict determinism()
{
  std::vector<std::pair<std::string, SimConfig>> configs;
  configs.emplace_back("mixed", SimConfig{});
  SimConfig unprotected;
  unprotected.seed = 3;
  unprotected.protections = false;
  configs.emplace_back("mixed-unprotected", unprotected);
  for (auto e : {Experiment::Liveness, Experiment::DoubleSpend, Experiment::Scalability})
  {
    SimConfig c;
    c.seed = 5;
    c.experiment = e;
    configs.emplace_back(std::string{to_string(e)}, c);
  }
  bool ok = true;
  std::string detail;
  for (auto const &[name, config] : configs)
  {
    bool const same = capture(config) == capture(config);
    ok = ok && same;
    detail += name + (same ? " identical, " : " DIFFERS, ");
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace

int main(int argc, char **argv)
{
  std::vector<int> only;
  CLI::App app{"Acceptance criteria runner"};
  app.add_option("--only", only, "Criterion numbers to run (default all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::function<Verdict()>>> const criteria = {
    {"PoW statistics at 8 bits", pow_statistics},
    {"relaxed-solution work conservation", work_conservation},
    {"throughput ordering WeakReq > Pow15 > Pow20", throughput_ordering},
    {"linear throughput scaling", scalability_shape},
    {"liveness attack under sliding-window mining", liveness_attack},
    {"double-spend defense by dumb inflow", double_spend_defense},
    {"attack mitigation suite", attack_mitigation},
    {"TRS evaluation against the unprotected baseline", trs_evaluation},
    {"NetFlow oracle equivalence", netflow_oracle},
    {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    auto const number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end())
    {
      continue;
    }
    Verdict v;
    try
    {
      v = criteria[i].second();
    }
    catch (std::exception const &e)
    {
      v = {false, std::string{"threw: "} + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << number << ". " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
