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

#include "tangletrs/ledger.hpp"
#include "tangletrs/simnet.hpp"

#include <sstream>

using namespace tangletrs;

namespace {

SimConfig small_world(std::uint64_t seed)
{
  SimConfig c;
  c.seed = seed;
  c.n_honest = 24;
  c.n_malicious = 20;
  c.n_evaluators = 6;
  c.n_miners = 2;
  c.n_devices = 2;
  c.duration_ticks = 12;
  c.warmup_ticks = 4;
  c.attack_mix = full_attack_mix(4);
  c.liveness.hold_ticks = 200;
  c.liveness.max_ticks = 2000;
  return c;
}

SimConfig parse(std::string const &text)
{
  std::istringstream in{text};
  return parse_config(in);
}

Errc parse_error(std::string const &text)
{
  try
  {
    parse(text);
  }
  catch (Error const &e)
  {
    return e.code();
  }
  return Errc::Ok;
}

}  // namespace

TEST_CASE("config parses dotted keys over the defaults")
{
  auto c = parse("# comment\nseed = 7\nn_honest=40\nweakreq.escalation.factor = 3\n"
                 "n_evaluators = 10\nthroughput.node_counts = 1,4\nattack.all = 2\nattack.replay = 0\nprotections = off\n");
  CHECK(c.seed == 7);
  CHECK(c.n_honest == 40);
  CHECK(c.escalation.factor == doctest::Approx(3.0));
  CHECK(c.throughput.node_counts == std::vector<std::uint32_t>{1, 4});
  CHECK(c.attack_mix.at(AttackKind::Sybil) == 2);
  CHECK_FALSE(c.attack_mix.contains(AttackKind::Replay));
  CHECK_FALSE(c.protections);
  CHECK(c.n_malicious == 200);
}

TEST_CASE("config errors are ConfigInvalid")
{
  CHECK(parse_error("bogus = 1\n") == Errc::ConfigInvalid);
  CHECK(parse_error("seed = 1\nseed = 2\n") == Errc::ConfigInvalid);
  CHECK(parse_error("seed\n") == Errc::ConfigInvalid);
  CHECK(parse_error("seed = -3\n") == Errc::ConfigInvalid);
  CHECK(parse_error("trust_threshold = 1.5\n") == Errc::ConfigInvalid);
  CHECK(parse_error("liveness.attacker_share = 0.6\n") == Errc::ConfigInvalid);
  CHECK(parse_error("liveness.relaxation = 3\n") == Errc::ConfigInvalid);
  CHECK(parse_error("weakreq.n_msg = 0\n") == Errc::ConfigInvalid);
  CHECK(parse_error("n_evaluators = 400\n") == Errc::ConfigInvalid);
  CHECK(parse_error("attack.unknown = 1\n") == Errc::ConfigInvalid);
  CHECK(parse_error("experiment = sideways\n") == Errc::ConfigInvalid);
  CHECK(parse_error("throughput.node_counts = 1,,2\n") == Errc::ConfigInvalid);
}

TEST_CASE("config error names the line")
{
  try
  {
    parse("seed = 1\n\nprice = 0\n");
    FAIL("expected ConfigInvalid");
  }
  catch (Error const &e)
  {
    CHECK(std::string{e.what()}.find("price") != std::string::npos);
  }
}

TEST_CASE("config text round-trips and the digest follows the content")
{
  auto c = small_world(3);
  std::istringstream in{config_text(c)};
  auto back = parse_config(in);
  CHECK(config_text(back) == config_text(c));
  CHECK(config_digest(back) == config_digest(c));
  back.seed = 4;
  CHECK(config_digest(back) != config_digest(c));
}

TEST_CASE("mixed world is deterministic per seed")
{
  auto c = small_world(11);
  auto a = run_scenario(c);
  auto b = run_scenario(c);
  CHECK(report_json(a.report) == report_json(b.report));
  CHECK(a.tangle.state_digest() == b.tangle.state_digest());
  CHECK(a.chain.state_digest() == b.chain.state_digest());

  c.seed = 12;
  auto other = run_scenario(c);
  CHECK(other.tangle.state_digest() != a.tangle.state_digest());
}

TEST_CASE("mixed world keeps supply and defeats scripted attacks")
{
  auto r = run_scenario(small_world(5));
  auto const &m = r.report.metrics;
  CHECK(m.at("supply_violations") == 0.0);
  CHECK(r.tangle.audit());
  for (auto kind : {AttackKind::Replay, AttackKind::BallotStuffing, AttackKind::Slandering,
                    AttackKind::AppDoS, AttackKind::WeakReqAbuse, AttackKind::NetworkDoS,
                    AttackKind::Whitewashing})
  {
    CAPTURE(to_string(kind));
    auto const &o = r.report.attacks.at(kind);
    CHECK(o.attempts == 4);
    CHECK(o.successes == 0);
  }
  CHECK(m.at("whitewashing_max_start_average") == 0.0);
  CHECK(m.at("whitewashing_max_start_netflow") == 0.0);
  for (auto const &[name, score] : r.report.fscore)
  {
    CAPTURE(name);
    CHECK(score.fscore >= 0.0);
    CHECK(score.fscore <= 1.0);
    auto const total = score.pooled.tp + score.pooled.fp + score.pooled.fn + score.pooled.tn;
    CHECK(total > 0);
  }
}

TEST_CASE("without malicious nodes the report flags no positives")
{
  auto c = small_world(2);
  c.n_malicious = 0;
  auto r = run_scenario(c);
  CHECK(r.report.no_positives);
  CHECK(r.report.attacks.empty());
  for (auto const &[name, score] : r.report.fscore)
  {
    CHECK(score.pooled.tp == 0);
    CHECK(score.pooled.fn == 0);
  }
}

TEST_CASE("unprotected baseline accepts forged feedback")
{
  auto c = small_world(8);
  c.protections = false;
  auto r = run_scenario(c);
  CHECK(r.report.attacks.at(AttackKind::Slandering).successes == 4);
  CHECK(r.report.attacks.at(AttackKind::SelfPromoting).successes == 4);
}

TEST_CASE("report CSVs parse back with provenance")
{
  auto r = run_scenario(small_world(9));
  auto const prov = csv_provenance(r.report);
  CHECK(prov.rfind("# seed=9 config=", 0) == 0);
  for (auto const &text : {tps_csv(r.report), fscore_csv(r.report), attacks_csv(r.report)})
  {
    std::istringstream in{text};
    auto table = parse_csv(in);
    CHECK(table.provenance == prov);
    CHECK_FALSE(table.header.empty());
    for (auto const &row : table.rows)
    {
      CHECK(row.size() == table.header.size());
    }
  }
  std::istringstream attacks{attacks_csv(r.report)};
  CHECK(parse_csv(attacks).rows.size() == r.report.attacks.size());
}

TEST_CASE("parse_csv rejects ragged rows and missing headers")
{
  std::istringstream ragged{"# seed=1 config=00\na,b\n1,2\n3\n"};
  CHECK_THROWS_AS(parse_csv(ragged), Error);
  std::istringstream empty{"# seed=1 config=00\n"};
  CHECK_THROWS_AS(parse_csv(empty), Error);
}

TEST_CASE("sliding window shortens the liveness stalemate")
{
  LivenessParams p;
  p.hold_ticks = 2000;
  std::vector<double> wta;
  std::vector<double> sw;
  for (std::uint64_t s = 1; s <= 7; ++s)
  {
    auto a = run_liveness(p, MiningMode::WinnerTakeAll, s);
    auto b = run_liveness(p, MiningMode::SlidingWindow, s);
    wta.push_back(static_cast<double>(a.balance_ticks));
    sw.push_back(static_cast<double>(b.balance_ticks));
    CHECK(b.honest_lead_block.has_value());
  }
  std::sort(wta.begin(), wta.end());
  std::sort(sw.begin(), sw.end());
  CHECK(wta[3] > sw[3]);
}

TEST_CASE("liveness race is deterministic per seed")
{
  LivenessParams p;
  p.hold_ticks = 500;
  auto a = run_liveness(p, MiningMode::SlidingWindow, 4);
  auto b = run_liveness(p, MiningMode::SlidingWindow, 4);
  CHECK(a.balance_ticks == b.balance_ticks);
  CHECK(a.honest_lead_block == b.honest_lead_block);
  CHECK(a.attacker_releases == b.attacker_releases);
}

TEST_CASE("dumb inflow lets the honest spend win")
{
  DoubleSpendParams p;
  int honest_wins = 0;
  int attacker_wins_without = 0;
  for (std::uint64_t s = 1; s <= 5; ++s)
  {
    auto with = run_double_spend(p, true, s);
    auto without = run_double_spend(p, false, s);
    CHECK_FALSE((with.honest_confirmed && with.attacker_confirmed));
    honest_wins += with.honest_confirmed ? 1 : 0;
    attacker_wins_without += without.attacker_confirmed ? 1 : 0;
    CHECK(with.messages > without.messages);
  }
  CHECK(honest_wins == 5);
  CHECK(attacker_wins_without == 5);
}

TEST_CASE("throughput grows with the node count")
{
  ThroughputParams p;
  p.ticks = 300;
  auto one = run_throughput(p, 1, 3);
  auto four = run_throughput(p, 4, 3);
  CHECK(one.confirmed <= one.issued);
  CHECK(four.confirmed <= four.issued);
  CHECK(four.tps > one.tps);
}

TEST_CASE("relaxed solutions cost about one full solution")
{
  auto w = measure_work_conservation(10, {2, 4}, 300, 1);
  CHECK(w.baseline_mean > 0.0);
  for (auto const &[f, mean] : w.relaxed_mean)
  {
    CAPTURE(f);
    CHECK(mean / w.baseline_mean == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("experiments dispatch from the config")
{
  auto c = small_world(1);
  c.experiment = Experiment::DoubleSpend;
  c.double_spend.trials = 3;
  auto r = run_scenario(c);
  CHECK(r.report.experiment == "double_spend");
  CHECK(r.report.metrics.at("trials") == 3.0);
  CHECK(r.report.metrics.contains("dumb_inflow_honest_confirmed"));
}
