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

#include "tangletrs/chain.hpp"
#include "tangletrs/reputation.hpp"
#include "tangletrs/tangle.hpp"
#include "tangletrs/trade.hpp"
#include "tangletrs/weakreq.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tangletrs {

//------------------------------------------------------------------------------
// Configuration
//------------------------------------------------------------------------------

enum class AttackKind : std::uint8_t
{
  Liveness,
  SelfPromoting,
  Whitewashing,
  Slandering,
  NetworkDoS,
  AppDoS,
  BallotStuffing,
  Sybil,
  Replay,
  WeakReqAbuse,
};

inline constexpr AttackKind kAllAttacks[] = {
  AttackKind::Liveness,   AttackKind::SelfPromoting, AttackKind::Whitewashing, AttackKind::Slandering,
  AttackKind::NetworkDoS, AttackKind::AppDoS,        AttackKind::BallotStuffing, AttackKind::Sybil,
  AttackKind::Replay,     AttackKind::WeakReqAbuse,
};

/// Config-file spelling, e.g. "ballot_stuffing".
std::string_view to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view name);

enum class Experiment : std::uint8_t
{
  Mixed,  ///< trading world with miners, weak devices and attackers
  Liveness,
  DoubleSpend,
  Scalability,
};

std::string_view to_string(Experiment e);

/// Abstract fork-race model used for the liveness attack.
struct LivenessParams
{
  double attacker_share{0.2};
  /// Expected ticks per block at full network hash power.
  std::uint64_t block_ticks{10};
  /// Ticks an imbalance stays hidden before honest miners converge.
  std::uint64_t latency_ticks{2};
  /// Cap on the simulated duration of one race.
  std::uint64_t max_ticks{20000};
  /// Blocks within which the honest fork must out-work the attacker's.
  std::uint64_t horizon_blocks{50};
  /// Relaxation factor used by the sliding-window variant.
  unsigned relaxation{4};
  /// Ticks the attacker mines privately before the fork appears.
  std::uint64_t hold_ticks{5000};
  /// Seeded races per mode in the liveness experiment.
  std::uint32_t trials{20};
};

struct DoubleSpendParams
{
  std::uint64_t ticks{60};
  std::uint32_t honest_rate{1};  ///< honest messages per tick
  std::uint32_t attacker_rate{3};  ///< attacker messages per tick
  std::uint32_t dumb_rate{10};  ///< miner dumb messages per tick
  std::uint64_t confirmation_threshold{10};
  /// Seeded runs per variant in the double-spend experiment.
  std::uint32_t trials{20};
};

struct ThroughputParams
{
  std::vector<std::uint32_t> node_counts{1, 2, 5, 10};
  std::uint64_t ticks{1000};
  /// Hash attempts per node per tick (a scheduling weight, not real CPU).
  std::uint64_t hash_rate{4096};
  /// Simulated difficulty that paces message issuance.
  unsigned difficulty_bits{14};
  std::uint64_t max_latency_ticks{3};
  std::uint64_t confirmation_threshold{5};
};

/// Every attack kind with `count` attempts.
std::map<AttackKind, std::uint32_t> full_attack_mix(std::uint32_t count = 20);
/// Feedback attacks at roughly the honest trading volume, 20 attempts for the
/// rest.
std::map<AttackKind, std::uint32_t> default_attack_mix();

struct SimConfig
{
  std::uint64_t seed{1};
  Experiment experiment{Experiment::Mixed};

  std::uint32_t n_honest{300};
  std::uint32_t n_malicious{200};
  std::uint32_t n_evaluators{100};
  std::uint32_t n_miners{4};
  std::uint32_t n_devices{10};
  std::uint64_t duration_ticks{30};
  std::uint64_t warmup_ticks{10};
  double trust_threshold{0.5};
  /// Chance an honest buyer trades with a candidate it does not trust.
  double exploration{0.1};
  /// Chance per tick that an honest node starts a purchase.
  double trade_rate{0.5};
  /// Chance an honest trade goes through the mediator procedure.
  double mediator_rate{0.1};
  /// Chance an honest seller sets NoFeedback.
  double nofeedback_rate{0.02};
  /// Total scripted attempts per attack kind; absent kinds are not run.
  std::map<AttackKind, std::uint32_t> attack_mix{default_attack_mix()};
  /// false runs the unprotected baseline: feedback accepted without payment
  /// coupling or seller acknowledgment.
  bool protections{true};

  Money endowment{1000};
  Money price{20};
  unsigned tangle_pow_bits{4};
  OnboardingPolicy onboarding{};
  TradePolicy trade{};
  DifficultyParams chain{8, std::uint64_t{1} << 23, 4, Money{50}};
  WeakReqConfig weakreq_policy{};
  WeakReqParams weakreq{Money{10}, 10, Money{10}, 5};
  EscalationPolicy escalation{2.0, 3};

  LivenessParams liveness{};
  DoubleSpendParams double_spend{};
  ThroughputParams throughput{};
};

/// Throws Error(ConfigInvalid) describing the first violated constraint.
void validate(SimConfig const &config);

/// Parses "key = value" lines ('#' comments) over the defaults, then
/// validates. Throws Error(ConfigInvalid) with the offending line.
SimConfig parse_config(std::istream &in);
SimConfig load_config(std::filesystem::path const &path);

/// Canonical "key=value" dump of every field; the config digest hashes it.
std::string config_text(SimConfig const &config);
HashDigest config_digest(SimConfig const &config);

//------------------------------------------------------------------------------
// Reports
//------------------------------------------------------------------------------

struct AttackOutcome
{
  std::uint64_t attempts{0};
  std::uint64_t successes{0};
};

struct AggregatorScore
{
  double fscore{0.0};  ///< mean over evaluators
  Confusion pooled;  ///< summed over evaluators
};

struct NodeRow
{
  std::string id;  ///< short hex
  std::string cohort;  ///< honest | malicious | whitewash | sybil
  std::uint64_t balance{0};
  bool evaluator{false};
  double average{0.0};
  double netflow{0.0};  ///< mean over evaluators
};

struct MetricsReport
{
  std::uint64_t seed{0};
  std::string experiment;
  std::string config_digest;
  bool protections{true};
  std::uint64_t elapsed_ticks{0};
  std::map<std::string, double> tps;
  std::map<std::string, AggregatorScore> fscore;
  bool no_positives{false};
  std::map<AttackKind, AttackOutcome> attacks;
  /// Named scalar results (calibration notes, supply audit, experiment data).
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> notes;
  std::vector<NodeRow> nodes;
  std::string tangle_digest;
  std::string chain_digest;
};

/// Stable JSON document; equal reports give equal bytes.
std::string report_json(MetricsReport const &report);

/// "# seed=<n> config=<digest>" provenance line.
std::string csv_provenance(MetricsReport const &report);
std::string tps_csv(MetricsReport const &report);
std::string fscore_csv(MetricsReport const &report);
std::string attacks_csv(MetricsReport const &report);

/// Parsed CSV: provenance comment plus header and rows.
struct CsvTable
{
  std::string provenance;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Throws Error(InvalidArgument) on ragged rows or a missing header.
CsvTable parse_csv(std::istream &in);

//------------------------------------------------------------------------------
// Experiments
//------------------------------------------------------------------------------

struct ScenarioResult
{
  MetricsReport report;
  TangleState tangle;
  ChainState chain;
};

/// Runs the configured experiment. Identical configs give identical results.
ScenarioResult run_scenario(SimConfig const &config);

enum class MiningMode : std::uint8_t
{
  WinnerTakeAll,
  SlidingWindow,
};

std::string_view to_string(MiningMode m);

struct LivenessTrace
{
  /// Ticks during which the attacker kept both forks level.
  std::uint64_t balance_ticks{0};
  bool capped{false};  ///< balance held until max_ticks
  /// Honest-fork block count at which its work first exceeded the
  /// attacker-backed fork's for good; nullopt if not within the horizon.
  std::optional<std::uint64_t> honest_lead_block;
  std::uint64_t attacker_releases{0};
};

LivenessTrace run_liveness(LivenessParams const &params, MiningMode mode, std::uint64_t seed);

struct DoubleSpendOutcome
{
  bool honest_confirmed{false};
  bool attacker_confirmed{false};
  std::uint64_t honest_weight{0};
  std::uint64_t attacker_weight{0};
  std::size_t messages{0};
};

DoubleSpendOutcome run_double_spend(DoubleSpendParams const &params, bool dumb_inflow,
                                    std::uint64_t seed);

struct ThroughputPoint
{
  std::uint32_t nodes{0};
  std::uint64_t issued{0};
  std::uint64_t confirmed{0};
  double tps{0.0};  ///< confirmed messages per tick
};

ThroughputPoint run_throughput(ThroughputParams const &params, std::uint32_t nodes,
                               std::uint64_t seed);

struct WorkConservation
{
  unsigned base_bits{0};
  double baseline_mean{0.0};  ///< one solution at base_bits
  std::map<unsigned, double> relaxed_mean;  ///< F -> mean attempts for F relaxed solutions
};

/// Monte Carlo over real SHA3 nonce searches. Each trial scans one nonce
/// stream and scores every F on it (common random numbers).
WorkConservation measure_work_conservation(unsigned base_bits, std::vector<unsigned> const &factors,
                                           std::uint32_t trials, std::uint64_t seed);

}  // namespace tangletrs
