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

#include "tangletrs/simnet.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace tangletrs {

namespace {

struct AttackName
{
  AttackKind kind;
  std::string_view name;
};

constexpr AttackName kAttackNames[] = {
  {AttackKind::Liveness, "liveness"},
  {AttackKind::SelfPromoting, "self_promoting"},
  {AttackKind::Whitewashing, "whitewashing"},
  {AttackKind::Slandering, "slandering"},
  {AttackKind::NetworkDoS, "network_dos"},
  {AttackKind::AppDoS, "app_dos"},
  {AttackKind::BallotStuffing, "ballot_stuffing"},
  {AttackKind::Sybil, "sybil"},
  {AttackKind::Replay, "replay"},
  {AttackKind::WeakReqAbuse, "weakreq_abuse"},
};

struct ExperimentName
{
  Experiment kind;
  std::string_view name;
};

constexpr ExperimentName kExperimentNames[] = {
  {Experiment::Mixed, "mixed"},
  {Experiment::Liveness, "liveness"},
  {Experiment::DoubleSpend, "double_spend"},
  {Experiment::Scalability, "scalability"},
};

[[noreturn]] void invalid(std::string const &why)
{
  throw Error(Errc::ConfigInvalid, why);
}

/// The message without its leading error-code name.
std::string detail_of(Error const &e)
{
  std::string what = e.what();
  auto const prefix = std::string{to_string(e.code())} + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

std::string_view trim(std::string_view s)
{
  auto const first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
  {
    return {};
  }
  auto const last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view text)
{
  T value{};
  auto const *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
  {
    invalid("not a number: '" + std::string{text} + "'");
  }
  return value;
}

bool parse_bool(std::string_view text)
{
  if (text == "true" || text == "on" || text == "1" || text == "yes")
  {
    return true;
  }
  if (text == "false" || text == "off" || text == "0" || text == "no")
  {
    return false;
  }
  invalid("not a boolean: '" + std::string{text} + "'");
}

template <class T>
std::string format_number(T value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

/// One configurable field: how to set it from text and how to print it.
struct Field
{
  std::string_view key;
  std::function<void(SimConfig &, std::string_view)> set;
  std::function<std::string(SimConfig const &)> get;
};

template <class T, class Member>
Field numeric(std::string_view key, Member member)
{
  return Field{key,
               [member](SimConfig &c, std::string_view v) { member(c) = parse_number<T>(v); },
               [member](SimConfig const &c) {
                 return format_number(member(const_cast<SimConfig &>(c)));
               }};
}

Field money(std::string_view key, Money &(*member)(SimConfig &))
{
  return Field{key,
               [member](SimConfig &c, std::string_view v) {
                 member(c) = Money{parse_number<std::uint64_t>(v)};
               },
               [member](SimConfig const &c) {
                 return format_number(member(const_cast<SimConfig &>(c)).units());
               }};
}

#define TT_U64(key, expr) numeric<std::uint64_t>(key, [](SimConfig &c) -> std::uint64_t & { return expr; })
#define TT_U32(key, expr) numeric<std::uint32_t>(key, [](SimConfig &c) -> std::uint32_t & { return expr; })
#define TT_UNS(key, expr) numeric<unsigned>(key, [](SimConfig &c) -> unsigned & { return expr; })
#define TT_DBL(key, expr) numeric<double>(key, [](SimConfig &c) -> double & { return expr; })
#define TT_MONEY(key, expr) money(key, [](SimConfig &c) -> Money & { return expr; })

std::vector<Field> const &fields()
{
  static std::vector<Field> const table = [] {
    std::vector<Field> f{
      TT_U64("seed", c.seed),
      Field{"experiment",
            [](SimConfig &c, std::string_view v) {
              for (auto const &e : kExperimentNames)
              {
                if (e.name == v)
                {
                  c.experiment = e.kind;
                  return;
                }
              }
              invalid("unknown experiment '" + std::string{v} + "'");
            },
            [](SimConfig const &c) { return std::string{to_string(c.experiment)}; }},
      TT_U32("n_honest", c.n_honest),
      TT_U32("n_malicious", c.n_malicious),
      TT_U32("n_evaluators", c.n_evaluators),
      TT_U32("n_miners", c.n_miners),
      TT_U32("n_devices", c.n_devices),
      TT_U64("duration_ticks", c.duration_ticks),
      TT_U64("warmup_ticks", c.warmup_ticks),
      TT_DBL("trust_threshold", c.trust_threshold),
      TT_DBL("exploration", c.exploration),
      TT_DBL("trade_rate", c.trade_rate),
      TT_DBL("mediator_rate", c.mediator_rate),
      TT_DBL("nofeedback_rate", c.nofeedback_rate),
      Field{"protections", [](SimConfig &c, std::string_view v) { c.protections = parse_bool(v); },
            [](SimConfig const &c) { return std::string{c.protections ? "true" : "false"}; }},
      TT_MONEY("endowment", c.endowment),
      TT_MONEY("price", c.price),
      TT_UNS("tangle.pow_bits", c.tangle_pow_bits),
      TT_UNS("onboarding.pow_bits", c.onboarding.pow_bits),
      TT_MONEY("onboarding.burn_floor", c.onboarding.burn_floor),
      TT_U64("trade.timeout_ticks", c.trade.timeout_ticks),
      TT_UNS("chain.difficulty_bits", c.chain.difficulty_bits),
      TT_U64("chain.min_difficulty", c.chain.min_difficulty),
      TT_UNS("chain.relaxation", c.chain.relaxation),
      TT_MONEY("chain.coinbase", c.chain.coinbase),
      TT_MONEY("weakreq.min_fee_unit", c.weakreq_policy.min_fee_unit),
      TT_MONEY("weakreq.burn_floor", c.weakreq_policy.burn_floor),
      TT_MONEY("weakreq.min_share", c.weakreq_policy.min_share),
      TT_MONEY("weakreq.fee", c.weakreq.fee),
      TT_U32("weakreq.n_msg", c.weakreq.n_msg),
      TT_MONEY("weakreq.burn", c.weakreq.burn),
      TT_U64("weakreq.timer_ticks", c.weakreq.timer_ticks),
      TT_DBL("weakreq.escalation.factor", c.escalation.factor),
      TT_U32("weakreq.escalation.max_attempts", c.escalation.max_attempts),
      TT_DBL("liveness.attacker_share", c.liveness.attacker_share),
      TT_U64("liveness.block_ticks", c.liveness.block_ticks),
      TT_U64("liveness.latency_ticks", c.liveness.latency_ticks),
      TT_U64("liveness.max_ticks", c.liveness.max_ticks),
      TT_U64("liveness.horizon_blocks", c.liveness.horizon_blocks),
      TT_UNS("liveness.relaxation", c.liveness.relaxation),
      TT_U64("liveness.hold_ticks", c.liveness.hold_ticks),
      TT_U32("liveness.trials", c.liveness.trials),
      TT_U64("double_spend.ticks", c.double_spend.ticks),
      TT_U32("double_spend.honest_rate", c.double_spend.honest_rate),
      TT_U32("double_spend.attacker_rate", c.double_spend.attacker_rate),
      TT_U32("double_spend.dumb_rate", c.double_spend.dumb_rate),
      TT_U64("double_spend.confirmation_threshold", c.double_spend.confirmation_threshold),
      TT_U32("double_spend.trials", c.double_spend.trials),
      Field{"throughput.node_counts",
            [](SimConfig &c, std::string_view v) {
              c.throughput.node_counts.clear();
              while (!v.empty())
              {
                auto comma = v.find(',');
                c.throughput.node_counts.push_back(
                  parse_number<std::uint32_t>(trim(v.substr(0, comma))));
                v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
              }
            },
            [](SimConfig const &c) {
              std::string out;
              for (auto n : c.throughput.node_counts)
              {
                out += (out.empty() ? "" : ",") + format_number(n);
              }
              return out;
            }},
      TT_U64("throughput.ticks", c.throughput.ticks),
      TT_U64("throughput.hash_rate", c.throughput.hash_rate),
      TT_UNS("throughput.difficulty_bits", c.throughput.difficulty_bits),
      TT_U64("throughput.max_latency_ticks", c.throughput.max_latency_ticks),
      TT_U64("throughput.confirmation_threshold", c.throughput.confirmation_threshold),
    };
    return f;
  }();
  return table;
}

#undef TT_U64
#undef TT_U32
#undef TT_UNS
#undef TT_DBL
#undef TT_MONEY

void require(bool ok, std::string const &why)
{
  if (!ok)
  {
    invalid(why);
  }
}

bool probability(double p)
{
  return p >= 0.0 && p <= 1.0;
}

}  // namespace

std::string_view to_string(AttackKind k)
{
  for (auto const &a : kAttackNames)
  {
    if (a.kind == k)
    {
      return a.name;
    }
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name)
{
  for (auto const &a : kAttackNames)
  {
    if (a.name == name)
    {
      return a.kind;
    }
  }
  return std::nullopt;
}

std::string_view to_string(Experiment e)
{
  for (auto const &x : kExperimentNames)
  {
    if (x.kind == e)
    {
      return x.name;
    }
  }
  return "unknown";
}

std::map<AttackKind, std::uint32_t> full_attack_mix(std::uint32_t count)
{
  std::map<AttackKind, std::uint32_t> mix;
  for (auto k : kAllAttacks)
  {
    mix[k] = count;
  }
  return mix;
}

std::map<AttackKind, std::uint32_t> default_attack_mix()
{
  auto mix = full_attack_mix(20);
  for (auto k : {AttackKind::SelfPromoting, AttackKind::BallotStuffing, AttackKind::Slandering})
  {
    mix[k] = 300;
  }
  return mix;
}

void validate(SimConfig const &c)
{
  require(c.n_evaluators <= c.n_honest, "n_evaluators must not exceed n_honest");
  require(c.warmup_ticks <= c.duration_ticks, "warmup_ticks must not exceed duration_ticks");
  require(probability(c.trust_threshold), "trust_threshold must lie in [0, 1]");
  require(probability(c.exploration), "exploration must lie in [0, 1]");
  require(probability(c.trade_rate), "trade_rate must lie in [0, 1]");
  require(probability(c.mediator_rate), "mediator_rate must lie in [0, 1]");
  require(probability(c.nofeedback_rate), "nofeedback_rate must lie in [0, 1]");
  require(c.price > Money{}, "price must be positive");
  require(c.tangle_pow_bits >= 1 && c.tangle_pow_bits <= kDefaultMaxDifficultyBits,
          "tangle.pow_bits must lie in [1, 24]");
  require(c.onboarding.pow_bits <= kDefaultMaxDifficultyBits, "onboarding.pow_bits must be <= 24");
  require(c.chain.difficulty_bits <= kDefaultMaxDifficultyBits,
          "chain.difficulty_bits must be <= 24");
  try
  {
    relaxed_target(c.chain);
  }
  catch (Error const &e)
  {
    invalid("chain: " + detail_of(e));
  }
  require(c.weakreq.n_msg > 0, "weakreq.n_msg must be positive");
  require(c.escalation.factor >= 1.0, "weakreq.escalation.factor must be >= 1");
  require(c.escalation.max_attempts >= 1, "weakreq.escalation.max_attempts must be >= 1");
  require(c.liveness.attacker_share > 0.0 && c.liveness.attacker_share < 0.5,
          "liveness.attacker_share must lie in (0, 0.5)");
  require(c.liveness.block_ticks > 0, "liveness.block_ticks must be positive");
  require(c.liveness.relaxation * 1.0 / static_cast<double>(c.liveness.block_ticks) <= 1.0,
          "liveness.relaxation must not exceed liveness.block_ticks");
  require(c.liveness.max_ticks > 0, "liveness.max_ticks must be positive");
  try
  {
    DifficultyParams p;
    p.difficulty_bits = 24;
    p.relaxation = c.liveness.relaxation;
    relaxed_target(p);
  }
  catch (Error const &)
  {
    invalid("liveness.relaxation must be a power of two");
  }
  require(c.double_spend.ticks > 0 && c.double_spend.honest_rate > 0 &&
            c.double_spend.attacker_rate > 0,
          "double_spend rates and ticks must be positive");
  require(!c.throughput.node_counts.empty(), "throughput.node_counts must not be empty");
  for (auto n : c.throughput.node_counts)
  {
    require(n >= 1, "throughput.node_counts entries must be >= 1");
  }
  require(c.throughput.ticks > 0 && c.throughput.hash_rate > 0,
          "throughput.ticks and throughput.hash_rate must be positive");
  require(c.throughput.difficulty_bits <= 63, "throughput.difficulty_bits must be < 64");

  if (c.experiment == Experiment::Mixed)
  {
    require(c.n_honest >= 2, "mixed experiment needs n_honest >= 2");
    require(c.n_evaluators >= 1, "mixed experiment needs n_evaluators >= 1");
    require(c.duration_ticks >= 1, "duration_ticks must be positive");
    require(c.endowment >= c.price, "endowment must cover one price");
    bool const needs_miners = c.n_devices > 0 || c.attack_mix.contains(AttackKind::AppDoS) ||
                              c.attack_mix.contains(AttackKind::WeakReqAbuse);
    require(!needs_miners || c.n_miners >= 1, "weak devices and WeakReq attacks need n_miners >= 1");
    require(c.tangle_pow_bits <= relaxed_target(c.chain).bits,
            "tangle.pow_bits must not exceed the relaxed dumb-message difficulty");
  }
}

SimConfig parse_config(std::istream &in)
{
  SimConfig c;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line))
  {
    ++lineno;
    auto text = trim(line);
    if (auto hash = text.find('#'); hash != std::string_view::npos)
    {
      text = trim(text.substr(0, hash));
    }
    if (text.empty())
    {
      continue;
    }
    auto const eq = text.find('=');
    if (eq == std::string_view::npos)
    {
      invalid("line " + std::to_string(lineno) + ": expected key = value");
    }
    auto const key = std::string{trim(text.substr(0, eq))};
    auto const value = trim(text.substr(eq + 1));
    if (!seen.insert(key).second)
    {
      invalid("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try
    {
      if (key == "attack.all")
      {
        c.attack_mix = full_attack_mix(parse_number<std::uint32_t>(value));
        continue;
      }
      if (key.starts_with("attack."))
      {
        auto kind = parse_attack_kind(std::string_view{key}.substr(7));
        if (!kind)
        {
          invalid("unknown attack kind");
        }
        c.attack_mix[*kind] = parse_number<std::uint32_t>(value);
        continue;
      }
      bool found = false;
      for (auto const &f : fields())
      {
        if (f.key == key)
        {
          f.set(c, value);
          found = true;
          break;
        }
      }
      if (!found)
      {
        invalid("unknown key");
      }
    }
    catch (Error const &e)
    {
      invalid("line " + std::to_string(lineno) + " (" + key + "): " + detail_of(e));
    }
  }
  for (auto it = c.attack_mix.begin(); it != c.attack_mix.end();)
  {
    it = it->second == 0 ? c.attack_mix.erase(it) : std::next(it);
  }
  validate(c);
  return c;
}

SimConfig load_config(std::filesystem::path const &path)
{
  std::ifstream in{path};
  if (!in)
  {
    throw Error(Errc::IoFailure, "cannot read " + path.string());
  }
  return parse_config(in);
}

std::string config_text(SimConfig const &config)
{
  std::ostringstream out;
  for (auto const &f : fields())
  {
    out << f.key << '=' << f.get(config) << '\n';
  }
  for (auto k : kAllAttacks)
  {
    auto it = config.attack_mix.find(k);
    out << "attack." << to_string(k) << '=' << (it == config.attack_mix.end() ? 0 : it->second)
        << '\n';
  }
  return out.str();
}

HashDigest config_digest(SimConfig const &config)
{
  auto const text = config_text(config);
  return sha3_512(as_bytes(text));
}

}  // namespace tangletrs
