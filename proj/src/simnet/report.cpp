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

#include <json.hpp>

#include <charconv>
#include <istream>
#include <sstream>

namespace tangletrs {

namespace {

std::string number(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split(std::string const &line)
{
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in{line};
  while (std::getline(in, cell, ','))
  {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',')
  {
    cells.emplace_back();
  }
  return cells;
}

}  // namespace

std::string report_json(MetricsReport const &r)
{
  nlohmann::json doc;
  doc["seed"] = r.seed;
  doc["experiment"] = r.experiment;
  doc["config_digest"] = r.config_digest;
  doc["protections"] = r.protections;
  doc["elapsed_ticks"] = r.elapsed_ticks;
  doc["tps"] = r.tps;
  doc["no_positives"] = r.no_positives;
  auto &fs = doc["fscore"] = nlohmann::json::object();
  for (auto const &[name, score] : r.fscore)
  {
    auto const &c = score.pooled;
    fs[name] = {{"fscore", score.fscore},
                {"pooled", {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn},
                            {"precision", c.precision()}, {"recall", c.recall()},
                            {"fscore", c.fscore()}}}};
  }
  auto &attacks = doc["attacks"] = nlohmann::json::object();
  for (auto const &[kind, outcome] : r.attacks)
  {
    attacks[std::string{to_string(kind)}] = {{"attempts", outcome.attempts},
                                             {"successes", outcome.successes}};
  }
  doc["metrics"] = r.metrics;
  doc["notes"] = r.notes;
  auto &nodes = doc["nodes"] = nlohmann::json::array();
  for (auto const &n : r.nodes)
  {
    nodes.push_back({{"id", n.id}, {"cohort", n.cohort}, {"balance", n.balance},
                     {"evaluator", n.evaluator}, {"average", n.average}, {"netflow", n.netflow}});
  }
  doc["tangle_digest"] = r.tangle_digest;
  doc["chain_digest"] = r.chain_digest;
  return doc.dump(2) + "\n";
}

std::string csv_provenance(MetricsReport const &r)
{
  return "# seed=" + std::to_string(r.seed) + " config=" + r.config_digest;
}

std::string tps_csv(MetricsReport const &r)
{
  std::string out = csv_provenance(r) + "\nclass,tps\n";
  for (auto const &[cls, tps] : r.tps)
  {
    out += cls + "," + number(tps) + "\n";
  }
  return out;
}

std::string fscore_csv(MetricsReport const &r)
{
  std::string out = csv_provenance(r) + "\naggregator,fscore,pooled_fscore,tp,fp,fn,tn\n";
  for (auto const &[name, score] : r.fscore)
  {
    auto const &c = score.pooled;
    out += name + "," + number(score.fscore) + "," + number(c.fscore()) + "," + std::to_string(c.tp) +
           "," + std::to_string(c.fp) + "," + std::to_string(c.fn) + "," + std::to_string(c.tn) + "\n";
  }
  return out;
}

std::string attacks_csv(MetricsReport const &r)
{
  std::string out = csv_provenance(r) + "\nattack,attempts,successes\n";
  for (auto const &[kind, outcome] : r.attacks)
  {
    out += std::string{to_string(kind)} + "," + std::to_string(outcome.attempts) + "," +
           std::to_string(outcome.successes) + "\n";
  }
  return out;
}

CsvTable parse_csv(std::istream &in)
{
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    if (line.front() == '#')
    {
      if (!have_header && table.provenance.empty())
      {
        table.provenance = line;
      }
      continue;
    }
    auto cells = split(line);
    if (!have_header)
    {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
    {
      throw Error(Errc::InvalidArgument, "csv line " + std::to_string(lineno) + ": expected " +
                                           std::to_string(table.header.size()) + " cells");
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header)
  {
    throw Error(Errc::InvalidArgument, "csv has no header");
  }
  return table;
}

ScenarioResult run_scenario(SimConfig const &config)
{
  validate(config);
  switch (config.experiment)
  {
  case Experiment::Mixed: return sim::run_mixed(config);
  case Experiment::Liveness: return sim::run_liveness_experiment(config);
  case Experiment::DoubleSpend: return sim::run_double_spend_experiment(config);
  case Experiment::Scalability: return sim::run_scalability_experiment(config);
  }
  throw Error(Errc::ConfigInvalid, "unknown experiment");
}

}  // namespace tangletrs
