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

#include "tangletrs/bench.hpp"
#include "tangletrs/ledger.hpp"
#include "tangletrs/reputation.hpp"
#include "tangletrs/simnet.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tangletrs;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;

constexpr char const *kOutDirEnv = "TANGLETRS_OUT_DIR";

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Options
{
  std::uint64_t seed{1};
  bool seed_given{false};
  std::string config;
  std::string out_dir;

  std::vector<std::string> bench_classes;
  std::uint32_t nodes{1};
  double secs{5.0};

  std::string scenario_file;
  std::string snapshot;
  std::string aggregator{"average"};
  std::string evaluator;
  std::string subject;
  std::string session;
  std::vector<std::string> csv_files;
};

fs::path out_dir(Options const &o)
{
  if (!o.out_dir.empty())
  {
    return o.out_dir;
  }
  if (char const *env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0')
  {
    return env;
  }
  return "out";
}

void write_file(fs::path const &path, std::string const &text)
{
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  if (!out || !(out << text) || !out.flush())
  {
    throw Error(Errc::IoFailure, "cannot write " + path.string());
  }
}

fs::path snapshot_path(Options const &o)
{
  return o.snapshot.empty() ? out_dir(o) / "ledger.snapshot" : fs::path{o.snapshot};
}

/// Resolves a full hex id or a unique prefix among `known`.
template <class Id>
Id resolve(std::string const &text, std::vector<Id> const &known, char const *what)
{
  if (text.empty())
  {
    throw UsageError(std::string{what} + " is required");
  }
  std::optional<Id> found;
  for (auto const &id : known)
  {
    if (id.hex().rfind(text, 0) == 0)
    {
      if (found && *found != id)
      {
        throw UsageError(std::string{what} + " prefix '" + text + "' is ambiguous");
      }
      found = id;
    }
  }
  if (!found)
  {
    throw Error(Errc::InvalidArgument, std::string{"unknown "} + what + " '" + text + "'");
  }
  return *found;
}

//------------------------------------------------------------------------------

int cmd_bench(Options const &o)
{
  if (o.nodes == 0)
  {
    throw UsageError("--nodes must be at least 1");
  }
  if (!(o.secs > 0.0))
  {
    throw UsageError("--secs must be positive");
  }
  std::vector<BenchClass> classes;
  for (auto const &name : o.bench_classes)
  {
    auto c = parse_bench_class(name);
    if (!c)
    {
      throw UsageError("unknown --class '" + name + "' (pow15|pow20|weakreq)");
    }
    classes.push_back(*c);
  }
  std::ostringstream spec;
  spec << "nodes=" << o.nodes << "\nsecs=" << o.secs << "\nseed=" << o.seed << '\n';
  for (auto c : classes)
  {
    spec << "class=" << to_string(c) << '\n';
  }
  Encoder digest_input;
  digest_input.str(spec.str());
  std::ostringstream csv;
  csv << "# seed=" << o.seed << " config=" << sha3_512(digest_input.take()).hex() << '\n';
  csv << "class,nodes,tps\n";
  for (auto c : classes)
  {
    auto r = run_bench(BenchSpec{c, o.nodes, o.secs, o.seed});
    csv << to_string(c) << ',' << o.nodes << ',' << r.tps << '\n';
  }
  std::cout << csv.str();
  if (!o.out_dir.empty() || std::getenv(kOutDirEnv) != nullptr)
  {
    auto dir = out_dir(o);
    fs::create_directories(dir);
    write_file(dir / "bench.csv", csv.str());
  }
  return 0;
}

int cmd_scenario(Options const &o)
{
  auto file = !o.scenario_file.empty() ? o.scenario_file : o.config;
  if (file.empty())
  {
    throw UsageError("scenario needs a config file");
  }
  auto config = load_config(file);
  if (o.seed_given)
  {
    config.seed = o.seed;
  }
  auto result = run_scenario(config);
  auto dir = out_dir(o);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
  {
    throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  }
  write_file(dir / "report.json", report_json(result.report));
  write_file(dir / "tps.csv", tps_csv(result.report));
  write_file(dir / "fscore.csv", fscore_csv(result.report));
  write_file(dir / "attacks.csv", attacks_csv(result.report));
  save_snapshot(dir / "ledger.snapshot", result.tangle, result.chain);
  std::ostringstream edges;
  ledger_graph(result.tangle).write_edge_list(edges);
  write_file(dir / "graph.edges", edges.str());

  auto const &r = result.report;
  std::cout << "experiment " << r.experiment << " seed " << r.seed << " config " << r.config_digest
            << '\n';
  for (auto const &[name, score] : r.fscore)
  {
    std::cout << "fscore " << name << ' ' << score.fscore << '\n';
  }
  for (auto const &[kind, outcome] : r.attacks)
  {
    std::cout << "attack " << to_string(kind) << ' ' << outcome.successes << '/' << outcome.attempts
              << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_ledger_inspect(Options const &o)
{
  auto ledger = load_snapshot(snapshot_path(o));
  describe_ledger(std::cout, ledger);
  return 0;
}

int cmd_trs_score(Options const &o)
{
  auto ledger = load_snapshot(snapshot_path(o));
  auto feedback = ledger_feedback(ledger.tangle);
  std::vector<NodeId> known;
  for (auto const &fb : feedback)
  {
    known.push_back(fb.rater);
    known.push_back(fb.subject);
  }
  auto subject = resolve(o.subject, known, "subject");

  double score = 0.0;
  if (o.aggregator == "average")
  {
    score = average_scores(feedback)[subject];
  }
  else if (o.aggregator == "netflow")
  {
    auto evaluator = resolve(o.evaluator, known, "evaluator");
    FlowNetwork network{InteractionGraph::from_feedback(feedback)};
    score = network.netflow_score(evaluator, subject);
  }
  else
  {
    throw UsageError("unknown --aggregator '" + o.aggregator + "' (average|netflow)");
  }
  std::cout << o.aggregator << ' ' << subject.hex() << ' ' << score << '\n';
  return 0;
}

int cmd_trade_trace(Options const &o)
{
  auto ledger = load_snapshot(snapshot_path(o));
  std::vector<HashDigest> sessions;
  for (auto const &id : ledger.tangle.attachment_order())
  {
    auto ev = carried_event(ledger.tangle.message(id));
    if (ev && ev->action == TradeAction::Request)
    {
      sessions.push_back(session_id(*ev));
    }
  }
  auto id = resolve(o.session, sessions, "session");
  auto session = replay_session(ledger.tangle, id);
  if (!session)
  {
    throw Error(Errc::InvalidArgument, "session " + id.hex() + " does not replay");
  }
  write_trace(std::cout, *session);
  return 0;
}

int cmd_inspect(Options const &o)
{
  for (auto const &file : o.csv_files)
  {
    std::ifstream in{file, std::ios::binary};
    if (!in)
    {
      throw Error(Errc::IoFailure, "cannot read " + file);
    }
    auto table = parse_csv(in);
    std::cout << file << '\n';
    std::cout << "  provenance " << (table.provenance.empty() ? "-" : table.provenance) << '\n';
    std::cout << "  columns";
    for (auto const &h : table.header)
    {
      std::cout << ' ' << h;
    }
    std::cout << "\n  rows " << table.rows.size() << '\n';
    for (auto const &row : table.rows)
    {
      std::cout << "   ";
      for (auto const &cell : row)
      {
        std::cout << ' ' << cell;
      }
      std::cout << '\n';
    }
  }
  return 0;
}

int exit_code(Errc code)
{
  switch (code)
  {
  case Errc::ConfigInvalid: return kExitConfig;
  case Errc::IoFailure: return kExitIo;
  default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char **argv)
{
  Options o;
  CLI::App app{"Tangle and blockchain trust and reputation toolkit"};
  app.require_subcommand(1);
  auto *seed = app.add_option("--seed", o.seed, "RNG seed")->check(CLI::NonNegativeNumber);
  app.add_option("--config", o.config, "Scenario config file");
  app.add_option("--out-dir", o.out_dir, std::string{"Output directory (default $"} + kOutDirEnv +
                                           " or ./out)");
  app.fallthrough();

  auto *bench = app.add_subcommand("bench", "Measure real-PoW and WeakReq throughput");
  bench->add_option("--class", o.bench_classes, "pow15|pow20|weakreq (repeatable)")->required();
  bench->add_option("--nodes", o.nodes, "Worker nodes");
  bench->add_option("--secs", o.secs, "Wall-clock seconds per class");

  auto *scenario = app.add_subcommand("scenario", "Run a scenario file");
  scenario->add_option("file", o.scenario_file, "Scenario config");

  auto *ledger = app.add_subcommand("ledger", "Ledger snapshot tools");
  ledger->require_subcommand(1);
  auto *inspect_ledger = ledger->add_subcommand("inspect", "Summarize a snapshot");
  inspect_ledger->add_option("snapshot", o.snapshot, "Snapshot file");

  auto *trs = app.add_subcommand("trs", "Trust and reputation tools");
  trs->require_subcommand(1);
  auto *score = trs->add_subcommand("score", "Score a subject from snapshot feedback");
  score->add_option("--aggregator", o.aggregator, "average|netflow");
  score->add_option("--evaluator", o.evaluator, "Evaluator id (hex or unique prefix)");
  score->add_option("--subject", o.subject, "Subject id (hex or unique prefix)");
  score->add_option("--snapshot", o.snapshot, "Snapshot file (default <out-dir>/ledger.snapshot)");

  auto *trade = app.add_subcommand("trade", "Trade session tools");
  trade->require_subcommand(1);
  auto *trace = trade->add_subcommand("trace", "Replay one session from a snapshot");
  trace->add_option("session", o.session, "Session id (hex or unique prefix)")->required();
  trace->add_option("--snapshot", o.snapshot, "Snapshot file (default <out-dir>/ledger.snapshot)");

  auto *inspect = app.add_subcommand("inspect", "Re-parse emitted CSV files");
  inspect->add_option("files", o.csv_files, "CSV files")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &e)
  {
    return app.exit(e);
  }
  catch (CLI::CallForAllHelp const &e)
  {
    return app.exit(e);
  }
  catch (CLI::Success const &e)
  {
    return app.exit(e);
  }
  catch (CLI::ParseError const &e)
  {
    app.exit(e);
    return kExitUsage;
  }
  o.seed_given = seed->count() > 0;

  try
  {
    if (*bench)
    {
      return cmd_bench(o);
    }
    if (*scenario)
    {
      return cmd_scenario(o);
    }
    if (*inspect_ledger)
    {
      return cmd_ledger_inspect(o);
    }
    if (*score)
    {
      return cmd_trs_score(o);
    }
    if (*trace)
    {
      return cmd_trade_trace(o);
    }
    if (*inspect)
    {
      return cmd_inspect(o);
    }
  }
  catch (UsageError const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  catch (Error const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
