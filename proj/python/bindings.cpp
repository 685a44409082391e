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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace tangletrs;

namespace {

ByteView view_of(py::bytes const &data, std::string &storage)
{
  storage = data;
  return ByteView{reinterpret_cast<std::uint8_t const *>(storage.data()), storage.size()};
}

SimConfig config_from_text(std::string const &text)
{
  std::istringstream in{text};
  return parse_config(in);
}

struct PyScenario
{
  ScenarioResult result;

  std::string report_json() const { return tangletrs::report_json(result.report); }
  std::string snapshot() const
  {
    std::ostringstream out;
    write_snapshot(out, result.tangle, result.chain);
    return out.str();
  }
  std::string edge_list() const
  {
    std::ostringstream out;
    ledger_graph(result.tangle).write_edge_list(out);
    return out.str();
  }
};

InteractionGraph graph_from_text(std::string const &edges)
{
  std::istringstream in{edges};
  return InteractionGraph::read_edge_list(in);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Tangle and blockchain trust and reputation toolkit";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
    "sha3_512",
    [](py::bytes const &data) {
      std::string s;
      return sha3_512(view_of(data, s)).hex();
    },
    py::arg("data"), "SHA3-512 digest as hex.");

  m.def(
    "pow_solve",
    [](py::bytes const &payload, unsigned bits) {
      std::string s;
      auto r = pow_solve(view_of(payload, s), bits);
      return py::make_tuple(r.solution.nonce, r.attempts, r.solution.digest.hex());
    },
    py::arg("payload"), py::arg("bits"), "Returns (nonce, attempts, digest hex).");

  m.def(
    "pow_verify",
    [](py::bytes const &payload, std::uint64_t nonce, unsigned bits) {
      std::string s;
      auto view = view_of(payload, s);
      return pow_verify(view, PowSolution{nonce, bits, pow_digest(view, nonce)});
    },
    py::arg("payload"), py::arg("nonce"), py::arg("bits"));

  m.def(
    "node_id", [](std::string const &domain, std::uint64_t index) { return KeyPair::derive(domain, index).id().hex(); },
    py::arg("domain"), py::arg("index"), "Id of a deterministically derived key pair.");

  m.def(
    "default_config", [] { return config_text(SimConfig{}); }, "Every config key at its default.");
  m.def(
    "config_digest", [](std::string const &text) { return config_digest(config_from_text(text)).hex(); },
    py::arg("text"));

  py::class_<PyScenario>(m, "Scenario")
    .def_property_readonly("report_json", &PyScenario::report_json)
    .def_property_readonly("tps_csv", [](PyScenario const &s) { return tps_csv(s.result.report); })
    .def_property_readonly("fscore_csv", [](PyScenario const &s) { return fscore_csv(s.result.report); })
    .def_property_readonly("attacks_csv", [](PyScenario const &s) { return attacks_csv(s.result.report); })
    .def_property_readonly("tangle_digest", [](PyScenario const &s) { return s.result.tangle.state_digest().hex(); })
    .def_property_readonly("chain_digest", [](PyScenario const &s) { return s.result.chain.state_digest().hex(); })
    .def("snapshot", &PyScenario::snapshot, "Ledger snapshot text.")
    .def("edge_list", &PyScenario::edge_list, "Interaction graph as an edge list.");

  m.def(
    "run_scenario",
    [](std::string const &text) {
      auto config = config_from_text(text);
      py::gil_scoped_release release;
      return PyScenario{run_scenario(config)};
    },
    py::arg("config_text"), "Runs a scenario given as key=value text.");

  m.def(
    "snapshot_digests",
    [](std::string const &text) {
      std::istringstream in{text};
      auto ledger = read_snapshot(in);
      return py::make_tuple(ledger.tangle.state_digest().hex(), ledger.chain.state_digest().hex());
    },
    py::arg("snapshot"), "Replays a snapshot; returns (tangle digest, chain digest).");

  m.def(
    "netflow_score",
    [](std::string const &edges, std::string const &evaluator, std::string const &subject) {
      return netflow_score(graph_from_text(edges), NodeId::from_hex(evaluator), NodeId::from_hex(subject));
    },
    py::arg("edges"), py::arg("evaluator"), py::arg("subject"));

  m.def(
    "average",
    [](std::vector<std::pair<std::string, std::uint32_t>> const &ratings) {
      std::vector<Rating> rs;
      for (auto const &[rater, milli] : ratings)
      {
        rs.push_back({NodeId::from_hex(rater), milli});
      }
      return aggregate_average(rs);
    },
    py::arg("ratings"), "Mean of per-rater means; ratings are (rater hex, rating in 0..1000).");

  m.def(
    "fscore",
    [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
      return Confusion{tp, fp, fn, tn}.fscore();
    },
    py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));

  m.def(
    "bench",
    [](std::string const &cls, std::uint32_t nodes, double secs, std::uint64_t seed) {
      auto c = parse_bench_class(cls);
      if (!c)
      {
        throw Error(Errc::InvalidArgument, "unknown bench class " + cls);
      }
      py::gil_scoped_release release;
      return run_bench(BenchSpec{*c, nodes, secs, seed}).tps;
    },
    py::arg("cls"), py::arg("nodes") = 1, py::arg("secs") = 1.0, py::arg("seed") = 1,
    "Messages per second for pow15, pow20 or weakreq.");

  m.def(
    "work_conservation",
    [](unsigned bits, std::vector<unsigned> const &factors, std::uint32_t trials, std::uint64_t seed) {
      py::gil_scoped_release release;
      auto w = measure_work_conservation(bits, factors, trials, seed);
      return std::make_pair(w.baseline_mean, w.relaxed_mean);
    },
    py::arg("bits"), py::arg("factors"), py::arg("trials"), py::arg("seed") = 1,
    "Returns (baseline mean, {factor: mean}).");
}
