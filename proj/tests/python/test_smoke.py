# Copyright 2026 The tangletrs Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import subprocess
from pathlib import Path

import pytest

import tangletrs

SMALL = """
n_honest = 24
n_malicious = 12
n_evaluators = 6
n_miners = 2
n_devices = 1
duration_ticks = 10
warmup_ticks = 3
attack.all = 3
attack.liveness = 0
"""


@pytest.fixture(scope="module")
def scenario():
    return tangletrs.run_scenario(SMALL)


def test_sha3_and_pow():
    assert len(tangletrs.sha3_512(b"abc")) == 128
    nonce, attempts, digest = tangletrs.pow_solve(b"payload", 8)
    assert attempts == nonce + 1
    assert int(digest[:2], 16) == 0
    assert tangletrs.pow_verify(b"payload", nonce, 8)


def test_config_digest_tracks_content():
    base = tangletrs.config_digest("seed = 1\n")
    assert base == tangletrs.config_digest(tangletrs.default_config())
    assert base != tangletrs.config_digest("seed = 2\n")
    with pytest.raises(tangletrs.Error, match="ConfigInvalid"):
        tangletrs.config_digest("nonsense = 1\n")


def test_scenario_report(scenario):
    report = json.loads(scenario.report_json)
    assert set(report["fscore"]) == {"average", "netflow"}
    assert report["metrics"]["supply_violations"] == 0
    assert report["attacks"]["replay"]["successes"] == 0
    assert scenario.fscore_csv.splitlines()[0].startswith("# seed=1 config=")


def test_snapshot_reload_matches(scenario):
    tangle, chain = tangletrs.snapshot_digests(scenario.snapshot())
    assert tangle == scenario.tangle_digest
    assert chain == scenario.chain_digest


def test_determinism(scenario):
    again = tangletrs.run_scenario(SMALL)
    assert again.report_json == scenario.report_json
    assert again.snapshot() == scenario.snapshot()


def test_netflow_and_average(scenario):
    a = tangletrs.node_id("py", 1)
    b = tangletrs.node_id("py", 2)
    c = tangletrs.node_id("py", 3)
    edges = f"{b} {a} 4\n{c} {b} 2\n{a} {b} 4\n"
    assert tangletrs.netflow_score(edges, a, c) == pytest.approx(0.5)
    assert tangletrs.netflow_score(edges, a, b) == 1.0
    assert tangletrs.average([(a, 1000), (a, 0), (b, 500)]) == pytest.approx(0.5)
    assert tangletrs.fscore(1, 1, 1, 0) == pytest.approx(0.5)
    src, dst, _ = scenario.edge_list().splitlines()[0].split()
    assert 0.0 <= tangletrs.netflow_score(scenario.edge_list(), dst, src) <= 1.0


def test_bench_ordering():
    weak = tangletrs.bench("weakreq", secs=0.5)
    pow15 = tangletrs.bench("pow15", secs=0.5)
    assert weak > pow15 > 0
    with pytest.raises(tangletrs.Error):
        tangletrs.bench("pow15", nodes=0)


CLI = os.environ.get("TANGLETRS_CLI")
needs_cli = pytest.mark.skipif(not CLI, reason="TANGLETRS_CLI not set")


def cli(*args, env=None):
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=env)


@needs_cli
def test_cli_scenario_round_trip(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = cli("scenario", str(cfg), "--out-dir", str(out))
        assert result.returncode == 0, result.stderr
        runs.append(out)
    for f in ("report.json", "tps.csv", "fscore.csv", "attacks.csv", "ledger.snapshot", "graph.edges"):
        assert (runs[0] / f).read_bytes() == (runs[1] / f).read_bytes()

    csvs = [str(runs[0] / f) for f in ("tps.csv", "fscore.csv", "attacks.csv")]
    result = cli("inspect", *csvs)
    assert result.returncode == 0, result.stderr
    assert "columns aggregator fscore" in result.stdout

    result = cli("ledger", "inspect", str(runs[0] / "ledger.snapshot"))
    assert result.returncode == 0
    assert "chain digest" in result.stdout


@needs_cli
def test_cli_out_dir_env(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    env = dict(os.environ, TANGLETRS_OUT_DIR=str(tmp_path / "env"))
    assert cli("scenario", str(cfg), env=env).returncode == 0
    assert (tmp_path / "env" / "report.json").exists()


@needs_cli
def test_cli_trade_trace_and_score(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    out = tmp_path / "o"
    assert cli("scenario", str(cfg), "--out-dir", str(out)).returncode == 0
    subject, evaluator, _ = (out / "graph.edges").read_text().splitlines()[0].split()
    for agg in ("average", "netflow"):
        result = cli("--out-dir", str(out), "trs", "score", "--aggregator", agg,
                     "--evaluator", evaluator[:16], "--subject", subject[:16])
        assert result.returncode == 0, result.stderr
        assert result.stdout.startswith(agg + " " + subject)

    snapshot = (out / "ledger.snapshot").read_text()
    tangle, _ = tangletrs.snapshot_digests(snapshot)
    assert tangle in cli("ledger", "inspect", str(out / "ledger.snapshot")).stdout

    result = cli("--out-dir", str(out), "trade", "trace", "00")
    assert result.returncode != 0


@needs_cli
def test_cli_exit_codes(tmp_path):
    assert cli("bench", "--class", "pow15", "--nodes", "0").returncode == 2
    assert cli("bench", "--class", "pow99").returncode == 2
    assert cli().returncode == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("price = 0\n")
    assert cli("scenario", str(bad)).returncode == 3
    assert cli("scenario", str(tmp_path / "missing.cfg")).returncode == 4
    assert cli("ledger", "inspect", str(tmp_path / "missing")).returncode == 4
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("# seed=1 config=00\na,b\n1\n")
    assert cli("inspect", str(ragged)).returncode == 1


@needs_cli
def test_cli_bench_rows():
    result = cli("bench", "--class", "weakreq", "--class", "pow15", "--secs", "0.5", "--seed", "7")
    assert result.returncode == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0].startswith("# seed=7 config=")
    assert lines[1] == "class,nodes,tps"
    rows = {r.split(",")[0]: float(r.split(",")[2]) for r in lines[2:]}
    assert rows["weakreq"] > rows["pow15"]
