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

"""Tangle and blockchain trust and reputation toolkit."""

from ._core import (
    Error,
    Scenario,
    average,
    bench,
    config_digest,
    default_config,
    fscore,
    netflow_score,
    node_id,
    pow_solve,
    pow_verify,
    run_scenario,
    sha3_512,
    snapshot_digests,
    work_conservation,
)

__all__ = [
    "Error",
    "Scenario",
    "average",
    "bench",
    "config_digest",
    "default_config",
    "fscore",
    "netflow_score",
    "node_id",
    "pow_solve",
    "pow_verify",
    "run_scenario",
    "sha3_512",
    "snapshot_digests",
    "work_conservation",
]
