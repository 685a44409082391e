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

#include "tangletrs/simnet.hpp"

namespace tangletrs::sim {

/// Random streams; each purpose draws from its own generator so that changing
/// one behavior does not shift the others.
enum Stream : std::uint64_t
{
  kTradeStream = 1,
  kAttackStream = 2,
  kTipStream = 3,
  kChainStream = 4,
  kEvalStream = 5,
  kLivenessStream = 6,
  kDoubleSpendStream = 7,
  kThroughputStream = 8,
};

ScenarioResult run_mixed(SimConfig const &config);
ScenarioResult run_liveness_experiment(SimConfig const &config);
ScenarioResult run_double_spend_experiment(SimConfig const &config);
ScenarioResult run_scalability_experiment(SimConfig const &config);

std::uint64_t geometric_attempts(Rng &rng, double p);

/// Median of `values` (mean of the middle pair); 0 when empty.
double median(std::vector<double> values);

}  // namespace tangletrs::sim
