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

#include <cstdint>
#include <optional>
#include <string_view>

namespace tangletrs {

enum class BenchClass : std::uint8_t
{
  Pow15,
  Pow20,
  WeakReq,
};

std::string_view to_string(BenchClass c);
std::optional<BenchClass> parse_bench_class(std::string_view name);

struct BenchSpec
{
  BenchClass message_class{BenchClass::Pow15};
  std::uint32_t node_count{1};
  double seconds{5.0};  ///< wall clock
  std::uint64_t seed{1};
};

struct BenchResult
{
  BenchSpec spec;
  std::uint64_t messages{0};  ///< attached to the Tangle
  double elapsed{0.0};  ///< seconds
  double tps{0.0};
};

/// Real hashing on the host, one worker thread per node. Pow classes solve
/// SHA3-512 PoW at 15 or 20 bits over freshly selected tips and attach to a
/// shared Tangle. WeakReq runs the device/miner pair of each node: the device
/// signs a message and its fee bundle, the miner verifies and attaches it at
/// the Tangle's minimum difficulty. Throws Error(InvalidArgument) if
/// node_count is 0 or seconds is not positive.
BenchResult run_bench(BenchSpec const &spec);

}  // namespace tangletrs
