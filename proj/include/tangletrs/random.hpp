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
#include <random>

namespace tangletrs {

/// mt19937_64 is fully specified by the standard; the distributions in
/// <random> are not, so the helpers below are used instead to keep seeded
/// runs identical across standard libraries.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng{seq};
}

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n)
{
  if (n <= 1)
  {
    return 0;
  }
  std::uint64_t const limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t v = rng();
  while (v >= limit)
  {
    v = rng();
  }
  return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng &rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng &rng, double p)
{
  return uniform01(rng) < p;
}

}  // namespace tangletrs
