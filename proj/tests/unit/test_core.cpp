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

#include "doctest.h"

#include "tangletrs/core.hpp"
#include "tangletrs/random.hpp"

#include <cmath>

using namespace tangletrs;

namespace {

Bytes payload_of(std::string_view s)
{
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("encoder round trip")
{
  Encoder e;
  e.u8(7).u16(0x1234).u32(0xdeadbeef).u64(0x0102030405060708ull).boolean(true).str("hi");
  Decoder d{e.data()};
  CHECK(d.u8() == 7);
  CHECK(d.u16() == 0x1234);
  CHECK(d.u32() == 0xdeadbeef);
  CHECK(d.u64() == 0x0102030405060708ull);
  CHECK(d.boolean());
  CHECK(d.str() == "hi");
  CHECK(d.done());
  CHECK(e.data()[3] == 0xef);  // little-endian
}

TEST_CASE("decoder rejects truncated and trailing input")
{
  Bytes b{1, 2, 3};
  Decoder d{b};
  CHECK_THROWS_AS(d.u32(), DecodeError);
  Decoder d2{b};
  d2.u8();
  CHECK_THROWS_AS(d2.expect_done(), DecodeError);
}

TEST_CASE("sha3-512 known answer")
{
  // Empty-string test vector.
  CHECK(sha3_512(ByteView{}).hex() ==
        "a69f73cca23a9ac5c8b567dc185a756e97c982164fe25859e0d1dcc1475c80a6"
        "15b2123af1f5f94c11e3e9402c3ac558f500199d95b6d3e301758586281dcd26");
  auto abc = sha3_512(as_bytes("abc"));
  CHECK(abc.hex().substr(0, 16) == "b751850b1a57168a");
  CHECK(sha3_512({as_bytes("a"), as_bytes("bc")}) == abc);
}

TEST_CASE("leading zero bits")
{
  HashDigest d;
  CHECK(d.leading_zero_bits() == 512);
  d.bytes[0] = 0x01;
  CHECK(d.leading_zero_bits() == 7);
  d.bytes[0] = 0;
  d.bytes[1] = 0x20;
  CHECK(d.leading_zero_bits() == 10);
}

TEST_CASE("pow zero difficulty accepts first nonce")
{
  PowOptions opts;
  opts.start_nonce = 42;
  auto r = pow_solve(payload_of("x"), 0, opts);
  CHECK(r.solution.nonce == 42);
  CHECK(r.attempts == 1);
}

TEST_CASE("pow solve at 15 bits verifies")
{
  auto p = payload_of("tangle message body");
  auto r = pow_solve(p, 15);
  CHECK(r.solution.digest.leading_zero_bits() >= 15);
  CHECK(pow_verify(p, r.solution));
  CHECK_FALSE(pow_verify(payload_of("other body"), r.solution));
}

TEST_CASE("pow rejects excessive difficulty and empty payload")
{
  CHECK_THROWS_AS(pow_solve(payload_of("x"), 25), Error);
  try
  {
    pow_solve(payload_of("x"), 25);
  }
  catch (Error const &e)
  {
    CHECK(e.code() == Errc::DifficultyTooHigh);
  }
  CHECK_THROWS_AS(pow_solve(Bytes{}, 1), Error);
}

TEST_CASE("pow search is the lowest accepted nonce")
{
  auto p = payload_of("lowest");
  auto r = pow_solve(p, 6);
  for (std::uint64_t n = 0; n < r.solution.nonce; ++n)
  {
    CHECK(pow_digest(p, n).leading_zero_bits() < 6);
  }
  CHECK(r.attempts == r.solution.nonce + 1);
}

TEST_CASE("pow verify fails for every tampered digest byte")
{
  auto p = payload_of("tamper");
  auto sol = pow_solve(p, 10).solution;
  for (std::size_t i = 0; i < kDigestSize; ++i)
  {
    auto bad = sol;
    bad.digest.bytes[i] ^= 0x01;
    CHECK_FALSE(pow_verify(p, bad));
  }
  auto wrong_nonce = sol;
  ++wrong_nonce.nonce;
  CHECK_FALSE(pow_verify(p, wrong_nonce));
  auto overclaim = sol;
  overclaim.difficulty_bits = sol.digest.leading_zero_bits() + 1;
  CHECK_FALSE(pow_verify(p, overclaim));
}

TEST_CASE("pow interruptible")
{
  PowOptions opts;
  opts.should_stop = [] { return true; };
  opts.cancel_stride = 16;
  try
  {
    pow_solve(payload_of("stop"), 24, opts);
    FAIL("expected interruption");
  }
  catch (Error const &e)
  {
    CHECK(e.code() == Errc::Interrupted);
  }
}

TEST_CASE("per-attempt success frequency matches 2^-z")
{
  // 2^17 digests; count how many clear 3 and 5 bits.
  auto p = payload_of("frequency");
  constexpr std::uint64_t kSamples = 1u << 17;
  std::uint64_t hits3 = 0;
  std::uint64_t hits5 = 0;
  for (std::uint64_t n = 0; n < kSamples; ++n)
  {
    auto z = pow_digest(p, n * 7919).leading_zero_bits();
    hits3 += z >= 3;
    hits5 += z >= 5;
  }
  for (auto [hits, bits] : {std::pair{hits3, 3u}, std::pair{hits5, 5u}})
  {
    double const prob = std::ldexp(1.0, -static_cast<int>(bits));
    double const se = std::sqrt(prob * (1 - prob) / kSamples);
    double const freq = static_cast<double>(hits) / kSamples;
    CHECK(std::abs(freq - prob) < 3 * se);
  }
}

TEST_CASE("signatures bind identity and message")
{
  auto kp = KeyPair::derive("test", 1);
  auto other = KeyPair::derive("test", 2);
  auto msg = payload_of("pay 5 units");
  auto sig = kp.sign(msg);
  CHECK(verify(kp.id(), msg, sig));
  CHECK_FALSE(verify(other.id(), msg, sig));
  CHECK(kp.id() == NodeId::from_public_key(kp.public_key()));
  CHECK(KeyPair::derive("test", 1).id() == kp.id());

  // Every single-bit flip of the message must fail.
  for (std::size_t i = 0; i < msg.size(); ++i)
  {
    for (int b = 0; b < 8; ++b)
    {
      auto m = msg;
      m[i] ^= static_cast<std::uint8_t>(1u << b);
      CHECK_FALSE(verify(kp.id(), m, sig));
    }
  }
  // Substituting another key into the signature fails identity binding.
  auto swapped = sig;
  swapped.public_key = other.public_key();
  CHECK_FALSE(verify(kp.id(), msg, swapped));
}

TEST_CASE("money arithmetic is checked")
{
  Money a{10};
  CHECK((a + Money{5}).units() == 15);
  CHECK((a - Money{10}).units() == 0);
  CHECK_THROWS_AS(a - Money{11}, Error);
  CHECK_THROWS_AS(Money{UINT64_MAX} + Money{1}, Error);
  CHECK_THROWS_AS(Money{UINT64_MAX / 2 + 1}.times(2), Error);
  CHECK(Money{3}.times(4).units() == 12);
}

TEST_CASE("rng helpers are deterministic and in range")
{
  auto a = make_rng(7, 1);
  auto b = make_rng(7, 1);
  auto c = make_rng(7, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i)
  {
    auto x = uniform_index(a, 13);
    CHECK(x == uniform_index(b, 13));
    CHECK(x < 13);
    differs |= uniform_index(c, 1000) != x;
    auto u = uniform01(a);
    CHECK(u == uniform01(b));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(differs);
}
