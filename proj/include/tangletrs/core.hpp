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

#include "tangletrs/bytes.hpp"

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tangletrs {

//------------------------------------------------------------------------------
// Errors
//------------------------------------------------------------------------------

enum class Errc : std::uint8_t
{
  Ok = 0,
  InvalidArgument,
  DifficultyTooHigh,
  InvalidKey,
  Overflow,
  Underflow,
  // tangle
  EmptyLedger,
  UnknownParent,
  BadParents,
  BadPow,
  BadSignature,
  StaleSeqNo,
  StaleTimestamp,
  UnknownMessage,
  // chain
  InvalidRelaxation,
  NoEligibleWindow,
  Interrupted,
  // weakreq
  InsufficientFunds,
  Abandoned,
  StaleRequest,
  // trade
  IllegalTransition,
  UnauthorizedRole,
  MediatorNotInIntersection,
  WeakOnboarding,
  DuplicateIdentity,
  BallotStuffing,
  NoPayment,
  SellerNeverAcked,
  // reputation
  KeyMismatch,
  // simnet / cli
  ConfigInvalid,
  IoFailure,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error
{
public:
  explicit Error(Errc code, std::string const &detail = {})
    : std::runtime_error(detail.empty() ? std::string{to_string(code)}
                                        : std::string{to_string(code)} + ": " + detail)
    , code_{code}
  {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

//------------------------------------------------------------------------------
// Hashing
//------------------------------------------------------------------------------

inline constexpr std::size_t kDigestSize = 64;

struct HashDigest
{
  std::array<std::uint8_t, kDigestSize> bytes{};

  auto operator<=>(HashDigest const &) const = default;

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  std::string hex() const { return to_hex(view()); }
  std::string short_hex() const { return hex().substr(0, 12); }
  unsigned leading_zero_bits() const;
  bool is_zero() const;

  static HashDigest from_hex(std::string_view hex);
};

struct DigestHasher
{
  std::size_t operator()(HashDigest const &d) const noexcept
  {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i)
    {
      h = (h << 8) | d.bytes[i];
    }
    return h;
  }
};

/// One-shot SHA3-512.
HashDigest sha3_512(ByteView data);
HashDigest sha3_512(std::initializer_list<ByteView> parts);

/// Incremental SHA3-512 context. Movable, not copyable; use `fork()` to
/// branch from an absorbed prefix.
class Sha3
{
public:
  Sha3();
  ~Sha3();
  Sha3(Sha3 &&) noexcept;
  Sha3 &operator=(Sha3 &&) noexcept;
  Sha3(Sha3 const &) = delete;
  Sha3 &operator=(Sha3 const &) = delete;

  Sha3 &update(ByteView data);
  HashDigest finish();
  /// Copies the absorbed state into `into`.
  void fork_into(Sha3 &into) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

//------------------------------------------------------------------------------
// Identities and signatures
//------------------------------------------------------------------------------

using PublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

/// A node identity: the SHA3-512 digest of its Ed25519 verification key.
struct NodeId
{
  HashDigest value{};

  auto operator<=>(NodeId const &) const = default;

  std::string hex() const { return value.hex(); }
  std::string short_hex() const { return value.short_hex(); }
  bool is_zero() const { return value.is_zero(); }

  static NodeId from_public_key(PublicKey const &pk);
  static NodeId from_hex(std::string_view hex) { return NodeId{HashDigest::from_hex(hex)}; }
};

struct NodeIdHasher
{
  std::size_t operator()(NodeId const &id) const noexcept { return DigestHasher{}(id.value); }
};

/// Detached signature carrying the signer's public key so verification can
/// bind it to a NodeId.
struct Signature
{
  PublicKey public_key{};
  std::array<std::uint8_t, 64> sig{};

  auto operator<=>(Signature const &) const = default;
};

class KeyPair
{
public:
  static KeyPair from_seed(Seed const &seed);
  /// Deterministic key derivation for simulations: seed = SHA3(domain, a, b).
  static KeyPair derive(std::string_view domain, std::uint64_t a, std::uint64_t b = 0);

  NodeId const &id() const { return id_; }
  PublicKey const &public_key() const { return pk_; }
  Signature sign(ByteView message) const;

private:
  KeyPair() = default;

  PublicKey pk_{};
  std::array<std::uint8_t, 64> sk_{};
  NodeId id_{};
};

/// True iff `sig` was produced over `message` by the key behind `signer`.
bool verify(NodeId const &signer, ByteView message, Signature const &sig);

//------------------------------------------------------------------------------
// Proof of work
//------------------------------------------------------------------------------

inline constexpr unsigned kDefaultMaxDifficultyBits = 24;

struct PowSolution
{
  std::uint64_t nonce{0};
  unsigned difficulty_bits{0};
  HashDigest digest{};

  auto operator<=>(PowSolution const &) const = default;
};

struct PowOptions
{
  std::uint64_t start_nonce{0};
  unsigned max_bits{kDefaultMaxDifficultyBits};
  /// Polled every `cancel_stride` attempts; returning true aborts with
  /// Errc::Interrupted.
  std::function<bool()> should_stop{};
  std::uint64_t cancel_stride{1024};
};

struct PowResult
{
  PowSolution solution;
  std::uint64_t attempts{0};
};

/// Digest the search compares against the target: SHA3-512(payload || nonce_le64).
HashDigest pow_digest(ByteView payload, std::uint64_t nonce);

/// Sequential nonce search from `opts.start_nonce`; the returned nonce is the
/// lowest accepted one at or after the start.
PowResult pow_solve(ByteView payload, unsigned difficulty_bits, PowOptions const &opts = {});

bool pow_verify(ByteView payload, PowSolution const &solution);

//------------------------------------------------------------------------------
// Money
//------------------------------------------------------------------------------

/// Token units. All arithmetic is checked.
class Money
{
public:
  constexpr Money() = default;
  constexpr explicit Money(std::uint64_t units)
    : units_{units}
  {}

  constexpr std::uint64_t units() const { return units_; }

  Money operator+(Money other) const
  {
    if (units_ > UINT64_MAX - other.units_)
    {
      throw Error(Errc::Overflow, "money addition");
    }
    return Money{units_ + other.units_};
  }

  Money operator-(Money other) const
  {
    if (other.units_ > units_)
    {
      throw Error(Errc::Underflow, "money subtraction");
    }
    return Money{units_ - other.units_};
  }

  Money &operator+=(Money other) { return *this = *this + other; }
  Money &operator-=(Money other) { return *this = *this - other; }

  Money times(std::uint64_t k) const
  {
    if (k != 0 && units_ > UINT64_MAX / k)
    {
      throw Error(Errc::Overflow, "money multiplication");
    }
    return Money{units_ * k};
  }

  constexpr auto operator<=>(Money const &) const = default;

private:
  std::uint64_t units_{0};
};

//------------------------------------------------------------------------------
// Canonical encoding helpers for core types
//------------------------------------------------------------------------------

inline void encode(Encoder &e, HashDigest const &d) { e.fixed(d.bytes); }
inline void encode(Encoder &e, NodeId const &id) { e.fixed(id.value.bytes); }
inline void encode(Encoder &e, Money m) { e.u64(m.units()); }

inline void encode(Encoder &e, Signature const &s)
{
  e.fixed(s.public_key);
  e.fixed(s.sig);
}

inline void encode(Encoder &e, PowSolution const &p)
{
  e.u64(p.nonce).u32(p.difficulty_bits);
  encode(e, p.digest);
}

inline HashDigest decode_digest(Decoder &d) { return HashDigest{d.fixed<kDigestSize>()}; }
inline NodeId decode_node_id(Decoder &d) { return NodeId{decode_digest(d)}; }
inline Money decode_money(Decoder &d) { return Money{d.u64()}; }

inline Signature decode_signature(Decoder &d)
{
  Signature s;
  s.public_key = d.fixed<32>();
  s.sig = d.fixed<64>();
  return s;
}

inline PowSolution decode_pow(Decoder &d)
{
  PowSolution p;
  p.nonce = d.u64();
  p.difficulty_bits = d.u32();
  p.digest = decode_digest(d);
  return p;
}

}  // namespace tangletrs

template <>
struct std::hash<tangletrs::HashDigest> : tangletrs::DigestHasher
{};

template <>
struct std::hash<tangletrs::NodeId> : tangletrs::NodeIdHasher
{};
