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

#include "tangletrs/core.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <bit>
#include <cstring>
#include <mutex>

namespace tangletrs {

std::string_view to_string(Errc code)
{
  switch (code)
  {
  case Errc::Ok: return "Ok";
  case Errc::InvalidArgument: return "InvalidArgument";
  case Errc::DifficultyTooHigh: return "DifficultyTooHigh";
  case Errc::InvalidKey: return "InvalidKey";
  case Errc::Overflow: return "Overflow";
  case Errc::Underflow: return "Underflow";
  case Errc::EmptyLedger: return "EmptyLedger";
  case Errc::UnknownParent: return "UnknownParent";
  case Errc::BadParents: return "BadParents";
  case Errc::BadPow: return "BadPow";
  case Errc::BadSignature: return "BadSignature";
  case Errc::StaleSeqNo: return "StaleSeqNo";
  case Errc::StaleTimestamp: return "StaleTimestamp";
  case Errc::UnknownMessage: return "UnknownMessage";
  case Errc::InvalidRelaxation: return "InvalidRelaxation";
  case Errc::NoEligibleWindow: return "NoEligibleWindow";
  case Errc::Interrupted: return "Interrupted";
  case Errc::InsufficientFunds: return "InsufficientFunds";
  case Errc::Abandoned: return "Abandoned";
  case Errc::StaleRequest: return "StaleRequest";
  case Errc::IllegalTransition: return "IllegalTransition";
  case Errc::UnauthorizedRole: return "UnauthorizedRole";
  case Errc::MediatorNotInIntersection: return "MediatorNotInIntersection";
  case Errc::WeakOnboarding: return "WeakOnboarding";
  case Errc::DuplicateIdentity: return "DuplicateIdentity";
  case Errc::BallotStuffing: return "BallotStuffing";
  case Errc::NoPayment: return "NoPayment";
  case Errc::SellerNeverAcked: return "SellerNeverAcked";
  case Errc::KeyMismatch: return "KeyMismatch";
  case Errc::ConfigInvalid: return "ConfigInvalid";
  case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

std::string to_hex(ByteView data)
{
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data)
  {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c)
{
  if (c >= '0' && c <= '9')
  {
    return c - '0';
  }
  if (c >= 'a' && c <= 'f')
  {
    return c - 'a' + 10;
  }
  if (c >= 'A' && c <= 'F')
  {
    return c - 'A' + 10;
  }
  return -1;
}

EVP_MD const *sha3_md()
{
  static EVP_MD const *md = EVP_sha3_512();
  return md;
}

void ensure_sodium()
{
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0)
    {
      throw std::runtime_error("libsodium initialisation failed");
    }
  });
}

}  // namespace

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0)
  {
    throw DecodeError("odd-length hex string");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0)
    {
      throw DecodeError("invalid hex digit");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

//------------------------------------------------------------------------------

unsigned HashDigest::leading_zero_bits() const
{
  unsigned bits = 0;
  for (auto b : bytes)
  {
    if (b == 0)
    {
      bits += 8;
      continue;
    }
    return bits + static_cast<unsigned>(std::countl_zero(b));
  }
  return bits;
}

bool HashDigest::is_zero() const
{
  for (auto b : bytes)
  {
    if (b != 0)
    {
      return false;
    }
  }
  return true;
}

HashDigest HashDigest::from_hex(std::string_view hex)
{
  auto raw = tangletrs::from_hex(hex);
  if (raw.size() != kDigestSize)
  {
    throw DecodeError("digest must be 64 bytes");
  }
  HashDigest d;
  std::memcpy(d.bytes.data(), raw.data(), kDigestSize);
  return d;
}

struct Sha3::Impl
{
  EVP_MD_CTX *ctx{nullptr};

  Impl()
    : ctx{EVP_MD_CTX_new()}
  {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, sha3_md(), nullptr) != 1)
    {
      throw std::runtime_error("SHA3-512 context initialisation failed");
    }
  }

  ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha3::Sha3()
  : impl_{std::make_unique<Impl>()}
{}

Sha3::~Sha3() = default;
Sha3::Sha3(Sha3 &&) noexcept = default;
Sha3 &Sha3::operator=(Sha3 &&) noexcept = default;

Sha3 &Sha3::update(ByteView data)
{
  EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
  return *this;
}

HashDigest Sha3::finish()
{
  HashDigest out;
  unsigned len = 0;
  EVP_DigestFinal_ex(impl_->ctx, out.bytes.data(), &len);
  EVP_DigestInit_ex(impl_->ctx, sha3_md(), nullptr);
  return out;
}

void Sha3::fork_into(Sha3 &into) const
{
  EVP_MD_CTX_copy_ex(into.impl_->ctx, impl_->ctx);
}

HashDigest sha3_512(ByteView data)
{
  HashDigest out;
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, sha3_md(), nullptr);
  return out;
}

HashDigest sha3_512(std::initializer_list<ByteView> parts)
{
  Sha3 h;
  for (auto p : parts)
  {
    h.update(p);
  }
  return h.finish();
}

//------------------------------------------------------------------------------

NodeId NodeId::from_public_key(PublicKey const &pk)
{
  return NodeId{sha3_512(ByteView{pk.data(), pk.size()})};
}

KeyPair KeyPair::from_seed(Seed const &seed)
{
  ensure_sodium();
  KeyPair kp;
  if (crypto_sign_seed_keypair(kp.pk_.data(), kp.sk_.data(), seed.data()) != 0)
  {
    throw Error(Errc::InvalidKey, "seed rejected");
  }
  kp.id_ = NodeId::from_public_key(kp.pk_);
  return kp;
}

KeyPair KeyPair::derive(std::string_view domain, std::uint64_t a, std::uint64_t b)
{
  Encoder e;
  e.str(domain).u64(a).u64(b);
  auto digest = sha3_512(e.data());
  Seed seed{};
  std::memcpy(seed.data(), digest.bytes.data(), seed.size());
  return from_seed(seed);
}

Signature KeyPair::sign(ByteView message) const
{
  Signature s;
  s.public_key = pk_;
  crypto_sign_detached(s.sig.data(), nullptr, message.data(), message.size(), sk_.data());
  return s;
}

bool verify(NodeId const &signer, ByteView message, Signature const &sig)
{
  ensure_sodium();
  if (NodeId::from_public_key(sig.public_key) != signer)
  {
    return false;
  }
  return crypto_sign_verify_detached(sig.sig.data(), message.data(), message.size(),
                                     sig.public_key.data()) == 0;
}

//------------------------------------------------------------------------------

namespace {

std::array<std::uint8_t, 8> nonce_bytes(std::uint64_t nonce)
{
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i)
  {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(nonce >> (8 * i));
  }
  return out;
}

}  // namespace

HashDigest pow_digest(ByteView payload, std::uint64_t nonce)
{
  auto n = nonce_bytes(nonce);
  return sha3_512({payload, ByteView{n.data(), n.size()}});
}

PowResult pow_solve(ByteView payload, unsigned difficulty_bits, PowOptions const &opts)
{
  if (difficulty_bits > opts.max_bits)
  {
    throw Error(Errc::DifficultyTooHigh,
                std::to_string(difficulty_bits) + " > " + std::to_string(opts.max_bits));
  }
  if (payload.empty())
  {
    throw Error(Errc::InvalidArgument, "empty PoW payload");
  }

  Sha3 prefix;
  prefix.update(payload);
  Sha3 work;

  PowResult result;
  std::uint64_t nonce = opts.start_nonce;
  for (;;)
  {
    if (opts.should_stop && opts.cancel_stride != 0 && result.attempts % opts.cancel_stride == 0 &&
        opts.should_stop())
    {
      throw Error(Errc::Interrupted, "nonce search cancelled");
    }
    auto n = nonce_bytes(nonce);
    prefix.fork_into(work);
    work.update(ByteView{n.data(), n.size()});
    auto digest = work.finish();
    ++result.attempts;
    if (digest.leading_zero_bits() >= difficulty_bits)
    {
      result.solution = PowSolution{nonce, difficulty_bits, digest};
      return result;
    }
    ++nonce;
  }
}

bool pow_verify(ByteView payload, PowSolution const &solution)
{
  if (solution.difficulty_bits > kDigestSize * 8)
  {
    return false;
  }
  if (solution.digest.leading_zero_bits() < solution.difficulty_bits)
  {
    return false;
  }
  return pow_digest(payload, solution.nonce) == solution.digest;
}

}  // namespace tangletrs
