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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tangletrs {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s)
{
  return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

class DecodeError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Canonical encoder. Integers are fixed-width little-endian, variable
/// byte strings and sequences carry a u32 length prefix, fixed-size
/// arrays (digests, keys) are written raw. See docs/ENCODING.md.
class Encoder
{
public:
  Encoder &u8(std::uint8_t v)
  {
    buf_.push_back(v);
    return *this;
  }

  Encoder &u16(std::uint16_t v) { return uint_le(v, 2); }
  Encoder &u32(std::uint32_t v) { return uint_le(v, 4); }
  Encoder &u64(std::uint64_t v) { return uint_le(v, 8); }
  Encoder &boolean(bool v) { return u8(v ? 1 : 0); }

  Encoder &raw(ByteView data)
  {
    buf_.insert(buf_.end(), data.begin(), data.end());
    return *this;
  }

  Encoder &bytes(ByteView data)
  {
    u32(static_cast<std::uint32_t>(data.size()));
    return raw(data);
  }

  Encoder &str(std::string_view s) { return bytes(as_bytes(s)); }

  template <std::size_t N>
  Encoder &fixed(const std::array<std::uint8_t, N> &a)
  {
    return raw(ByteView{a.data(), a.size()});
  }

  const Bytes &data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

private:
  Encoder &uint_le(std::uint64_t v, int width)
  {
    for (int i = 0; i < width; ++i)
    {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    return *this;
  }

  Bytes buf_;
};

class Decoder
{
public:
  explicit Decoder(ByteView data)
    : data_{data}
  {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(uint_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_le(4)); }
  std::uint64_t u64() { return uint_le(8); }

  bool boolean()
  {
    auto v = u8();
    if (v > 1)
    {
      throw DecodeError("boolean out of range");
    }
    return v == 1;
  }

  Bytes bytes()
  {
    auto n = u32();
    need(n);
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::string str()
  {
    auto b = bytes();
    return {b.begin(), b.end()};
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> fixed()
  {
    need(N);
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; ++i)
    {
      out[i] = data_[pos_ + i];
    }
    pos_ += N;
    return out;
  }

  /// Sequence length with a sanity bound so corrupt input cannot request
  /// absurd allocations.
  std::uint32_t count(std::uint32_t max = 1u << 20)
  {
    auto n = u32();
    if (n > max)
    {
      throw DecodeError("sequence length out of range");
    }
    return n;
  }

  bool done() const { return pos_ == data_.size(); }

  void expect_done() const
  {
    if (!done())
    {
      throw DecodeError("trailing bytes");
    }
  }

private:
  void need(std::size_t n) const
  {
    if (data_.size() - pos_ < n)
    {
      throw DecodeError("truncated input");
    }
  }

  std::uint64_t uint_le(int width)
  {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
    {
      v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  ByteView data_;
  std::size_t pos_{0};
};

}  // namespace tangletrs
