// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "birthmark/error.hpp"

namespace birthmark {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Fixed-width opaque byte value. The tag keeps e.g. a Hash256 from being
// passed where a SymmetricKey is expected.
template <std::size_t N, typename Tag>
struct FixedBytes {
  static constexpr std::size_t size_bytes = N;
  std::array<std::uint8_t, N> bytes{};

  static FixedBytes from(ByteView in) {
    if (in.size() != N) {
      throw Error(Errc::InvalidValue, "expected " + std::to_string(N) + " bytes, got " +
                                          std::to_string(in.size()));
    }
    FixedBytes out;
    std::copy(in.begin(), in.end(), out.bytes.begin());
    return out;
  }
  static FixedBytes from_hex(std::string_view hex) { return from(birthmark::from_hex(hex)); }

  const std::uint8_t* data() const noexcept { return bytes.data(); }
  std::uint8_t* data() noexcept { return bytes.data(); }
  static constexpr std::size_t size() noexcept { return N; }
  ByteView view() const noexcept { return {bytes.data(), N}; }
  std::string hex() const { return to_hex(view()); }

  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

// Little-endian, length-prefixed writer used by every wire encoding.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  template <std::size_t N, typename Tag>
  void fixed(const FixedBytes<N, Tag>& f) {
    raw(f.view());
  }
  // u8 length prefix; strings longer than 255 bytes are a caller bug.
  void str8(std::string_view s);
  // u16 length prefix.
  void blob16(ByteView b);

  std::size_t size() const noexcept { return out_.size(); }
  Bytes take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  ByteView raw(std::size_t n);
  template <typename Fixed>
  Fixed fixed() {
    return Fixed::from(raw(Fixed::size_bytes));
  }
  std::string str8();
  ByteView blob16();

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  // DecodeError when trailing bytes remain.
  void expect_end() const;

 private:
  void need(std::size_t n) const;
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace birthmark

template <std::size_t N, typename Tag>
struct std::hash<birthmark::FixedBytes<N, Tag>> {
  std::size_t operator()(const birthmark::FixedBytes<N, Tag>& v) const noexcept {
    // Values hashed here are already uniformly distributed digests or keys.
    std::size_t h = 0;
    std::memcpy(&h, v.bytes.data(), std::min(sizeof(h), N));
    return h ^ (N * 0x9e3779b97f4a7c15ULL);
  }
};
