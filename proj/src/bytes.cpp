// SPDX-License-Identifier: Apache-2.0
#include "birthmark/bytes.hpp"

namespace birthmark {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::InvalidDomain: return "InvalidDomain";
    case Errc::AuthenticationFailed: return "AuthenticationFailed";
    case Errc::DecodeError: return "DecodeError";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::InsufficientFrames: return "InsufficientFrames";
    case Errc::NotProvisioned: return "NotProvisioned";
    case Errc::Rejected: return "Rejected";
    case Errc::NotFound: return "NotFound";
    case Errc::InvalidOp: return "InvalidOp";
    case Errc::BrokenChain: return "BrokenChain";
    case Errc::CorruptChain: return "CorruptChain";
    case Errc::Unreachable: return "Unreachable";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::InvalidInput, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::InvalidInput, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void ByteWriter::str8(std::string_view s) {
  if (s.size() > 0xff) throw Error(Errc::InvalidValue, "string too long for u8 length prefix");
  u8(static_cast<std::uint8_t>(s.size()));
  raw(as_bytes(s));
}

void ByteWriter::blob16(ByteView b) {
  if (b.size() > 0xffff) throw Error(Errc::InvalidValue, "blob too long for u16 length prefix");
  u16(static_cast<std::uint16_t>(b.size()));
  raw(b);
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw Error(Errc::DecodeError, "truncated input at offset " + std::to_string(pos_), pos_);
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::f32() {
  std::uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

ByteView ByteReader::raw(std::size_t n) {
  need(n);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::str8() {
  auto n = u8();
  auto b = raw(n);
  return std::string(b.begin(), b.end());
}

ByteView ByteReader::blob16() {
  auto n = u16();
  return raw(n);
}

void ByteReader::expect_end() const {
  if (pos_ != in_.size()) {
    throw Error(Errc::DecodeError, "trailing bytes at offset " + std::to_string(pos_), pos_);
  }
}

}  // namespace birthmark
