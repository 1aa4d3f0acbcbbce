// SPDX-License-Identifier: Apache-2.0
//
// Protocol primitives. Every output here is bit-exact and part of the wire
// contract: SHA-256 digests, 64-bit truncated HMAC-SHA256 metadata hashes with
// "BM-v1-<domain>:" prefixes, 60-byte AES-256-GCM device tokens and 64-byte
// r||s ECDSA secp256k1 signatures.
#pragma once

#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "birthmark/bytes.hpp"

namespace birthmark {

struct Hash256Tag;
struct MetadataHashTag;
struct NonceTag;
struct SymmetricKeyTag;
struct EncryptedTokenTag;
struct Signature64Tag;
struct PublicKeyTag;

using Hash256 = FixedBytes<32, Hash256Tag>;
using MetadataHash = FixedBytes<8, MetadataHashTag>;
using Nonce = FixedBytes<16, NonceTag>;
using SymmetricKey = FixedBytes<32, SymmetricKeyTag>;
// ciphertext(32) || tag(16) || iv(12)
using EncryptedToken = FixedBytes<60, EncryptedTokenTag>;
// r || s, each 32 bytes big-endian
using Signature64 = FixedBytes<64, Signature64Tag>;
// Uncompressed SEC1 point: 0x04 || X || Y
using PublicKey = FixedBytes<65, PublicKeyTag>;

Hash256 sha256(ByteView data);

// Streaming SHA-256 for inputs too large to copy (12 MP pixel buffers).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(ByteView data);
  Hash256 finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// SHA-256 of a canonical pixel buffer (see PixelImage::canonical_bytes).
Hash256 hash_pixels(ByteView canonical);

std::array<std::uint8_t, 32> hmac_sha256(ByteView key, ByteView message);

enum class MetadataDomain : std::uint8_t { timestamp, geolocation, owner };

std::string_view domain_prefix(MetadataDomain domain) noexcept;
// Accepts "timestamp", "geolocation", "owner"; anything else is InvalidDomain.
MetadataDomain parse_domain(std::string_view name);

// "YYYY-MM" with month 01..12.
bool is_month_text(std::string_view text) noexcept;
// UTC "YYYY-MM" of a Unix timestamp.
std::string month_text(std::int64_t unix_seconds);
// WGS84 "lat,lon" at 5 decimal places.
std::string format_geolocation(double lat, double lon);

MetadataHash metadata_hash(MetadataDomain domain, std::string_view value, const Nonce& nonce);

void random_bytes(std::span<std::uint8_t> out);

template <typename Fixed>
Fixed random_fixed() {
  Fixed out;
  random_bytes(out.bytes);
  return out;
}

// Deterministic fill for seeded simulations.
template <typename Fixed>
Fixed seeded_fixed(std::mt19937_64& rng) {
  Fixed out;
  for (auto& b : out.bytes) b = static_cast<std::uint8_t>(rng());
  return out;
}

EncryptedToken encrypt_token(const Hash256& plaintext, const SymmetricKey& key);
// Throws Error(AuthenticationFailed) on tag mismatch.
Hash256 decrypt_token(const EncryptedToken& token, const SymmetricKey& key);

// ECDSA over secp256k1; messages are hashed with SHA-256 before signing.
// The private scalar stays inside this object: there is no accessor and no
// serialization path.
class SigningKeypair {
 public:
  static SigningKeypair generate();
  // Scalar derived from the seed by repeated SHA-256 until it lands in [1, n).
  static SigningKeypair from_seed(const Hash256& seed);

  SigningKeypair(SigningKeypair&&) noexcept;
  SigningKeypair& operator=(SigningKeypair&&) noexcept;
  ~SigningKeypair();

  const PublicKey& public_key() const noexcept { return public_; }
  Signature64 sign(ByteView message) const;

 private:
  struct Impl;
  explicit SigningKeypair(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
  PublicKey public_{};
};

// Malformed signatures or keys verify as false.
bool verify(ByteView message, const Signature64& sig, const PublicKey& key);

// Uncompressed SEC1 point on secp256k1.
bool is_valid_public_key(const PublicKey& key);

// Concatenation helper for signed messages such as record_hash || server_id.
Bytes concat(ByteView a, ByteView b);

// Overwrite with zeros in a way the optimizer keeps.
void secure_zero(std::span<std::uint8_t> bytes);

}  // namespace birthmark
