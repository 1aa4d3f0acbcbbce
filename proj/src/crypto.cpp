// SPDX-License-Identifier: Apache-2.0
#define OPENSSL_SUPPRESS_DEPRECATED
#include "birthmark/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/rand.h>

#include <chrono>
#include <cstdio>

namespace birthmark {

namespace {

struct BnFree {
  void operator()(BIGNUM* b) const { BN_free(b); }
};
struct PointFree {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct KeyFree {
  void operator()(EC_KEY* k) const { EC_KEY_free(k); }
};
struct SigFree {
  void operator()(ECDSA_SIG* s) const { ECDSA_SIG_free(s); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnFree>;
using PointPtr = std::unique_ptr<EC_POINT, PointFree>;
using KeyPtr = std::unique_ptr<EC_KEY, KeyFree>;
using SigPtr = std::unique_ptr<ECDSA_SIG, SigFree>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

const EC_GROUP* curve() {
  static const EC_GROUP* group = EC_GROUP_new_by_curve_name(NID_secp256k1);
  return group;
}

[[noreturn]] void openssl_failure(const char* what) {
  throw Error(Errc::InvalidInput, std::string("openssl failure: ") + what);
}

}  // namespace

struct Sha256::Impl {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    openssl_failure("sha256 init");
  }
}

Sha256::~Sha256() = default;

Sha256& Sha256::update(ByteView data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1) openssl_failure("sha256 update");
  return *this;
}

Hash256 Sha256::finish() {
  Hash256 out;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, out.data(), &len) != 1 || len != 32) {
    openssl_failure("sha256 final");
  }
  return out;
}

Hash256 sha256(ByteView data) {
  Hash256 out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    openssl_failure("sha256");
  }
  return out;
}

Hash256 hash_pixels(ByteView canonical) {
  if (canonical.empty()) throw Error(Errc::InvalidInput, "empty pixel buffer");
  return sha256(canonical);
}

std::array<std::uint8_t, 32> hmac_sha256(ByteView key, ByteView message) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
            out.data(), &len) ||
      len != 32) {
    openssl_failure("hmac-sha256");
  }
  return out;
}

std::string_view domain_prefix(MetadataDomain domain) noexcept {
  switch (domain) {
    case MetadataDomain::timestamp: return "BM-v1-timestamp:";
    case MetadataDomain::geolocation: return "BM-v1-geolocation:";
    case MetadataDomain::owner: return "BM-v1-owner:";
  }
  return "";
}

MetadataDomain parse_domain(std::string_view name) {
  if (name == "timestamp") return MetadataDomain::timestamp;
  if (name == "geolocation") return MetadataDomain::geolocation;
  if (name == "owner") return MetadataDomain::owner;
  throw Error(Errc::InvalidDomain, "unknown metadata domain '" + std::string(name) + "'");
}

bool is_month_text(std::string_view t) noexcept {
  if (t.size() != 7 || t[4] != '-') return false;
  for (int i : {0, 1, 2, 3, 5, 6}) {
    if (t[i] < '0' || t[i] > '9') return false;
  }
  int month = (t[5] - '0') * 10 + (t[6] - '0');
  return month >= 1 && month <= 12;
}

std::string month_text(std::int64_t unix_seconds) {
  using namespace std::chrono;
  year_month_day ymd{floor<days>(sys_seconds{seconds{unix_seconds}})};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
  return buf;
}

std::string format_geolocation(double lat, double lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw Error(Errc::InvalidInput, "latitude/longitude out of range");
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f,%.5f", lat, lon);
  return buf;
}

MetadataHash metadata_hash(MetadataDomain domain, std::string_view value, const Nonce& nonce) {
  if (domain == MetadataDomain::timestamp && !is_month_text(value)) {
    throw Error(Errc::InvalidInput, "timestamp must be month-precision YYYY-MM");
  }
  std::string message(domain_prefix(domain));
  message.append(value);
  auto mac = hmac_sha256(nonce.view(), as_bytes(message));
  return MetadataHash::from(ByteView(mac.data(), MetadataHash::size()));
}

void random_bytes(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) openssl_failure("RAND_bytes");
}

EncryptedToken encrypt_token(const Hash256& plaintext, const SymmetricKey& key) {
  std::array<std::uint8_t, 12> iv{};
  random_bytes(iv);
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  EncryptedToken out;
  int len = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(), 32) != 1 || len != 32 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + 32, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, out.data() + 32) != 1) {
    openssl_failure("aes-256-gcm encrypt");
  }
  std::copy(iv.begin(), iv.end(), out.bytes.begin() + 48);
  return out;
}

Hash256 decrypt_token(const EncryptedToken& token, const SymmetricKey& key) {
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  Hash256 out;
  std::array<std::uint8_t, 16> tag{};
  std::copy(token.bytes.begin() + 32, token.bytes.begin() + 48, tag.begin());
  int len = 0;
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), token.data() + 48) != 1 ||
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, token.data(), 32) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1) {
    openssl_failure("aes-256-gcm decrypt");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) {
    secure_zero(out.bytes);
    throw Error(Errc::AuthenticationFailed, "token authentication tag mismatch");
  }
  return out;
}

struct SigningKeypair::Impl {
  KeyPtr key;
};

SigningKeypair::SigningKeypair(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {
  const EC_POINT* pub = EC_KEY_get0_public_key(impl_->key.get());
  std::size_t n = EC_POINT_point2oct(curve(), pub, POINT_CONVERSION_UNCOMPRESSED, public_.data(),
                                     PublicKey::size(), nullptr);
  if (n != PublicKey::size()) openssl_failure("public key encoding");
}

SigningKeypair::SigningKeypair(SigningKeypair&&) noexcept = default;
SigningKeypair& SigningKeypair::operator=(SigningKeypair&&) noexcept = default;
SigningKeypair::~SigningKeypair() = default;

SigningKeypair SigningKeypair::generate() { return from_seed(random_fixed<Hash256>()); }

SigningKeypair SigningKeypair::from_seed(const Hash256& seed) {
  BnPtr order(BN_new());
  if (!order || EC_GROUP_get_order(curve(), order.get(), nullptr) != 1) openssl_failure("order");
  Hash256 material = seed;
  BnPtr d;
  for (;;) {
    d.reset(BN_bin2bn(material.data(), 32, nullptr));
    if (!d) openssl_failure("scalar");
    if (!BN_is_zero(d.get()) && BN_cmp(d.get(), order.get()) < 0) break;
    material = sha256(material.view());
  }
  secure_zero(material.bytes);
  auto impl = std::make_unique<Impl>();
  impl->key.reset(EC_KEY_new());
  PointPtr pub(EC_POINT_new(curve()));
  if (!impl->key || !pub || EC_KEY_set_group(impl->key.get(), curve()) != 1 ||
      EC_POINT_mul(curve(), pub.get(), d.get(), nullptr, nullptr, nullptr) != 1 ||
      EC_KEY_set_private_key(impl->key.get(), d.get()) != 1 ||
      EC_KEY_set_public_key(impl->key.get(), pub.get()) != 1) {
    openssl_failure("keypair");
  }
  BN_clear(d.get());
  return SigningKeypair(std::move(impl));
}

Signature64 SigningKeypair::sign(ByteView message) const {
  auto digest = sha256(message);
  SigPtr sig(ECDSA_do_sign(digest.data(), 32, impl_->key.get()));
  if (!sig) openssl_failure("ecdsa sign");
  const BIGNUM* r = nullptr;
  const BIGNUM* s = nullptr;
  ECDSA_SIG_get0(sig.get(), &r, &s);
  Signature64 out;
  if (BN_bn2binpad(r, out.data(), 32) != 32 || BN_bn2binpad(s, out.data() + 32, 32) != 32) {
    openssl_failure("signature encoding");
  }
  return out;
}

bool verify(ByteView message, const Signature64& sig, const PublicKey& key) {
  KeyPtr ec(EC_KEY_new());
  PointPtr point(EC_POINT_new(curve()));
  if (!ec || !point || EC_KEY_set_group(ec.get(), curve()) != 1) return false;
  if (EC_POINT_oct2point(curve(), point.get(), key.data(), key.size(), nullptr) != 1) return false;
  if (EC_KEY_set_public_key(ec.get(), point.get()) != 1) return false;
  BnPtr r(BN_bin2bn(sig.data(), 32, nullptr));
  BnPtr s(BN_bin2bn(sig.data() + 32, 32, nullptr));
  if (!r || !s) return false;
  SigPtr es(ECDSA_SIG_new());
  if (!es || ECDSA_SIG_set0(es.get(), r.get(), s.get()) != 1) return false;
  r.release();
  s.release();
  auto digest = sha256(message);
  return ECDSA_do_verify(digest.data(), 32, es.get(), ec.get()) == 1;
}

bool is_valid_public_key(const PublicKey& key) {
  PointPtr point(EC_POINT_new(curve()));
  if (!point || key.bytes[0] != 0x04) return false;
  if (EC_POINT_oct2point(curve(), point.get(), key.data(), key.size(), nullptr) != 1) return false;
  return EC_POINT_is_on_curve(curve(), point.get(), nullptr) == 1 && EC_POINT_is_at_infinity(curve(), point.get()) == 0;
}

Bytes concat(ByteView a, ByteView b) {
  Bytes out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void secure_zero(std::span<std::uint8_t> bytes) { OPENSSL_cleanse(bytes.data(), bytes.size()); }

}  // namespace birthmark
