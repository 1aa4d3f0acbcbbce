// SPDX-License-Identifier: Apache-2.0
//
// Canonical byte layouts. All integers little-endian; strings carry a u8
// length prefix; the embedded deviation report carries a u16 length prefix.
//
//   BirthmarkRecord        image_hash[32] flags u8 [parent[32]] [ts[8] geo[8] owner[8]]
//                          flags: bits 0-1 level, bit 6 parent present, bit 7 metadata present
//   DeviceCertificate      version u8, issuer str8, device_key[65], ma_signature[64]
//   ManufacturerCertificate validator_id str8, token[60], table u32, index u32,
//                          deviation blob16, record_hash[32]
//   CameraPacket           record, certificate, camera_signature[64], device_cert
//   Approval               server_id str8, record_hash[32], ma_signature[64], server_signature[64]
//   ValidationBundle       count u8, approvals
//   ChainRecord            record, posting_server_ids str8, posting_timestamp u32
//   Envelope (40 bytes)    payload_len u16, type u8, version u8, chain_index u32, prev_link[32]
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "birthmark/crypto.hpp"
#include "birthmark/deviation.hpp"

namespace birthmark {

inline constexpr std::size_t kMaxIdLength = 16;

// Printable ASCII, 1..16 bytes. Used for validator, server and node ids.
bool is_valid_id(std::string_view id) noexcept;

struct RecordMetadata {
  MetadataHash timestamp{};
  MetadataHash geolocation{};
  MetadataHash owner{};
  friend bool operator==(const RecordMetadata&, const RecordMetadata&) = default;
};

// Plain-text values behind the metadata hashes: "YYYY-MM", "lat,lon"
// (5 decimals) and an owner identity string.
struct MetadataClaims {
  std::string month;
  std::string geolocation;
  std::string owner;
  friend bool operator==(const MetadataClaims&, const MetadataClaims&) = default;
};

RecordMetadata hash_metadata(const MetadataClaims& claims, const Nonce& nonce);

struct BirthmarkRecord {
  Hash256 image_hash{};
  ModificationLevel modification_level = ModificationLevel::raw;
  std::optional<Hash256> parent_image_hash;
  std::optional<RecordMetadata> metadata;

  friend bool operator==(const BirthmarkRecord&, const BirthmarkRecord&) = default;
};

// Raw records never carry a parent; modified records always do.
void validate(const BirthmarkRecord& record);
std::size_t encoded_size(const BirthmarkRecord& record) noexcept;
void encode_into(ByteWriter& w, const BirthmarkRecord& record);
BirthmarkRecord decode_record(ByteReader& r);
Bytes encode(const BirthmarkRecord& record);
BirthmarkRecord decode_record(ByteView bytes);

// SHA-256 over the canonical record encoding.
Hash256 record_hash(const BirthmarkRecord& record);

// MA attestation of a device public key.
struct DeviceCertificate {
  static constexpr std::uint8_t kVersion = 1;
  std::uint8_t version = kVersion;
  std::string issuer;  // validator_id of the signing MA
  PublicKey device_key{};
  Signature64 ma_signature{};

  friend bool operator==(const DeviceCertificate&, const DeviceCertificate&) = default;
};

// Bytes the MA signs: "BM-v1-device-cert:" || issuer || device_key.
Bytes device_cert_message(std::string_view issuer, const PublicKey& device_key);
void encode_into(ByteWriter& w, const DeviceCertificate& cert);
DeviceCertificate decode_device_cert(ByteReader& r);
Bytes encode(const DeviceCertificate& cert);
DeviceCertificate decode_device_cert(ByteView bytes);

struct ManufacturerCertificate {
  std::string validator_id;
  EncryptedToken encrypted_token{};
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  DeviationReport deviation;
  Hash256 record_hash{};

  friend bool operator==(const ManufacturerCertificate&, const ManufacturerCertificate&) = default;
};

void encode_into(ByteWriter& w, const ManufacturerCertificate& cert);
ManufacturerCertificate decode_certificate(ByteReader& r);
Bytes encode(const ManufacturerCertificate& cert);
ManufacturerCertificate decode_certificate(ByteView bytes);

struct CameraPacket {
  BirthmarkRecord record;
  ManufacturerCertificate certificate;
  Signature64 camera_signature{};  // over encode(certificate)
  DeviceCertificate device_cert;

  friend bool operator==(const CameraPacket&, const CameraPacket&) = default;
};

Bytes encode(const CameraPacket& packet);
CameraPacket decode_packet(ByteView bytes);

struct Approval {
  std::string server_id;
  Hash256 record_hash{};
  Signature64 ma_signature{};      // over record_hash || server_id
  Signature64 server_signature{};  // over record_hash

  friend bool operator==(const Approval&, const Approval&) = default;
};

Bytes ma_approval_message(const Hash256& record_hash, std::string_view server_id);
void encode_into(ByteWriter& w, const Approval& approval);
Approval decode_approval(ByteReader& r);
Bytes encode(const Approval& approval);
Approval decode_approval(ByteView bytes);

Bytes encode_bundle(std::span<const Approval> approvals);
std::vector<Approval> decode_bundle(ByteView bytes);

struct ChainRecord {
  BirthmarkRecord record;
  std::string posting_server_ids;  // "idA/idB"
  std::uint32_t posting_timestamp = 0;  // 600-second epochs since 1970

  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

inline constexpr std::int64_t kPostingEpoch = 600;

// granularity is 600, 1200 or 1800 seconds; the result stays in 600 s units.
std::uint32_t posting_timestamp(std::int64_t unix_seconds, std::uint32_t granularity = 600);
std::string join_server_ids(std::string_view a, std::string_view b);

Bytes encode(const ChainRecord& record);
ChainRecord decode_chain_record(ByteView bytes);

enum class EnvelopeType : std::uint8_t { chain_record = 1 };

struct Envelope {
  static constexpr std::size_t kSize = 40;
  static constexpr std::uint8_t kVersion = 1;
  std::uint16_t payload_length = 0;
  EnvelopeType type = EnvelopeType::chain_record;
  std::uint8_t version = kVersion;
  std::uint32_t chain_index = 0;
  Hash256 prev_link{};  // link of the previous entry; zero for the first

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

Bytes encode(const Envelope& env);
Envelope decode_envelope(ByteView bytes);
// SHA-256(envelope || payload); the next entry's prev_link.
Hash256 entry_link(ByteView envelope_bytes, ByteView payload);

// Messages between roles.

struct ValidationRequest {
  ManufacturerCertificate certificate;
  std::string server_id;
  friend bool operator==(const ValidationRequest&, const ValidationRequest&) = default;
};

enum class MaRejection : std::uint8_t {
  WrongValidator = 1,
  UnknownKey,
  BadToken,
  Revoked,
  NotLegitimate,
  LevelPolicy,
  Unauthorized,
};
std::string_view to_string(MaRejection r) noexcept;

struct MaApproval {
  Hash256 record_hash{};
  std::string server_id;
  Signature64 ma_signature{};
  friend bool operator==(const MaApproval&, const MaApproval&) = default;
};

using ValidationResponse = std::variant<MaApproval, MaRejection>;

Bytes encode(const ValidationRequest& req);
ValidationRequest decode_validation_request(ByteView bytes);
Bytes encode(const ValidationResponse& resp);
ValidationResponse decode_validation_response(ByteView bytes);

// Server -> validators.
struct ForwardedApproval {
  BirthmarkRecord record;
  Approval approval;
  friend bool operator==(const ForwardedApproval&, const ForwardedApproval&) = default;
};

Bytes encode(const ForwardedApproval& fwd);
ForwardedApproval decode_forwarded(ByteView bytes);

// MA -> agents. The replacement key is wrapped under the key it replaces, so
// only devices already holding that slot can apply it.
struct RotationNotice {
  std::string validator_id;
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  EncryptedToken wrapped_key{};
  friend bool operator==(const RotationNotice&, const RotationNotice&) = default;
};

Bytes encode(const RotationNotice& notice);
RotationNotice decode_rotation_notice(ByteView bytes);

}  // namespace birthmark
