// SPDX-License-Identifier: Apache-2.0
#include "birthmark/wire.hpp"

namespace birthmark {

namespace {

constexpr std::uint8_t kLevelMask = 0x03;
constexpr std::uint8_t kHasParent = 0x40;
constexpr std::uint8_t kHasMetadata = 0x80;
constexpr std::string_view kDeviceCertPrefix = "BM-v1-device-cert:";

void put_id(ByteWriter& w, std::string_view id) {
  if (!is_valid_id(id)) throw Error(Errc::InvalidValue, "invalid identifier '" + std::string(id) + "'");
  w.str8(id);
}

std::string get_id(ByteReader& r) {
  auto at = r.offset();
  auto id = r.str8();
  if (!is_valid_id(id)) throw Error(Errc::InvalidValue, "invalid identifier", at);
  return id;
}

template <typename T, typename F>
T decode_whole(ByteView bytes, F&& f) {
  ByteReader r(bytes);
  T out = f(r);
  r.expect_end();
  return out;
}

}  // namespace

bool is_valid_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > kMaxIdLength) return false;
  for (char c : id) {
    if (c < 0x21 || c > 0x7e) return false;
  }
  return true;
}

RecordMetadata hash_metadata(const MetadataClaims& claims, const Nonce& nonce) {
  return {metadata_hash(MetadataDomain::timestamp, claims.month, nonce),
          metadata_hash(MetadataDomain::geolocation, claims.geolocation, nonce),
          metadata_hash(MetadataDomain::owner, claims.owner, nonce)};
}

void validate(const BirthmarkRecord& record) {
  switch (record.modification_level) {
    case ModificationLevel::raw:
      if (record.parent_image_hash) throw Error(Errc::InvalidValue, "raw record cannot reference a parent");
      break;
    case ModificationLevel::validated: break;
    case ModificationLevel::modified:
      if (!record.parent_image_hash) throw Error(Errc::InvalidValue, "modified record requires a parent");
      break;
    default: throw Error(Errc::InvalidValue, "modification level out of range");
  }
}

std::size_t encoded_size(const BirthmarkRecord& record) noexcept {
  return 33 + (record.parent_image_hash ? 32 : 0) + (record.metadata ? 24 : 0);
}

void encode_into(ByteWriter& w, const BirthmarkRecord& record) {
  validate(record);
  w.fixed(record.image_hash);
  std::uint8_t flags = static_cast<std::uint8_t>(record.modification_level);
  if (record.parent_image_hash) flags |= kHasParent;
  if (record.metadata) flags |= kHasMetadata;
  w.u8(flags);
  if (record.parent_image_hash) w.fixed(*record.parent_image_hash);
  if (record.metadata) {
    w.fixed(record.metadata->timestamp);
    w.fixed(record.metadata->geolocation);
    w.fixed(record.metadata->owner);
  }
}

BirthmarkRecord decode_record(ByteReader& r) {
  BirthmarkRecord rec;
  rec.image_hash = r.fixed<Hash256>();
  auto at = r.offset();
  auto flags = r.u8();
  if ((flags & ~(kLevelMask | kHasParent | kHasMetadata)) != 0 || (flags & kLevelMask) > 2) {
    throw Error(Errc::InvalidValue, "bad record flags", at);
  }
  rec.modification_level = static_cast<ModificationLevel>(flags & kLevelMask);
  if (flags & kHasParent) rec.parent_image_hash = r.fixed<Hash256>();
  if (flags & kHasMetadata) {
    RecordMetadata m;
    m.timestamp = r.fixed<MetadataHash>();
    m.geolocation = r.fixed<MetadataHash>();
    m.owner = r.fixed<MetadataHash>();
    rec.metadata = m;
  }
  try {
    validate(rec);
  } catch (const Error& e) {
    throw Error(Errc::InvalidValue, e.what(), at);
  }
  return rec;
}

Bytes encode(const BirthmarkRecord& record) {
  ByteWriter w;
  encode_into(w, record);
  return w.take();
}

BirthmarkRecord decode_record(ByteView bytes) {
  return decode_whole<BirthmarkRecord>(bytes, [](ByteReader& r) { return decode_record(r); });
}

Hash256 record_hash(const BirthmarkRecord& record) { return sha256(encode(record)); }

Bytes device_cert_message(std::string_view issuer, const PublicKey& device_key) {
  ByteWriter w;
  w.raw(as_bytes(kDeviceCertPrefix));
  w.raw(as_bytes(issuer));
  w.fixed(device_key);
  return w.take();
}

void encode_into(ByteWriter& w, const DeviceCertificate& cert) {
  w.u8(cert.version);
  put_id(w, cert.issuer);
  w.fixed(cert.device_key);
  w.fixed(cert.ma_signature);
}

DeviceCertificate decode_device_cert(ByteReader& r) {
  DeviceCertificate c;
  auto at = r.offset();
  c.version = r.u8();
  if (c.version != DeviceCertificate::kVersion) throw Error(Errc::DecodeError, "unsupported device cert version", at);
  c.issuer = get_id(r);
  c.device_key = r.fixed<PublicKey>();
  c.ma_signature = r.fixed<Signature64>();
  return c;
}

Bytes encode(const DeviceCertificate& cert) {
  ByteWriter w;
  encode_into(w, cert);
  return w.take();
}

DeviceCertificate decode_device_cert(ByteView bytes) {
  return decode_whole<DeviceCertificate>(bytes, [](ByteReader& r) { return decode_device_cert(r); });
}

void encode_into(ByteWriter& w, const ManufacturerCertificate& cert) {
  put_id(w, cert.validator_id);
  w.fixed(cert.encrypted_token);
  w.u32(cert.key_table_id);
  w.u32(cert.key_index);
  w.blob16(encode(cert.deviation));
  w.fixed(cert.record_hash);
}

ManufacturerCertificate decode_certificate(ByteReader& r) {
  ManufacturerCertificate c;
  c.validator_id = get_id(r);
  c.encrypted_token = r.fixed<EncryptedToken>();
  c.key_table_id = r.u32();
  c.key_index = r.u32();
  auto at = r.offset();
  auto blob = r.blob16();
  try {
    c.deviation = decode_deviation_report(blob);
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), at + 2 + e.offset().value_or(0));
  }
  c.record_hash = r.fixed<Hash256>();
  return c;
}

Bytes encode(const ManufacturerCertificate& cert) {
  ByteWriter w;
  encode_into(w, cert);
  return w.take();
}

ManufacturerCertificate decode_certificate(ByteView bytes) {
  return decode_whole<ManufacturerCertificate>(bytes, [](ByteReader& r) { return decode_certificate(r); });
}

Bytes encode(const CameraPacket& packet) {
  ByteWriter w;
  encode_into(w, packet.record);
  encode_into(w, packet.certificate);
  w.fixed(packet.camera_signature);
  encode_into(w, packet.device_cert);
  return w.take();
}

CameraPacket decode_packet(ByteView bytes) {
  return decode_whole<CameraPacket>(bytes, [](ByteReader& r) {
    CameraPacket p;
    p.record = decode_record(r);
    p.certificate = decode_certificate(r);
    p.camera_signature = r.fixed<Signature64>();
    p.device_cert = decode_device_cert(r);
    return p;
  });
}

Bytes ma_approval_message(const Hash256& record_hash, std::string_view server_id) {
  return concat(record_hash.view(), as_bytes(server_id));
}

void encode_into(ByteWriter& w, const Approval& approval) {
  put_id(w, approval.server_id);
  w.fixed(approval.record_hash);
  w.fixed(approval.ma_signature);
  w.fixed(approval.server_signature);
}

Approval decode_approval(ByteReader& r) {
  Approval a;
  a.server_id = get_id(r);
  a.record_hash = r.fixed<Hash256>();
  a.ma_signature = r.fixed<Signature64>();
  a.server_signature = r.fixed<Signature64>();
  return a;
}

Bytes encode(const Approval& approval) {
  ByteWriter w;
  encode_into(w, approval);
  return w.take();
}

Approval decode_approval(ByteView bytes) {
  return decode_whole<Approval>(bytes, [](ByteReader& r) { return decode_approval(r); });
}

Bytes encode_bundle(std::span<const Approval> approvals) {
  if (approvals.size() > 0xff) throw Error(Errc::InvalidValue, "too many approvals in bundle");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(approvals.size()));
  for (const auto& a : approvals) encode_into(w, a);
  return w.take();
}

std::vector<Approval> decode_bundle(ByteView bytes) {
  return decode_whole<std::vector<Approval>>(bytes, [](ByteReader& r) {
    std::vector<Approval> out(r.u8());
    for (auto& a : out) a = decode_approval(r);
    return out;
  });
}

std::uint32_t posting_timestamp(std::int64_t unix_seconds, std::uint32_t granularity) {
  if (granularity != 600 && granularity != 1200 && granularity != 1800) {
    throw Error(Errc::InvalidValue, "posting granularity must be 600, 1200 or 1800 seconds");
  }
  if (unix_seconds < 0) throw Error(Errc::InvalidValue, "negative timestamp");
  std::int64_t bucket = unix_seconds / granularity;
  return static_cast<std::uint32_t>(bucket * (granularity / kPostingEpoch));
}

std::string join_server_ids(std::string_view a, std::string_view b) {
  std::string out;
  out.reserve(a.size() + b.size() + 1);
  out.append(a).append("/").append(b);
  return out;
}

Bytes encode(const ChainRecord& record) {
  ByteWriter w;
  encode_into(w, record.record);
  w.str8(record.posting_server_ids);
  w.u32(record.posting_timestamp);
  return w.take();
}

ChainRecord decode_chain_record(ByteView bytes) {
  return decode_whole<ChainRecord>(bytes, [](ByteReader& r) {
    ChainRecord c;
    c.record = decode_record(r);
    c.posting_server_ids = r.str8();
    c.posting_timestamp = r.u32();
    return c;
  });
}

Bytes encode(const Envelope& env) {
  ByteWriter w;
  w.u16(env.payload_length);
  w.u8(static_cast<std::uint8_t>(env.type));
  w.u8(env.version);
  w.u32(env.chain_index);
  w.fixed(env.prev_link);
  return w.take();
}

Envelope decode_envelope(ByteView bytes) {
  return decode_whole<Envelope>(bytes, [](ByteReader& r) {
    Envelope e;
    e.payload_length = r.u16();
    auto at = r.offset();
    auto type = r.u8();
    if (type != static_cast<std::uint8_t>(EnvelopeType::chain_record)) {
      throw Error(Errc::DecodeError, "unknown envelope type", at);
    }
    e.type = EnvelopeType::chain_record;
    e.version = r.u8();
    if (e.version != Envelope::kVersion) throw Error(Errc::DecodeError, "unsupported envelope version", at + 1);
    e.chain_index = r.u32();
    e.prev_link = r.fixed<Hash256>();
    return e;
  });
}

Hash256 entry_link(ByteView envelope_bytes, ByteView payload) {
  Sha256 h;
  h.update(envelope_bytes);
  h.update(payload);
  return h.finish();
}

std::string_view to_string(MaRejection r) noexcept {
  switch (r) {
    case MaRejection::WrongValidator: return "WrongValidator";
    case MaRejection::UnknownKey: return "UnknownKey";
    case MaRejection::BadToken: return "BadToken";
    case MaRejection::Revoked: return "Revoked";
    case MaRejection::NotLegitimate: return "NotLegitimate";
    case MaRejection::LevelPolicy: return "LevelPolicy";
    case MaRejection::Unauthorized: return "Unauthorized";
  }
  return "?";
}

Bytes encode(const ValidationRequest& req) {
  ByteWriter w;
  encode_into(w, req.certificate);
  put_id(w, req.server_id);
  return w.take();
}

ValidationRequest decode_validation_request(ByteView bytes) {
  return decode_whole<ValidationRequest>(bytes, [](ByteReader& r) {
    ValidationRequest q;
    q.certificate = decode_certificate(r);
    q.server_id = get_id(r);
    return q;
  });
}

Bytes encode(const ValidationResponse& resp) {
  ByteWriter w;
  if (const auto* a = std::get_if<MaApproval>(&resp)) {
    w.u8(0);
    w.fixed(a->record_hash);
    put_id(w, a->server_id);
    w.fixed(a->ma_signature);
  } else {
    w.u8(static_cast<std::uint8_t>(std::get<MaRejection>(resp)));
  }
  return w.take();
}

ValidationResponse decode_validation_response(ByteView bytes) {
  return decode_whole<ValidationResponse>(bytes, [](ByteReader& r) -> ValidationResponse {
    auto tag = r.u8();
    if (tag == 0) {
      MaApproval a;
      a.record_hash = r.fixed<Hash256>();
      a.server_id = get_id(r);
      a.ma_signature = r.fixed<Signature64>();
      return a;
    }
    if (tag > static_cast<std::uint8_t>(MaRejection::Unauthorized)) {
      throw Error(Errc::DecodeError, "unknown rejection code", 0);
    }
    return static_cast<MaRejection>(tag);
  });
}

Bytes encode(const ForwardedApproval& fwd) {
  ByteWriter w;
  encode_into(w, fwd.record);
  encode_into(w, fwd.approval);
  return w.take();
}

ForwardedApproval decode_forwarded(ByteView bytes) {
  return decode_whole<ForwardedApproval>(bytes, [](ByteReader& r) {
    ForwardedApproval f;
    f.record = decode_record(r);
    f.approval = decode_approval(r);
    return f;
  });
}

Bytes encode(const RotationNotice& notice) {
  ByteWriter w;
  put_id(w, notice.validator_id);
  w.u32(notice.key_table_id);
  w.u32(notice.key_index);
  w.fixed(notice.wrapped_key);
  return w.take();
}

RotationNotice decode_rotation_notice(ByteView bytes) {
  return decode_whole<RotationNotice>(bytes, [](ByteReader& r) {
    RotationNotice n;
    n.validator_id = get_id(r);
    n.key_table_id = r.u32();
    n.key_index = r.u32();
    n.wrapped_key = r.fixed<EncryptedToken>();
    return n;
  });
}

}  // namespace birthmark
