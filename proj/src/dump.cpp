// SPDX-License-Identifier: Apache-2.0
#include "birthmark/dump.hpp"

#include <array>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "birthmark/error.hpp"
#include "birthmark/wire.hpp"

namespace birthmark {

namespace {

constexpr std::array<std::pair<WireKind, std::string_view>, 11> kNames{{
    {WireKind::record, "record"},
    {WireKind::chain_record, "chain-record"},
    {WireKind::log, "log"},
    {WireKind::packet, "packet"},
    {WireKind::certificate, "certificate"},
    {WireKind::device_cert, "device-cert"},
    {WireKind::approval, "approval"},
    {WireKind::bundle, "bundle"},
    {WireKind::forwarded, "forwarded"},
    {WireKind::validation_request, "validation-request"},
    {WireKind::rotation_notice, "rotation-notice"},
}};

class Annotator {
 public:
  explicit Annotator(ByteView bytes) : bytes_(bytes) {}

  void field(std::string name, std::size_t length, std::string value) {
    out_.push_back({at_, length, prefix_ + name, std::move(value)});
    at_ += length;
  }
  template <std::size_t N, typename Tag>
  void fixed(std::string name, const FixedBytes<N, Tag>& v) {
    field(std::move(name), N, v.hex());
  }
  void id(std::string name, const std::string& v) {
    field(name + ".len", 1, std::to_string(v.size()));
    field(std::move(name), v.size(), "\"" + v + "\"");
  }
  void u32(std::string name, std::uint32_t v) { field(std::move(name), 4, std::to_string(v)); }

  // Runs fn with names prefixed by scope.
  void scope(const std::string& scope, const std::function<void()>& fn) {
    auto saved = prefix_;
    prefix_ += scope + ".";
    fn();
    prefix_ = saved;
  }

  void record(const BirthmarkRecord& r) {
    fixed("image_hash", r.image_hash);
    auto flags = bytes_[at_];
    field("flags", 1,
          fmt::format("0x{:02x} level={} parent={} metadata={}", flags, static_cast<int>(r.modification_level),
                      r.parent_image_hash ? "yes" : "no", r.metadata ? "yes" : "no"));
    if (r.parent_image_hash) fixed("parent_image_hash", *r.parent_image_hash);
    if (r.metadata) {
      fixed("metadata.timestamp", r.metadata->timestamp);
      fixed("metadata.geolocation", r.metadata->geolocation);
      fixed("metadata.owner", r.metadata->owner);
    }
  }

  void deviation(const DeviationReport& d) {
    auto blob = encode(d);
    field("deviation.len", 2, std::to_string(blob.size()));
    field("deviation.op_count", 1, std::to_string(d.operations.size()));
    for (std::size_t i = 0; i < d.operations.size(); ++i) {
      std::size_t len = std::visit(
          [](const auto& o) -> std::size_t {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, Exposure> || std::is_same_v<T, Denoise>) return 5;
            else if constexpr (std::is_same_v<T, WhiteBalance>) return 13;
            else return 17;
          },
          d.operations[i]);
      field(fmt::format("deviation.op[{}]", i), len, describe(d.operations[i]));
    }
    field("deviation.proposed_level", 1, std::to_string(static_cast<int>(d.proposed_level)));
    field("deviation.reported_score", 4, fmt::format("{}", d.reported_score));
    fixed("deviation.code_hash", d.code_hash);
  }

  void certificate(const ManufacturerCertificate& c) {
    id("validator_id", c.validator_id);
    fixed("encrypted_token", c.encrypted_token);
    u32("key_table_id", c.key_table_id);
    u32("key_index", c.key_index);
    deviation(c.deviation);
    fixed("record_hash", c.record_hash);
  }

  void device_cert(const DeviceCertificate& c) {
    field("version", 1, std::to_string(c.version));
    id("issuer", c.issuer);
    fixed("device_key", c.device_key);
    fixed("ma_signature", c.ma_signature);
  }

  void approval(const Approval& a) {
    id("server_id", a.server_id);
    fixed("record_hash", a.record_hash);
    fixed("ma_signature", a.ma_signature);
    fixed("server_signature", a.server_signature);
  }

  void chain_record(const ChainRecord& c) {
    scope("record", [&] { record(c.record); });
    field("posting_server_ids.len", 1, std::to_string(c.posting_server_ids.size()));
    field("posting_server_ids", c.posting_server_ids.size(), "\"" + c.posting_server_ids + "\"");
    u32("posting_timestamp", c.posting_timestamp);
  }

  void envelope(const Envelope& e) {
    field("payload_length", 2, std::to_string(e.payload_length));
    field("type", 1, std::to_string(static_cast<int>(e.type)));
    field("version", 1, std::to_string(e.version));
    u32("chain_index", e.chain_index);
    fixed("prev_link", e.prev_link);
  }

  std::size_t at() const noexcept { return at_; }
  std::vector<DumpField> take() { return std::move(out_); }

 private:
  ByteView bytes_;
  std::size_t at_ = 0;
  std::string prefix_;
  std::vector<DumpField> out_;
};

// Envelope entries back to back, each length-consistent.
bool looks_like_log(ByteView bytes) {
  std::size_t at = 0;
  if (bytes.size() < Envelope::kSize) return false;
  try {
    while (at < bytes.size()) {
      if (bytes.size() - at < Envelope::kSize) return false;
      auto env = decode_envelope(bytes.subspan(at, Envelope::kSize));
      if (bytes.size() - at - Envelope::kSize < env.payload_length) return false;
      decode_chain_record(bytes.subspan(at + Envelope::kSize, env.payload_length));
      at += Envelope::kSize + env.payload_length;
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

void decode_as(ByteView b, WireKind kind) {
  switch (kind) {
    case WireKind::record: decode_record(b); return;
    case WireKind::chain_record: decode_chain_record(b); return;
    case WireKind::log:
      if (!looks_like_log(b)) throw Error(Errc::DecodeError, "not a sequence of log entries");
      return;
    case WireKind::packet: decode_packet(b); return;
    case WireKind::certificate: decode_certificate(b); return;
    case WireKind::device_cert: decode_device_cert(b); return;
    case WireKind::approval: decode_approval(b); return;
    case WireKind::bundle: decode_bundle(b); return;
    case WireKind::forwarded: decode_forwarded(b); return;
    case WireKind::validation_request: decode_validation_request(b); return;
    case WireKind::rotation_notice: decode_rotation_notice(b); return;
  }
}

}  // namespace

std::string_view to_string(WireKind k) noexcept {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "?";
}

WireKind wire_kind_from_string(std::string_view name) {
  for (const auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  throw Error(Errc::InvalidInput, "unknown wire kind '" + std::string(name) + "'");
}

std::optional<WireKind> detect_kind(ByteView bytes) {
  static constexpr std::array order{WireKind::log,         WireKind::packet,      WireKind::bundle,
                                    WireKind::forwarded,   WireKind::chain_record, WireKind::record,
                                    WireKind::approval,    WireKind::validation_request,
                                    WireKind::certificate, WireKind::device_cert, WireKind::rotation_notice};
  for (auto k : order) {
    try {
      decode_as(bytes, k);
      return k;
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

std::vector<DumpField> annotate(ByteView b, WireKind kind) {
  decode_as(b, kind);
  Annotator a(b);
  switch (kind) {
    case WireKind::record: a.record(decode_record(b)); break;
    case WireKind::chain_record: a.chain_record(decode_chain_record(b)); break;
    case WireKind::log: {
      std::size_t i = 0;
      while (a.at() < b.size()) {
        auto env = decode_envelope(b.subspan(a.at(), Envelope::kSize));
        auto rec = decode_chain_record(b.subspan(a.at() + Envelope::kSize, env.payload_length));
        a.scope(fmt::format("entry[{}].envelope", i), [&] { a.envelope(env); });
        a.scope(fmt::format("entry[{}]", i), [&] { a.chain_record(rec); });
        ++i;
      }
      break;
    }
    case WireKind::packet: {
      auto p = decode_packet(b);
      a.scope("record", [&] { a.record(p.record); });
      a.scope("certificate", [&] { a.certificate(p.certificate); });
      a.fixed("camera_signature", p.camera_signature);
      a.scope("device_cert", [&] { a.device_cert(p.device_cert); });
      break;
    }
    case WireKind::certificate: a.certificate(decode_certificate(b)); break;
    case WireKind::device_cert: a.device_cert(decode_device_cert(b)); break;
    case WireKind::approval: a.approval(decode_approval(b)); break;
    case WireKind::bundle: {
      auto list = decode_bundle(b);
      a.field("count", 1, std::to_string(list.size()));
      for (std::size_t i = 0; i < list.size(); ++i) a.scope(fmt::format("approval[{}]", i), [&] { a.approval(list[i]); });
      break;
    }
    case WireKind::forwarded: {
      auto f = decode_forwarded(b);
      a.scope("record", [&] { a.record(f.record); });
      a.scope("approval", [&] { a.approval(f.approval); });
      break;
    }
    case WireKind::validation_request: {
      auto q = decode_validation_request(b);
      a.scope("certificate", [&] { a.certificate(q.certificate); });
      a.id("server_id", q.server_id);
      break;
    }
    case WireKind::rotation_notice: {
      auto n = decode_rotation_notice(b);
      a.id("validator_id", n.validator_id);
      a.u32("key_table_id", n.key_table_id);
      a.u32("key_index", n.key_index);
      a.fixed("wrapped_key", n.wrapped_key);
      break;
    }
  }
  return a.take();
}

std::string format_dump(ByteView bytes, WireKind kind) {
  auto fields = annotate(bytes, kind);
  std::size_t width = 0;
  for (const auto& f : fields) width = std::max(width, f.name.size());
  std::ostringstream out;
  out << to_string(kind) << ", " << bytes.size() << " bytes\n";
  for (const auto& f : fields) {
    out << fmt::format("{:5} +{:<3} {:<{}}  {}\n", f.offset, f.length, f.name, width, f.value);
  }
  return out.str();
}

}  // namespace birthmark
