// SPDX-License-Identifier: Apache-2.0
#include "birthmark/server.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace birthmark {

std::string_view to_string(ServerRejection r) noexcept {
  switch (r) {
    case ServerRejection::Malformed: return "Malformed";
    case ServerRejection::BadDeviceCert: return "BadDeviceCert";
    case ServerRejection::BadSignature: return "BadSignature";
    case ServerRejection::BindingMismatch: return "BindingMismatch";
    case ServerRejection::LevelMismatch: return "LevelMismatch";
    case ServerRejection::UnknownValidator: return "UnknownValidator";
    case ServerRejection::AuthorityUnreachable: return "AuthorityUnreachable";
    case ServerRejection::Authority: return "MA";
  }
  return "?";
}

std::string SubmissionRejected::describe() const {
  std::string s(to_string(reason));
  if (authority) s += "(" + std::string(to_string(*authority)) + ")";
  return s;
}

SubmissionServer::SubmissionServer(std::string server_id, std::string region, std::optional<std::uint64_t> seed)
    : id_(std::move(server_id)),
      region_(std::move(region)),
      signer_(seed ? SigningKeypair::from_seed(sha256(concat(as_bytes("BM-sim-server:" + id_),
                                                             ByteView(reinterpret_cast<const std::uint8_t*>(&*seed), 8))))
                   : SigningKeypair::generate()) {
  if (!is_valid_id(id_)) throw Error(Errc::InvalidValue, "invalid server id");
}

void SubmissionServer::trust_authority(const std::string& validator_id, const PublicKey& ma_key, AuthorityLink* link) {
  authorities_[validator_id] = {ma_key, link};
}

Signature64 SubmissionServer::sign_record_hash(const Hash256& record_hash) const {
  return signer_.sign(record_hash.view());
}

SubmissionResult SubmissionServer::handle_submission(const CameraPacket& packet, std::int64_t now) {
  ++submissions_;
  const auto& cert = packet.certificate;
  auto it = authorities_.find(cert.validator_id);
  if (it == authorities_.end()) return SubmissionRejected{ServerRejection::UnknownValidator, std::nullopt};
  const auto& ma = it->second;

  const auto& dc = packet.device_cert;
  if (dc.issuer != cert.validator_id ||
      !verify(device_cert_message(dc.issuer, dc.device_key), dc.ma_signature, ma.key)) {
    return SubmissionRejected{ServerRejection::BadDeviceCert, std::nullopt};
  }
  if (!verify(encode(cert), packet.camera_signature, dc.device_key)) {
    return SubmissionRejected{ServerRejection::BadSignature, std::nullopt};
  }
  if (record_hash(packet.record) != cert.record_hash) return SubmissionRejected{ServerRejection::BindingMismatch, std::nullopt};
  if (packet.record.modification_level != cert.deviation.proposed_level) {
    return SubmissionRejected{ServerRejection::LevelMismatch, std::nullopt};
  }

  auto response = ma.link ? ma.link->validate({cert, id_}) : std::nullopt;
  if (!response) return SubmissionRejected{ServerRejection::AuthorityUnreachable, std::nullopt};
  if (const auto* rej = std::get_if<MaRejection>(&*response)) {
    return SubmissionRejected{ServerRejection::Authority, *rej};
  }
  const auto& ok = std::get<MaApproval>(*response);
  if (ok.record_hash != cert.record_hash || ok.server_id != id_ ||
      !verify(ma_approval_message(ok.record_hash, ok.server_id), ok.ma_signature, ma.key)) {
    return SubmissionRejected{ServerRejection::Authority, MaRejection::Unauthorized};
  }

  log_.push_back({now, packet.record.image_hash, cert.key_table_id, cert.key_index, cert.encrypted_token});
  return ForwardedApproval{packet.record, Approval{id_, cert.record_hash, ok.ma_signature, sign_record_hash(cert.record_hash)}};
}

SubmissionResult SubmissionServer::handle_bytes(ByteView packet_bytes, std::int64_t now) {
  CameraPacket packet;
  try {
    packet = decode_packet(packet_bytes);
  } catch (const Error&) {
    ++submissions_;
    return SubmissionRejected{ServerRejection::Malformed, std::nullopt};
  }
  return handle_submission(packet, now);
}

void SubmissionServer::expire_logs(std::int64_t now) {
  std::erase_if(log_, [&](const ServerLogEntry& e) { return now - e.arrival > log_retention_seconds; });
}

void ServerRegistry::publish(std::span<const SubmissionServer* const> servers, std::int64_t now) {
  std::vector<const SubmissionServer*> order(servers.begin(), servers.end());
  std::sort(order.begin(), order.end(), [](const SubmissionServer* a, const SubmissionServer* b) {
    return std::make_pair(a->submissions(), a->id()) < std::make_pair(b->submissions(), b->id());
  });
  entries_.clear();
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
    entries_.push_back({order[rank]->id(), order[rank]->region(), rank, now});
  }
}

std::string ServerRegistry::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries_) {
    arr.push_back({{"server_id", e.server_id}, {"region", e.region}, {"load_rank", e.load_rank}, {"updated_at", e.updated_at}});
  }
  return arr.dump(2);
}

ServerRegistry ServerRegistry::from_json(std::string_view text) {
  ServerRegistry reg;
  try {
    auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw Error(Errc::DecodeError, "servers.json must be an array");
    for (const auto& e : arr) {
      RegistryEntry r{e.at("server_id").get<std::string>(), e.at("region").get<std::string>(),
                      e.at("load_rank").get<std::uint32_t>(), e.at("updated_at").get<std::int64_t>()};
      if (!is_valid_id(r.server_id)) throw Error(Errc::InvalidValue, "invalid server id in registry");
      reg.entries_.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, std::string("servers.json: ") + e.what());
  }
  return reg;
}

void ServerRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << to_json() << '\n';
}

ServerRegistry ServerRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace birthmark
