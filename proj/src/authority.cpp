// SPDX-License-Identifier: Apache-2.0
#include "birthmark/authority.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

namespace birthmark {

namespace {

SigningKeypair make_signer(const std::string& id, const std::optional<std::uint64_t>& seed) {
  if (!seed) return SigningKeypair::generate();
  ByteWriter w;
  w.raw(as_bytes("BM-sim-ma-signer:"));
  w.raw(as_bytes(id));
  w.u64(*seed);
  return SigningKeypair::from_seed(sha256(w.take()));
}

std::uint64_t assignment_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed ^ 0x5eed'a551'9000'0001ULL;
  std::uint64_t v;
  random_bytes({reinterpret_cast<std::uint8_t*>(&v), sizeof(v)});
  return v;
}

}  // namespace

int month_ordinal(std::string_view month) {
  if (!is_month_text(month)) throw Error(Errc::InvalidInput, "expected YYYY-MM");
  int year = std::stoi(std::string(month.substr(0, 4)));
  int m = std::stoi(std::string(month.substr(5, 2)));
  return year * 12 + (m - 1);
}

ManufacturerAuthority::ManufacturerAuthority(std::string validator_id, AuthorityConfig config,
                                             std::optional<std::uint64_t> seed)
    : id_(std::move(validator_id)),
      config_(config),
      assign_rng_(assignment_seed(seed)),
      signer_(make_signer(id_, seed)) {
  if (!is_valid_id(id_)) throw Error(Errc::InvalidValue, "invalid validator id");
  if (config_.tables == 0 || config_.keys_per_table == 0) throw Error(Errc::InvalidValue, "empty key tables");
  if (seed) rng_.emplace(*seed);
  tables_.resize(config_.tables);
  for (auto& t : tables_) {
    t.resize(config_.keys_per_table);
    for (auto& s : t) s.key = fresh_key();
  }
}

SymmetricKey ManufacturerAuthority::fresh_key() {
  return rng_ ? seeded_fixed<SymmetricKey>(*rng_) : random_fixed<SymmetricKey>();
}

Provisioning ManufacturerAuthority::provision_device(const Hash256& nuc_hash, const PublicKey& device_key) {
  if (revoked_.contains(nuc_hash)) throw Error(Errc::Rejected, "fingerprint is revoked");
  if (!is_valid_public_key(device_key)) throw Error(Errc::InvalidValue, "device key is not a valid secp256k1 point");

  // Eligible keys per table.
  std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> candidates;
  for (std::uint32_t t = 0; t < tables_.size(); ++t) {
    std::vector<std::uint32_t> keys;
    for (std::uint32_t i = 0; i < tables_[t].size(); ++i) {
      if (bootstrap_ || tables_[t][i].devices >= config_.k_min) keys.push_back(i);
    }
    if (!keys.empty()) candidates.emplace_back(t, std::move(keys));
  }
  std::size_t want = std::min<std::size_t>(config_.slots_per_device, tables_.size());
  if (candidates.size() < want) throw Error(Errc::Rejected, "not enough key tables satisfy the anonymity minimum");

  // Distinct tables, chosen uniformly without replacement.
  for (std::size_t i = 0; i < want; ++i) {
    auto j = i + uniform_below(assign_rng_, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  Provisioning out;
  for (std::size_t i = 0; i < want; ++i) {
    auto& [table, keys] = candidates[i];
    auto index = keys[uniform_below(assign_rng_, keys.size())];
    auto& slot = tables_[table][index];
    ++slot.devices;
    out.slots.push_back({table, index, slot.key});
  }
  std::sort(out.slots.begin(), out.slots.end(), [](const KeySlot& a, const KeySlot& b) {
    return std::tie(a.key_table_id, a.key_index) < std::tie(b.key_table_id, b.key_index);
  });

  legitimate_.insert(nuc_hash);
  out.device_cert.issuer = id_;
  out.device_cert.device_key = device_key;
  out.device_cert.ma_signature = signer_.sign(device_cert_message(id_, device_key));
  return out;
}

void ManufacturerAuthority::record(std::int64_t now, std::uint32_t table, std::string_view result) {
  log_.push_back({month_text(now), table, std::string(result)});
}

void ManufacturerAuthority::count_use(std::uint32_t table, std::uint32_t index, std::int64_t now) {
  std::int64_t hour = now / 3600;
  auto& n = hourly_[{table, index, hour}];
  ++n;
  if (n == config_.anomaly_per_hour) anomalies_.push_back({table, index, hour, n});
  // Keep only the current and previous hour of counters.
  for (auto it = hourly_.begin(); it != hourly_.end();) {
    it = std::get<2>(it->first) < hour - 1 ? hourly_.erase(it) : std::next(it);
  }
}

ValidationResponse ManufacturerAuthority::validate(const ValidationRequest& request,
                                                   std::string_view authenticated_peer, std::int64_t now) {
  const auto& cert = request.certificate;
  if (authenticated_peer != request.server_id) {
    record(now, cert.key_table_id, "Unauthorized");
    return MaRejection::Unauthorized;
  }
  if (cert.validator_id != id_) {
    record(now, cert.key_table_id, "WrongValidator");
    return MaRejection::WrongValidator;
  }
  if (cert.key_table_id >= tables_.size() || cert.key_index >= tables_[cert.key_table_id].size()) {
    record(now, cert.key_table_id, "UnknownKey");
    return MaRejection::UnknownKey;
  }
  const auto& slot = tables_[cert.key_table_id][cert.key_index];

  std::optional<Hash256> nuc;
  bool have_key = false;
  auto attempt = [&](const SymmetricKey& key) {
    have_key = true;
    try {
      nuc = decrypt_token(cert.encrypted_token, key);
    } catch (const Error&) {
    }
  };
  attempt(slot.key);
  for (const auto& r : slot.retired) {
    if (nuc) break;
    if (now < r.expires_at) attempt(r.key);
  }
  if (!nuc) {
    // A token under an expired retired key is indistinguishable from garbage
    // unless we check the expired keys too; report it as an unknown key.
    bool expired_match = false;
    for (const auto& r : slot.retired) {
      if (now >= r.expires_at) {
        try {
          auto h = decrypt_token(cert.encrypted_token, r.key);
          secure_zero(h.bytes);
          expired_match = true;
        } catch (const Error&) {
        }
      }
    }
    auto reason = expired_match || !have_key ? MaRejection::UnknownKey : MaRejection::BadToken;
    record(now, cert.key_table_id, to_string(reason));
    return reason;
  }

  std::optional<MaRejection> reject;
  if (revoked_.contains(*nuc)) {
    reject = MaRejection::Revoked;
  } else if (!legitimate_.contains(*nuc)) {
    reject = MaRejection::NotLegitimate;
  }
  secure_zero(nuc->bytes);
  if (!reject && !level_policy_ok(cert.deviation, config_.level_threshold)) reject = MaRejection::LevelPolicy;
  if (reject) {
    record(now, cert.key_table_id, to_string(*reject));
    return *reject;
  }

  count_use(cert.key_table_id, cert.key_index, now);
  record(now, cert.key_table_id, "approved");
  return MaApproval{cert.record_hash, request.server_id, sign_approval(cert.record_hash, request.server_id)};
}

Signature64 ManufacturerAuthority::sign_approval(const Hash256& record_hash, std::string_view server_id) const {
  return signer_.sign(ma_approval_message(record_hash, server_id));
}

Bytes ManufacturerAuthority::handle(ByteView request_bytes, std::string_view authenticated_peer, std::int64_t now) {
  return encode(validate(decode_validation_request(request_bytes), authenticated_peer, now));
}

void ManufacturerAuthority::revoke(const Hash256& nuc_hash) { revoked_.insert(nuc_hash); }

RotationNotice ManufacturerAuthority::rotate_key(std::uint32_t table_id, std::uint32_t key_index, std::int64_t now) {
  if (table_id >= tables_.size() || key_index >= tables_[table_id].size()) {
    throw Error(Errc::NotFound, "unknown key slot");
  }
  auto& slot = tables_[table_id][key_index];
  auto replacement = fresh_key();
  RotationNotice notice{id_, table_id, key_index, encrypt_token(Hash256::from(replacement.view()), slot.key)};
  slot.retired.push_back({slot.key, now + config_.rotation_grace_seconds});
  slot.key = replacement;
  return notice;
}

void ManufacturerAuthority::expire_logs(std::int64_t now) {
  int cutoff = month_ordinal(month_text(now)) - static_cast<int>(config_.log_retention_months);
  std::erase_if(log_, [&](const ValidationLogEntry& e) { return month_ordinal(e.month) < cutoff; });
}

AuthorityStats ManufacturerAuthority::stats() const {
  AuthorityStats s;
  s.legitimate = legitimate_.size();
  s.revoked = revoked_.size();
  s.log_entries = log_.size();
  s.bootstrap = bootstrap_;
  for (std::uint32_t t = 0; t < tables_.size(); ++t) {
    for (std::uint32_t i = 0; i < tables_[t].size(); ++i) {
      auto n = tables_[t][i].devices;
      s.keys.push_back({t, i, n, n < config_.k_warn});
    }
  }
  for (const auto& e : log_) {
    if (e.result == "approved") ++s.validations_per_month[e.month];
  }
  return s;
}

AuthoritySnapshot ManufacturerAuthority::compromise() const {
  AuthoritySnapshot snap;
  for (std::uint32_t t = 0; t < tables_.size(); ++t) {
    for (std::uint32_t i = 0; i < tables_[t].size(); ++i) {
      auto& keys = snap.keys[{t, i}];
      keys.push_back(tables_[t][i].key);
      for (const auto& r : tables_[t][i].retired) keys.push_back(r.key);
    }
  }
  snap.legitimate = legitimate_;
  snap.revoked = revoked_;
  snap.log = log_;
  return snap;
}

nlohmann::json ManufacturerAuthority::dump_state() const {
  using nlohmann::json;
  json tables = json::array();
  for (std::uint32_t t = 0; t < tables_.size(); ++t) {
    json keys = json::array();
    for (std::uint32_t i = 0; i < tables_[t].size(); ++i) {
      const auto& slot = tables_[t][i];
      json retired = json::array();
      for (const auto& r : slot.retired) retired.push_back({{"key", r.key.hex()}, {"expires_at", r.expires_at}});
      keys.push_back({{"key_index", i}, {"key", slot.key.hex()}, {"devices", slot.devices}, {"retired", retired}});
    }
    tables.push_back({{"key_table_id", t}, {"keys", keys}});
  }
  auto sorted_hex = [](const std::unordered_set<Hash256>& set) {
    std::vector<std::string> v;
    for (const auto& h : set) v.push_back(h.hex());
    std::sort(v.begin(), v.end());
    return v;
  };
  json log = json::array();
  for (const auto& e : log_) log.push_back({{"month", e.month}, {"key_table_id", e.key_table_id}, {"result", e.result}});
  json anomalies = json::array();
  for (const auto& a : anomalies_) {
    anomalies.push_back({{"key_table_id", a.key_table_id}, {"key_index", a.key_index}, {"hour", a.hour}, {"count", a.count}});
  }
  return {{"validator_id", id_},
          {"public_key", public_key().hex()},
          {"bootstrap", bootstrap_},
          {"tables", tables},
          {"legitimacy", {{"legitimate", sorted_hex(legitimate_)}, {"revoked", sorted_hex(revoked_)}}},
          {"validation_log", log},
          {"anomalies", anomalies}};
}

}  // namespace birthmark
