// SPDX-License-Identifier: Apache-2.0
//
// Manufacturer Authority. Holds key tables, the legitimacy set of device
// fingerprints and a revocation list. Validation takes a certificate and the
// requesting server id; there is no parameter through which an image hash
// could arrive.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "birthmark/wire.hpp"

namespace birthmark {

struct AuthorityConfig {
  std::uint32_t tables = 4;
  std::uint32_t keys_per_table = 1;
  // Keys below k_min are not handed out once bootstrap is sealed.
  std::uint32_t k_min = 1000;
  std::uint32_t k_warn = 100;
  std::uint32_t slots_per_device = 2;
  std::int64_t rotation_grace_seconds = 3600;
  std::uint32_t anomaly_per_hour = 1000;
  std::uint32_t log_retention_months = 36;
  double level_threshold = 0.16;
};

struct KeySlot {
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  SymmetricKey key{};
  friend bool operator==(const KeySlot&, const KeySlot&) = default;
};

struct Provisioning {
  DeviceCertificate device_cert;
  std::vector<KeySlot> slots;
};

// Month precision only; nothing that identifies a device or an image.
struct ValidationLogEntry {
  std::string month;
  std::uint32_t key_table_id = 0;
  std::string result;
  friend bool operator==(const ValidationLogEntry&, const ValidationLogEntry&) = default;
};

struct AnomalyFlag {
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  std::int64_t hour = 0;  // unix_seconds / 3600
  std::uint32_t count = 0;
};

struct KeyStats {
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  std::uint32_t devices = 0;
  bool below_warning = false;
};

struct AuthorityStats {
  std::size_t legitimate = 0;
  std::size_t revoked = 0;
  std::size_t log_entries = 0;
  bool bootstrap = true;
  std::vector<KeyStats> keys;
  std::map<std::string, std::size_t> validations_per_month;
};

// Everything an attacker obtains by fully compromising the MA.
struct AuthoritySnapshot {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<SymmetricKey>> keys;  // current + retired
  std::unordered_set<Hash256> legitimate;
  std::unordered_set<Hash256> revoked;
  std::vector<ValidationLogEntry> log;
};

class ManufacturerAuthority {
 public:
  // With a seed, table keys and the signing key are derived deterministically
  // (simulation); without one they come from the system CSPRNG.
  explicit ManufacturerAuthority(std::string validator_id, AuthorityConfig config = {},
                                 std::optional<std::uint64_t> seed = std::nullopt);

  const std::string& validator_id() const noexcept { return id_; }
  const PublicKey& public_key() const noexcept { return signer_.public_key(); }
  const AuthorityConfig& config() const noexcept { return config_; }

  // Throws Error(Rejected) for revoked fingerprints or when no key meets k_min.
  Provisioning provision_device(const Hash256& nuc_hash, const PublicKey& device_key);
  // Ends bootstrap: from now on only keys with >= k_min devices are assigned.
  void seal_bootstrap() noexcept { bootstrap_ = false; }

  // authenticated_peer is the transport-level identity of the caller; it
  // must match the server id the approval will be bound to.
  ValidationResponse validate(const ValidationRequest& request, std::string_view authenticated_peer,
                              std::int64_t now);
  Bytes handle(ByteView request_bytes, std::string_view authenticated_peer, std::int64_t now);

  // Raw approval signature with no checks. Exposed so the harness can model
  // a stolen HSM key.
  Signature64 sign_approval(const Hash256& record_hash, std::string_view server_id) const;

  void revoke(const Hash256& nuc_hash);
  bool is_revoked(const Hash256& nuc_hash) const { return revoked_.contains(nuc_hash); }

  // Replaces the slot key. The old key keeps validating for the grace window.
  // Throws Error(NotFound) for an unknown slot.
  RotationNotice rotate_key(std::uint32_t table_id, std::uint32_t key_index, std::int64_t now);

  // Drops log entries older than the retention window.
  void expire_logs(std::int64_t now);

  const std::vector<ValidationLogEntry>& log() const noexcept { return log_; }
  const std::vector<AnomalyFlag>& anomalies() const noexcept { return anomalies_; }
  AuthorityStats stats() const;
  AuthoritySnapshot compromise() const;
  nlohmann::json dump_state() const;

 private:
  struct RetiredKey {
    SymmetricKey key;
    std::int64_t expires_at;
  };
  struct Slot {
    SymmetricKey key;
    std::uint32_t devices = 0;
    std::vector<RetiredKey> retired;
  };

  SymmetricKey fresh_key();
  void record(std::int64_t now, std::uint32_t table, std::string_view result);
  void count_use(std::uint32_t table, std::uint32_t index, std::int64_t now);

  std::string id_;
  AuthorityConfig config_;
  std::optional<std::mt19937_64> rng_;
  std::mt19937_64 assign_rng_;
  SigningKeypair signer_;
  std::vector<std::vector<Slot>> tables_;
  bool bootstrap_ = true;
  std::unordered_set<Hash256> legitimate_;
  std::unordered_set<Hash256> revoked_;
  std::vector<ValidationLogEntry> log_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::int64_t>, std::uint32_t> hourly_;
  std::vector<AnomalyFlag> anomalies_;
};

// Month index (year*12 + month-1) of a "YYYY-MM" string.
int month_ordinal(std::string_view month);

}  // namespace birthmark
