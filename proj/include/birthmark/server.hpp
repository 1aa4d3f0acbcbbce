// SPDX-License-Identifier: Apache-2.0
//
// Submission server: checks the camera-side bindings of a packet, asks the
// owning Manufacturer Authority for an approval bound to this server's id,
// co-signs, and hands the result to the chain validators. It never holds a
// table key and never sees a device fingerprint in the clear.
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "birthmark/wire.hpp"

namespace birthmark {

// How a server reaches an MA. Returns nullopt when the MA is unreachable.
class AuthorityLink {
 public:
  virtual ~AuthorityLink() = default;
  virtual std::optional<ValidationResponse> validate(const ValidationRequest& request) = 0;
};

enum class ServerRejection : std::uint8_t {
  Malformed = 1,
  BadDeviceCert,
  BadSignature,
  BindingMismatch,
  LevelMismatch,
  UnknownValidator,
  AuthorityUnreachable,
  Authority,  // see SubmissionRejected::authority
};
std::string_view to_string(ServerRejection r) noexcept;

struct SubmissionRejected {
  ServerRejection reason = ServerRejection::Malformed;
  std::optional<MaRejection> authority;
  std::string describe() const;
};

using SubmissionResult = std::variant<ForwardedApproval, SubmissionRejected>;

// Kept for the correlation analysis: the image hash together with the still
// encrypted token and its key slot.
struct ServerLogEntry {
  std::int64_t arrival = 0;
  Hash256 image_hash{};
  std::uint32_t key_table_id = 0;
  std::uint32_t key_index = 0;
  EncryptedToken encrypted_token{};
};

struct RegistryEntry {
  std::string server_id;
  std::string region;
  std::uint32_t load_rank = 0;  // 0 = least loaded
  std::int64_t updated_at = 0;
  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

class SubmissionServer {
 public:
  SubmissionServer(std::string server_id, std::string region, std::optional<std::uint64_t> seed = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  const std::string& region() const noexcept { return region_; }
  const PublicKey& public_key() const noexcept { return signer_.public_key(); }

  // Route certificates naming validator_id to this MA.
  void trust_authority(const std::string& validator_id, const PublicKey& ma_key, AuthorityLink* link);

  SubmissionResult handle_submission(const CameraPacket& packet, std::int64_t now);
  SubmissionResult handle_bytes(ByteView packet_bytes, std::int64_t now);

  std::uint64_t submissions() const noexcept { return submissions_; }
  const std::vector<ServerLogEntry>& log() const noexcept { return log_; }
  void expire_logs(std::int64_t now);
  std::int64_t log_retention_seconds = 90 * 86400;

  // Signs an arbitrary record hash. Exposed so the harness can model a
  // compromised server operator.
  Signature64 sign_record_hash(const Hash256& record_hash) const;

 private:
  struct Authority {
    PublicKey key;
    AuthorityLink* link;
  };
  std::string id_;
  std::string region_;
  SigningKeypair signer_;
  std::map<std::string, Authority> authorities_;
  std::vector<ServerLogEntry> log_;
  std::uint64_t submissions_ = 0;
};

// Published list of servers with their load ranking ("servers.json").
class ServerRegistry {
 public:
  // Recomputes load ranks from per-server submission counts; ties break by id.
  void publish(std::span<const SubmissionServer* const> servers, std::int64_t now);
  void set(std::vector<RegistryEntry> entries) { entries_ = std::move(entries); }
  const std::vector<RegistryEntry>& entries() const noexcept { return entries_; }

  std::string to_json() const;
  static ServerRegistry from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ServerRegistry load(const std::filesystem::path& path);

 private:
  std::vector<RegistryEntry> entries_;
};

}  // namespace birthmark
