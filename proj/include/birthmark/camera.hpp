// SPDX-License-Identifier: Apache-2.0
//
// Emulated camera. A sensor identity (factory NUC map or PRNU enrollment)
// yields the device fingerprint; the signing key lives in a SecureElement
// that only exposes sign(). Captures become CameraPackets that go to two of
// three selected submission servers, or into a persistent retry queue.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "birthmark/authority.hpp"
#include "birthmark/image.hpp"
#include "birthmark/server.hpp"
#include "birthmark/wire.hpp"

namespace birthmark {

class SecureElement {
 public:
  explicit SecureElement(SigningKeypair keypair) : keypair_(std::move(keypair)) {}
  const PublicKey& public_key() const noexcept { return keypair_.public_key(); }
  Signature64 sign(ByteView message) const { return keypair_.sign(message); }

 private:
  SigningKeypair keypair_;
};

// Per-pixel gain correction calibrated at the factory.
struct NucMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> gains;

  Bytes bytes() const;  // f32 LE, row-major
  Hash256 hash() const { return sha256(bytes()); }
  static NucMap synthetic(std::uint32_t width, std::uint32_t height, std::uint64_t seed);
};

enum class SensorKind : std::uint8_t { ManufacturingCalibrated, PrnuSeeded };

struct SensorIdentity {
  SensorKind kind = SensorKind::ManufacturingCalibrated;
  std::optional<NucMap> nuc_map;  // calibrated sensors only
  Hash256 nuc_hash{};             // the fingerprint the MA registers
  std::shared_ptr<SecureElement> secure_element;
};

// Factory path: fingerprint = SHA-256(NUC map); key generated inside the SE.
SensorIdentity calibrated_identity(NucMap map, std::optional<Hash256> key_seed = std::nullopt);

// Fingerprint registered for a PRNU-seeded device, derived from its public key.
Hash256 prnu_fingerprint(const PublicKey& key);

inline constexpr std::size_t kEnrollmentFrames = 20;

// Residual estimate mean(frame - gaussian(frame)) over 20 frames, quantized;
// key seed = SHA-256(prnu || entropy). The pattern is zeroized before return.
SensorIdentity enroll_prnu(std::span<const PixelImage> frames, const Hash256& entropy);

// Frames of a smooth scene multiplied by a fixed per-pixel sensor pattern.
std::vector<PixelImage> synthetic_prnu_frames(std::uint32_t width, std::uint32_t height, std::uint64_t sensor_seed,
                                              std::uint64_t scene_seed, std::size_t count = kEnrollmentFrames,
                                              double strength = 0.03);
// The per-pixel pattern used above, quantized to i8 (for leak scans).
Bytes synthetic_prnu_pattern(std::uint32_t width, std::uint32_t height, std::uint64_t sensor_seed, double strength = 0.03);

struct ServerSelection {
  std::vector<std::string> servers;  // up to three
  bool degraded = false;
  std::int64_t selected_at = 0;
};

// Drops the floor(n/4) busiest servers, then prefers one server per region.
// Region diversity is relaxed before the load rule. Fewer than two eligible
// servers gives a degraded selection from the whole list.
ServerSelection choose_servers(std::span<const RegistryEntry> registry, std::mt19937_64& rng);

enum class DeliveryStatus : std::uint8_t { Delivered, Unreachable, Rejected };

class SubmissionTransport {
 public:
  virtual ~SubmissionTransport() = default;
  virtual DeliveryStatus deliver(const std::string& server_id, ByteView packet) = 0;
};

struct QueueEntry {
  Bytes packet;
  Hash256 image_hash{};
  std::vector<std::string> delivered;
  std::int64_t first_delivery = 0;
  std::uint32_t attempts = 0;
  std::int64_t next_retry = 0;
  std::int64_t enqueued_at = 0;
};

struct RetryPolicy {
  double base_seconds = 2;
  double factor = 2;
  double cap_seconds = 600;
  double jitter = 0.2;
  // A lone delivery older than this no longer has a pending partner.
  std::int64_t pairing_timeout = 600;

  std::int64_t delay(std::uint32_t attempts, std::mt19937_64& rng) const;
};

// FIFO; every mutation rewrites the JSON file via write-then-rename.
class SubmissionQueue {
 public:
  SubmissionQueue() = default;
  explicit SubmissionQueue(std::filesystem::path path);

  void push(QueueEntry entry);
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::vector<QueueEntry>& entries() noexcept { return entries_; }
  void persist() const;

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<QueueEntry> entries_;
};

struct DualReceipt {
  std::vector<std::string> delivered;
  std::vector<std::string> rejected;
  bool queued = false;
};

struct CaptureOptions {
  bool metadata = false;
  std::vector<DeclaredOp> declared_ops;
  std::optional<Hash256> parent;
  float reported_score = 0;
  // Forces level 2 for content edits that are not expressed as ops.
  bool content_modified = false;
};

struct CaptureOutput {
  CameraPacket packet;
  std::optional<Nonce> nonce;
  MetadataClaims claims;
};

struct AgentConfig {
  std::string owner = "anonymous";
  double latitude = 0;
  double longitude = 0;
  std::int64_t selection_refresh_seconds = 86400;
  RetryPolicy retry;
  std::optional<std::filesystem::path> queue_path;
  std::optional<std::uint64_t> seed;  // deterministic nonces/slot choice in simulation
};

class CameraAgent {
 public:
  CameraAgent(SensorIdentity identity, std::string validator_id, AgentConfig config = {});

  const SensorIdentity& identity() const noexcept { return identity_; }
  const std::string& validator_id() const noexcept { return validator_id_; }
  const PublicKey& public_key() const noexcept { return identity_.secure_element->public_key(); }

  void install(const Provisioning& provisioning);
  bool provisioned() const noexcept { return device_cert_.has_value() && !slots_.empty(); }
  const std::vector<KeySlot>& slots() const noexcept { return slots_; }
  // Applies a notice for a slot this device holds. Returns false otherwise.
  bool apply_rotation(const RotationNotice& notice);

  // Throws Error(NotProvisioned) without a device cert and key slots.
  CaptureOutput capture_and_build(const PixelImage& image, const CaptureOptions& options, std::int64_t now);

  // Cached for selection_refresh_seconds.
  const ServerSelection& select_servers(std::span<const RegistryEntry> registry, std::int64_t now);
  const ServerSelection& selection() const noexcept { return selection_; }

  // Sends to two selected servers, substituting the third on failure. Never
  // throws for network trouble; undelivered packets are queued.
  DualReceipt submit(const CameraPacket& packet, SubmissionTransport& transport, std::int64_t now);
  // Retries queue entries whose backoff has elapsed. Returns completed count.
  std::size_t drain(SubmissionTransport& transport, std::int64_t now);

  SubmissionQueue& queue() noexcept { return queue_; }
  std::uint64_t submissions() const noexcept { return submission_counter_; }

  // Writes the device cert, slot references and public key; no private key
  // or sensor pattern material.
  void save_identity(const std::filesystem::path& path) const;

 private:
  bool attempt(QueueEntry& entry, SubmissionTransport& transport, std::int64_t now, std::size_t rotation,
               std::vector<std::string>& rejected);

  SensorIdentity identity_;
  std::string validator_id_;
  AgentConfig config_;
  std::mt19937_64 rng_;
  std::optional<DeviceCertificate> device_cert_;
  std::vector<KeySlot> slots_;
  ServerSelection selection_;
  bool has_selection_ = false;
  SubmissionQueue queue_;
  std::uint64_t submission_counter_ = 0;
};

// "<image>.nonce" sidecar: 32 hex characters.
void write_nonce_sidecar(const std::filesystem::path& path, const Nonce& nonce);
Nonce read_nonce_sidecar(const std::filesystem::path& path);

}  // namespace birthmark
