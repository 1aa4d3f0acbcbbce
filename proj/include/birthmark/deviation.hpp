// SPDX-License-Identifier: Apache-2.0
//
// Software-tool reporting and the stochastic integrity audit.
//
// Editing tools declare the Level-1 operations they applied. The audit
// replays those operations on random patches of the parent and measures how
// far the submitted result strays from the replay. The deviation metric is
// mean absolute difference normalized by 255, averaged over patches.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "birthmark/crypto.hpp"
#include "birthmark/image.hpp"

namespace birthmark {

enum class ModificationLevel : std::uint8_t {
  raw = 0,        // unprocessed sensor data
  validated = 1,  // tonal/compositional edits only
  modified = 2,   // content modification
};

struct Exposure {
  float stops = 0;
  friend bool operator==(const Exposure&, const Exposure&) = default;
};
struct WhiteBalance {
  float r = 1, g = 1, b = 1;
  friend bool operator==(const WhiteBalance&, const WhiteBalance&) = default;
};
struct Denoise {
  std::uint32_t radius = 1;
  friend bool operator==(const Denoise&, const Denoise&) = default;
};
struct Crop {
  std::uint32_t x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const Crop&, const Crop&) = default;
};

using DeclaredOp = std::variant<Exposure, WhiteBalance, Denoise, Crop>;

inline constexpr float kMaxExposureStops = 2.0f;
inline constexpr float kMaxWhiteBalanceGain = 4.0f;
inline constexpr std::uint32_t kMaxDenoiseRadius = 32;

// Level-1 bounds; crops are checked against image size in apply_ops.
bool op_in_bounds(const DeclaredOp& op) noexcept;

// "exposure +1.5", "wb 1.1,1,0.9", "denoise 2", "crop 0,0,640,480"
std::string describe(const DeclaredOp& op);
DeclaredOp parse_op(std::string_view text);

struct DeviationReport {
  std::vector<DeclaredOp> operations;
  ModificationLevel proposed_level = ModificationLevel::raw;
  float reported_score = 0;
  Hash256 code_hash{};

  friend bool operator==(const DeviationReport&, const DeviationReport&) = default;
};

// Version string of the audit routine; bump on any change to apply_ops or
// the deviation metric.
inline constexpr std::string_view kAuditCodeVersion = "birthmark-audit/1";
const Hash256& audit_code_hash();

DeviationReport make_report(std::vector<DeclaredOp> ops, ModificationLevel level, float reported_score = 0);

// op_count u8, ops, proposed_level u8, reported_score f32, code_hash[32].
// Ops: kind u8 (1 exposure, 2 white balance, 3 denoise, 4 crop) + params.
Bytes encode(const DeviationReport& report);
DeviationReport decode_deviation_report(ByteView bytes);

// Level implied by a declared op list: none -> raw, all within Level-1
// bounds -> validated, otherwise modified.
ModificationLevel level_for(std::span<const DeclaredOp> ops) noexcept;

// Self-consistency check applied before a level is approved: raw reports
// carry no operations, validated reports carry only in-bounds operations,
// a known code hash and a score at or below the threshold. Modified reports
// are always acceptable.
bool level_policy_ok(const DeviationReport& report, double threshold);

// Deterministic pixel transforms. Throws Error(InvalidOp) for out-of-bounds
// crops or operations outside Level-1 bounds.
PixelImage apply_ops(const PixelImage& image, std::span<const DeclaredOp> ops);

struct AuditConfig {
  double threshold = 0.16;  // manufacturer-specific, inside the 15-18% band
  double mismatch_tolerance = 0.05;
  std::uint32_t patch_count = 100;
  std::uint32_t patch_size = 64;
  // Production mode: patch size drawn per audit from [48, 80].
  bool randomize_patch_size = false;
};

struct PatchSample {
  std::uint32_t x = 0, y = 0, size = 0;  // result coordinates
  double deviation = 0;
};

struct AuditVerdict {
  double measured_score = 0;
  bool pass = false;
  std::vector<std::string> flags;
  std::vector<PatchSample> patches;
};

AuditVerdict audit(const PixelImage& parent, const PixelImage& result, const DeviationReport& report,
                   std::uint64_t rng_seed, const AuditConfig& config = {});

// Probability that a single uniformly placed square patch overlaps the
// given rectangle, and the chance that all `patches` samples miss it.
double patch_hit_probability(std::uint32_t width, std::uint32_t height, std::uint32_t patch, const Crop& region);
double patch_miss_bound(double hit_probability, std::uint32_t patches);

struct AuditLogEntry {
  std::string software_id;
  std::string manufacturer;
  std::string month;  // YYYY-MM
  bool passed = true;
  double measured_score = 0;
};

struct RedFlagCluster {
  std::string software_id;
  std::string month;
  std::size_t failures = 0;
  std::vector<std::string> manufacturers;
};

// Groups of >= min_failures failed audits with the same (software, month).
std::vector<RedFlagCluster> cluster_flags(std::span<const AuditLogEntry> log, std::size_t min_failures = 5);

// Holds the audit log; audits a random fraction of submissions.
class SoftwareAuthority {
 public:
  explicit SoftwareAuthority(AuditConfig config = {}, double audit_probability = 0.10, std::uint64_t seed = 0);

  std::optional<AuditVerdict> maybe_audit(const PixelImage& parent, const PixelImage& result,
                                          const DeviationReport& report, const std::string& software_id,
                                          const std::string& manufacturer, const std::string& month);
  AuditVerdict audit_and_log(const PixelImage& parent, const PixelImage& result, const DeviationReport& report,
                             const std::string& software_id, const std::string& manufacturer,
                             const std::string& month);

  const std::vector<AuditLogEntry>& log() const noexcept { return log_; }
  std::vector<RedFlagCluster> clusters(std::size_t min_failures = 5) const { return cluster_flags(log_, min_failures); }

 private:
  AuditConfig config_;
  double probability_;
  std::mt19937_64 rng_;
  std::vector<AuditLogEntry> log_;
};

// Uniform integer in [0, bound) without distribution-object portability issues.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace birthmark
