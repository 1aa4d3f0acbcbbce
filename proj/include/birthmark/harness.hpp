// SPDX-License-Identifier: Apache-2.0
//
// Deterministic multi-role simulation. A World wires one Manufacturer
// Authority, a set of submission servers, a validator consortium and camera
// agents over an in-process bus. Every delivered payload is scanned by the
// taint ledger, so after a run one can ask which role ever saw which image
// hash, fingerprint, device key or table key.
//
// The factory production records (fingerprint -> serial) and capture ground
// truth live only in the World, never in a role.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "birthmark/authority.hpp"
#include "birthmark/camera.hpp"
#include "birthmark/chain.hpp"
#include "birthmark/server.hpp"

namespace birthmark::sim {

enum class Atom : std::uint8_t { ImageHash, NucHash, DeviceKey, TableKey };
inline constexpr std::size_t kAtomKinds = 4;
std::string_view to_string(Atom a) noexcept;

class TaintLedger {
 public:
  // Atoms shorter than 8 bytes are not tracked.
  void add_atom(Atom kind, ByteView value);
  // Records every registered atom that occurs anywhere in payload.
  void observe(const std::string& role, ByteView payload);

  // Distinct atoms of a kind seen by roles whose name starts with prefix.
  std::size_t count(std::string_view role_prefix, Atom kind) const;
  bool saw(const std::string& role, Atom kind, ByteView value) const;
  std::vector<std::string> roles() const;
  std::size_t atoms(Atom kind) const noexcept { return totals_[static_cast<std::size_t>(kind)]; }
  nlohmann::json to_json() const;

 private:
  struct Entry {
    Atom kind;
    Bytes value;
  };
  std::vector<Entry> atoms_;
  std::map<Bytes, std::uint32_t> ids_;
  std::unordered_multimap<std::uint64_t, std::uint32_t> prefix_;
  std::map<std::string, std::array<std::set<std::uint32_t>, kAtomKinds>> seen_;
  std::array<std::size_t, kAtomKinds> totals_{};
};

struct BusMessage {
  std::string from;
  std::string to;
  std::string kind;
  Bytes payload;
};

// Synchronous delivery between named roles ("camera", "server:<id>",
// "ma:<id>", "validator:<id>", "observer", "attacker").
class Bus {
 public:
  explicit Bus(TaintLedger& taint) : taint_(taint) {}

  // False when either endpoint is down; nothing is observed then.
  bool send(const std::string& from, const std::string& to, std::string_view kind, ByteView payload);
  void set_down(const std::string& role, bool down);
  bool is_down(const std::string& role) const { return down_.contains(role); }

  // An eavesdropper on every link touching a role with this prefix. Tapped
  // messages are recorded and count as observed by "attacker".
  void tap(std::string role_prefix) { taps_.push_back(std::move(role_prefix)); }
  const std::vector<BusMessage>& tapped() const noexcept { return tapped_; }

  std::size_t delivered() const noexcept { return delivered_; }
  std::size_t dropped() const noexcept { return dropped_; }

 private:
  TaintLedger& taint_;
  std::set<std::string> down_;
  std::vector<std::string> taps_;
  std::vector<BusMessage> tapped_;
  std::size_t delivered_ = 0;
  std::size_t dropped_ = 0;
};

struct ServerSpec {
  std::string id;
  std::string region;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  std::size_t devices = 12;
  std::vector<ServerSpec> servers = {
      {"node-eu-1", "eu"}, {"node-us-3", "us"}, {"node-ap-2", "ap"}, {"node-sa-1", "sa"}};
  std::size_t validators = 4;
  std::string validator_id = "CANON_001";
  AuthorityConfig authority = small_authority();
  ChainConfig chain;
  std::int64_t start_time = 1767225600;  // 2026-01-01T00:00:00Z
  std::uint32_t image_size = 16;
  bool seal_bootstrap = false;

  static AuthorityConfig small_authority();
};

struct Device {
  std::string serial;
  std::unique_ptr<CameraAgent> agent;
  Hash256 nuc_hash{};
  DeviceCertificate cert;
  std::vector<KeySlot> slots;  // as provisioned
};

struct CaptureRecord {
  std::size_t device = 0;
  Hash256 image_hash{};
  CaptureOutput output;
  DualReceipt receipt;
  std::int64_t at = 0;
};

class World {
 public:
  explicit World(WorldConfig config);
  ~World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const WorldConfig& config() const noexcept { return config_; }
  TaintLedger& taint() noexcept { return taint_; }
  const TaintLedger& taint() const noexcept { return taint_; }
  Bus& bus() noexcept { return bus_; }
  ManufacturerAuthority& ma() noexcept { return *ma_; }
  const ManufacturerAuthority& ma() const noexcept { return *ma_; }
  std::string ma_role() const { return "ma:" + ma_->validator_id(); }
  std::size_t server_count() const noexcept { return servers_.size(); }
  SubmissionServer& server(std::size_t i) { return *servers_.at(i); }
  const SubmissionServer& server(std::size_t i) const { return *servers_.at(i); }
  SubmissionServer& server(std::string_view id);
  ServerRegistry& registry() noexcept { return registry_; }
  Consortium& consortium() noexcept { return consortium_; }
  const Consortium& consortium() const noexcept { return consortium_; }
  std::size_t device_count() const noexcept { return devices_.size(); }
  Device& device(std::size_t i) { return devices_.at(i); }
  const Device& device(std::size_t i) const { return devices_.at(i); }

  std::int64_t now() const noexcept { return now_; }
  void advance(std::int64_t seconds) { now_ += seconds; }

  // Ground truth.
  const std::unordered_map<Hash256, std::string>& production_records() const noexcept { return production_; }
  std::optional<std::size_t> true_device(const Hash256& image_hash) const;
  const std::vector<CaptureRecord>& captures() const noexcept { return captures_; }

  // Adds a provisioned calibrated device; returns its index.
  std::size_t add_device();
  // Provisions the given identity; throws Error(Rejected) like the MA.
  std::size_t add_device(SensorIdentity identity);
  SensorIdentity make_identity(std::uint64_t salt) const;
  // Seeded image never produced before in this world.
  PixelImage next_image();

  CaptureRecord capture(std::size_t device, const CaptureOptions& options = {});
  CaptureRecord capture_image(std::size_t device, const PixelImage& image, const CaptureOptions& options = {});
  // Builds without submitting; registers the image hash as an atom.
  CaptureOutput build(std::size_t device, const PixelImage& image, const CaptureOptions& options = {});

  SubmissionTransport& transport() noexcept;
  // Server-side result of the most recent packet a server processed.
  const std::vector<std::pair<std::string, SubmissionResult>>& server_results() const noexcept { return results_; }
  // Sends a forwarded approval from a role to every validator.
  std::vector<AdmitResult> forward(const std::string& from_role, const ForwardedApproval& fwd);

  // Agents retry their queues; returns completed entries.
  std::size_t drain_all();
  // Runs voting rounds until nothing finalizable is left; the observer then
  // reads the new chain entries.
  std::size_t settle();
  void publish_registry();

  // Honest reference store (first honest validator).
  const RecordStore& chain() const;
  std::size_t finalized() const { return chain().size(); }
  std::set<std::size_t> offline_validators() const;
  std::string validator_role(std::size_t i) const;
  std::string server_role(std::string_view id) const { return "server:" + std::string(id); }

 private:
  class Transport;
  class MaLink;

  WorldConfig config_;
  TaintLedger taint_;
  Bus bus_;
  std::unique_ptr<ManufacturerAuthority> ma_;
  std::vector<std::unique_ptr<SubmissionServer>> servers_;
  std::vector<std::unique_ptr<MaLink>> links_;
  std::unique_ptr<Transport> transport_;
  ServerRegistry registry_;
  Consortium consortium_;
  std::vector<Device> devices_;
  std::unordered_map<Hash256, std::string> production_;
  std::unordered_map<Hash256, std::size_t> image_owner_;
  std::vector<CaptureRecord> captures_;
  std::vector<std::pair<std::string, SubmissionResult>> results_;
  std::int64_t now_;
  std::uint64_t image_counter_ = 0;
  std::size_t observed_ = 0;
};

// Correlation attack over compromised stores. The attacker also knows which
// devices share each key slot (key table knowledge).
struct CompromiseSet {
  bool ma = false;          // full MA state: keys, legitimacy set, logs
  bool servers = false;     // every submission server log
  bool production = false;  // fingerprint -> serial
  std::string label() const;
  std::size_t size() const noexcept { return ma + servers + production; }
};

struct LinkageResult {
  CompromiseSet stores;
  std::size_t trials = 0;
  std::size_t correct = 0;
  double linkage = 0;       // correct / trials
  double expected = 0;      // mean posterior probability of the true device
  double k = 0;             // mean devices per key slot
  double population = 0;
  double bound = 0;         // 1/k + 3 sigma (partial compromise)
  bool within_bound = false;
};

LinkageResult correlation_attack(const World& world, const CompromiseSet& stores, std::uint64_t seed);

struct TimingReport {
  std::map<std::uint32_t, std::size_t> histogram;  // posting bin -> records
  std::vector<std::uint32_t> low_bins;             // bins under the minimum
  std::size_t misaligned = 0;
  std::vector<std::string> warnings;
};

TimingReport timing_anonymity(const RecordStore& store, std::size_t min_records = 10);

struct SweepCell {
  std::size_t n = 0;
  std::size_t f = 0;
  std::size_t runs = 0;
  std::size_t safe_runs = 0;
  std::size_t diverged = 0;            // honest stores not byte-identical
  std::size_t invalid_finalized = 0;   // invalid record finalized or certified
  std::size_t conflicting = 0;         // two certified candidates for one image
  bool tolerated() const noexcept { return f <= (n - 1) / 3; }
};

// Seeded rounds over a fixed approval pool with f Byzantine validators,
// for f = 0 .. floor((n-1)/3)+1.
std::vector<SweepCell> byzantine_sweep(std::span<const std::size_t> sizes, std::size_t runs, std::uint64_t seed);

// Clone-stamp fixture for the deviation audit: a two-level checker parent,
// the honest result of the declared ops and a tampered result where square
// dabs copied from one cell over cover at least `coverage` of the frame.
struct AuditFixture {
  PixelImage parent;
  PixelImage honest;
  PixelImage tampered;
  std::vector<DeclaredOp> ops;
  std::vector<Crop> dabs;
  double covered = 0;  // fraction of result pixels inside a dab
};

AuditFixture clone_stamp_fixture(std::uint32_t size, double coverage, std::uint32_t dab, std::uint64_t seed);

// Probability that 100 (patch_count) uniform patches all miss every dab.
double clone_miss_bound(const AuditFixture& fixture, const AuditConfig& config = {});

// Reporting.

struct Finding {
  std::string scenario;
  std::string attack;
  std::string outcome;   // DEFENDED, BREACHED, PASS, FAIL
  std::string expected;
  std::string evidence;
  bool as_expected() const { return outcome == expected; }
};

struct SecurityReport {
  std::vector<Finding> findings;
  std::vector<std::string> warnings;
  bool ok() const;
  std::string text() const;
  nlohmann::json to_json() const;
  void merge(const SecurityReport& other);
};

struct Assertion {
  std::string metric;
  std::string op;  // == != < <= > >=
  double value = 0;
};

struct FaultEvent {
  std::size_t at = 0;  // capture index
  std::string action;  // "down" | "up"
  std::vector<std::string> roles;
};

struct Scenario {
  std::string name;
  std::string kind;
  std::uint64_t seed = 1;
  WorldConfig world;
  nlohmann::json params = nlohmann::json::object();
  std::vector<FaultEvent> faults;
  std::vector<Assertion> assertions;
};

// Throws Error(InvalidInput) with a diagnostic for malformed scenarios.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

std::vector<std::string> scenario_kinds();
std::vector<Scenario> builtin_suite();

// Runs one scenario to quiescence and evaluates its assertions. Taint
// totals for the flow properties are added to `flow` when given.
struct FlowTotals {
  std::size_t ma_image_hashes = 0;
  std::size_t server_nuc_hashes = 0;
  std::size_t server_table_keys = 0;
  std::size_t observer_nuc_hashes = 0;
  std::size_t observer_device_keys = 0;
  // Controls: the ledger does see what it is supposed to see.
  std::size_t server_image_hashes = 0;
  std::size_t registered_nuc_hashes = 0;
  std::size_t worlds = 0;
};

SecurityReport run_scenario(const Scenario& scenario, FlowTotals* flow = nullptr);
// Runs every scenario and appends the suite-wide flow property findings.
SecurityReport run_suite(const std::vector<Scenario>& scenarios);

}  // namespace birthmark::sim
