// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: birthmark-acceptance <path to birthmark cli>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "birthmark/bench.hpp"
#include "birthmark/deviation.hpp"
#include "birthmark/harness.hpp"

using namespace birthmark;
using namespace birthmark::sim;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr std::size_t kChainPayloadBytes = 113;
constexpr std::size_t kChainEntryBytes = 153;
constexpr std::size_t kPacketMin = 405, kPacketMax = 420;
constexpr std::size_t kBundleMin = 340, kBundleMax = 360;
constexpr double kStorageTargetGb = 55.8;
constexpr double kStorageRelTol = 0.01;
constexpr double kStorageBandLow = 55.0, kStorageBandHigh = 56.0;
constexpr std::size_t kSweepRuns = 100;
constexpr std::size_t kCorrelationDevices = 2000;
constexpr double kCorrelationKLow = 900, kCorrelationKHigh = 1100;
constexpr double kTripleLinkageMin = 0.99;
constexpr std::uint32_t kPostingSeconds = 600;
constexpr std::size_t kLowTrafficRecords = 10;
constexpr std::uint32_t kCloneSide = 1024;
constexpr double kCloneCoverage = 0.10;
constexpr std::uint32_t kCloneDab = 160;
constexpr std::size_t kCloneTrials = 100;
constexpr std::size_t kCloneCaughtMin = 99;
constexpr double kAuditThreshold = 0.16;
constexpr double kCameraP95Ms = 100;
constexpr double kLookupP99Ms = 50;
constexpr double kVerifyMs = 500;
constexpr std::size_t kOutageCaptures = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string cli_path;
SecurityReport suite_report;

const Finding* find(const std::string& scenario, const std::string& attack_prefix) {
  for (const auto& f : suite_report.findings) {
    if (f.scenario == scenario && f.attack.rfind(attack_prefix, 0) == 0) return &f;
  }
  return nullptr;
}

// All findings of a scenario match their expected outcome, and there is at least `min` of them.
Outcome scenario_clean(const std::string& scenario, std::size_t min) {
  std::size_t n = 0, bad = 0;
  std::string first_bad;
  for (const auto& f : suite_report.findings) {
    if (f.scenario != scenario) continue;
    ++n;
    if (!f.as_expected()) {
      ++bad;
      if (first_bad.empty()) first_bad = f.attack + " -> " + f.outcome + " (" + f.evidence + ")";
    }
  }
  if (n < min) return {false, fmt::format("{}: {} findings, expected at least {}", scenario, n, min)};
  if (bad) return {false, fmt::format("{}: {} unexpected; first: {}", scenario, bad, first_bad)};
  return {true, fmt::format("{}: {} findings as expected", scenario, n)};
}

Scenario& scenario_named(std::vector<Scenario>& suite, const std::string& name) {
  for (auto& s : suite) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("builtin scenario missing: " + name);
}

Outcome wire_conformance() {
  ChainRecord c;
  c.record.image_hash = sha256(as_bytes("image"));
  c.record.modification_level = ModificationLevel::validated;
  c.record.parent_image_hash = sha256(as_bytes("parent"));
  c.record.metadata = RecordMetadata{};
  c.posting_server_ids = "node-eu-1/node-us-3";
  c.posting_timestamp = posting_timestamp(1767225600);
  auto payload = encode(c);
  RecordStore store;
  store.append(c);

  WorldConfig cfg;
  cfg.devices = 1;
  World w(cfg);
  CaptureOptions with_metadata;
  with_metadata.metadata = true;
  auto bare = encode(w.build(0, w.next_image()).packet);
  auto out = w.build(0, w.next_image(), with_metadata);
  auto packet = encode(out.packet);
  std::vector<Approval> pair;
  for (std::size_t s = 0; s < 2; ++s) {
    auto res = w.server(s).handle_submission(out.packet, w.now());
    if (!std::holds_alternative<ForwardedApproval>(res)) return {false, "server refused the fixture packet"};
    pair.push_back(std::get<ForwardedApproval>(res).approval);
  }
  auto bundle = encode_bundle(pair);

  bool ok = payload.size() == kChainPayloadBytes && store.log_bytes() == kChainEntryBytes &&
            packet.size() >= kPacketMin && packet.size() <= kPacketMax && bundle.size() >= kBundleMin &&
            bundle.size() <= kBundleMax;
  return {ok, fmt::format("chain payload {} B, entry {} B, packet {} B ({} B without metadata hashes), "
                          "two-approval bundle {} B",
                          payload.size(), store.log_bytes(), packet.size(), bare.size(), bundle.size())};
}

Outcome storage_arithmetic() {
  std::string cmd = "\"" + cli_path + "\" stats --records-per-day 1000000 --json";
  std::FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {false, "cannot run " + cmd};
  std::string text;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) text += buf;
  int status = ::pclose(pipe);
  if (status != 0) return {false, fmt::format("stats exited with status {}", status)};
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("gb_per_year")) return {false, "stats output is not the expected JSON"};
  double gb = j["gb_per_year"].get<double>();
  double independent = 1e6 * 153.0 * 365.0 / 1e9;
  bool ok = std::abs(gb - kStorageTargetGb) <= kStorageRelTol * kStorageTargetGb && gb >= kStorageBandLow &&
            gb <= kStorageBandHigh && std::abs(gb - independent) < 1e-9;
  return {ok, fmt::format("stats projects {:.3f} GB/year for 1e6 records/day", gb)};
}

Outcome claim5() {
  auto base = scenario_clean("single-server-forge", 5);
  if (!base.pass) return base;
  const std::pair<const char*, const char*> options[] = {{"claim5 option A", "DEFENDED"},
                                                         {"claim5 option B", "DEFENDED"},
                                                         {"claim5 option C", "DEFENDED"},
                                                         {"claim5 option D", "DEFENDED"},
                                                         {"claim5 option E", "BREACHED"}};
  std::string detail;
  for (auto [name, want] : options) {
    auto* f = find("single-server-forge", name);
    if (!f || f->outcome != want) return {false, std::string(name) + " missing or not " + want};
    detail += fmt::format("{}={}; ", std::string(name).substr(7), f->evidence);
  }
  return {true, detail};
}

Outcome byzantine() {
  const std::vector<std::size_t> sizes{4, 10};
  auto cells = byzantine_sweep(sizes, kSweepRuns, 117);
  std::string detail;
  bool ok = true;
  std::map<std::size_t, bool> breached;
  for (const auto& c : cells) {
    const std::size_t tolerated = (c.n - 1) / 3;
    detail += fmt::format("n={} f={}: {}/{} safe, {} diverged; ", c.n, c.f, c.safe_runs, c.runs, c.diverged);
    if (c.f <= tolerated) {
      ok &= c.runs == kSweepRuns && c.safe_runs == c.runs && c.diverged == 0 && c.invalid_finalized == 0;
    } else if (c.f == tolerated + 1) {
      breached[c.n] = c.diverged > 0 || c.invalid_finalized > 0;
    }
  }
  for (auto n : sizes) ok &= breached[n];
  return {ok, detail};
}

Outcome information_flow() {
  const char* props[] = {"MA never observes an image hash", "servers never observe a fingerprint",
                         "taint ledger control"};
  std::string detail;
  bool ok = true;
  for (auto* p : props) {
    auto* f = find("flow-properties", p);
    bool good = f && f->as_expected() && f->outcome == "PASS";
    ok &= good;
    detail += fmt::format("{}: {}; ", p, f ? f->evidence : "missing");
  }
  return {ok, detail};
}

Outcome correlation() {
  auto suite = builtin_suite();
  auto sc = scenario_named(suite, "correlation-attack");
  sc.world.devices = kCorrelationDevices;
  World w(sc.world);
  for (std::size_t d = 0; d < w.device_count(); ++d) {
    w.capture(d);
    w.advance(3);
    if (d % 200 == 199) w.settle();
  }
  w.settle();

  bool ok = w.finalized() == kCorrelationDevices;
  std::string detail = fmt::format("{} devices; ", w.device_count());
  for (int mask = 0; mask < 8; ++mask) {
    CompromiseSet c{.ma = (mask & 1) != 0, .servers = (mask & 2) != 0, .production = (mask & 4) != 0};
    auto lk = correlation_attack(w, c, sc.seed + static_cast<std::uint64_t>(mask));
    if (c.size() == 3) {
      ok &= lk.linkage >= kTripleLinkageMin;
      detail += fmt::format("triple {:.3f}; ", lk.linkage);
      continue;
    }
    if (lk.trials == 0) return {false, "no trials for " + c.label()};
    const double p = 1.0 / lk.k;
    const double bound = p + 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(lk.trials));
    ok &= lk.k >= kCorrelationKLow && lk.k <= kCorrelationKHigh && lk.linkage <= bound;
    detail += fmt::format("{} {:.4f} (k={:.0f}, bound {:.4f}); ", c.label(), lk.linkage, lk.k, bound);
  }
  return {ok, detail};
}

Outcome replay() {
  auto base = scenario_clean("replay", 4);
  if (!base.pass) return base;
  auto* a = find("replay", "assert second_records == 0");
  return {a && a->outcome == "PASS", base.detail + (a ? "; " + a->evidence : "; second_records assertion missing")};
}

Outcome temporal() {
  auto base = scenario_clean("timing-correlation", 4);
  if (!base.pass) return base;
  auto* m = find("timing-correlation", "assert misaligned == 0");
  auto* l = find("timing-correlation", "assert low_bins >= 1");
  if (!m || !l) return {false, "alignment or low-traffic assertion missing"};

  // The threshold sits at 10: a 9-record bin is flagged, a 10-record bin is not.
  RecordStore store;
  std::uint32_t base_bin = posting_timestamp(1767225600);
  for (std::size_t i = 0; i < 2 * kLowTrafficRecords - 1; ++i) {
    ChainRecord c;
    c.record.image_hash = sha256(as_bytes("bin-" + std::to_string(i)));
    c.posting_server_ids = "a/b";
    c.posting_timestamp = base_bin + (i < kLowTrafficRecords ? 0 : 1);
    store.append(c);
  }
  auto rep = timing_anonymity(store, kLowTrafficRecords);
  bool threshold_ok = rep.low_bins == std::vector<std::uint32_t>{base_bin + 1} && !rep.warnings.empty();
  bool aligned = true;
  for (auto [bin, count] : rep.histogram) aligned &= (static_cast<std::uint64_t>(bin) * kPostingEpoch) % kPostingSeconds == 0;
  return {threshold_ok && aligned && m->outcome == "PASS" && l->outcome == "PASS",
          fmt::format("{}; {}; 9-record bin flagged: {}", m->evidence, l->evidence, threshold_ok ? "yes" : "no")};
}

Outcome deviation_audit() {
  AuditConfig cfg;
  cfg.threshold = kAuditThreshold;
  std::size_t caught = 0, replay_zero = 0;
  double worst_bound = 0, min_cover = 1;
  for (std::size_t t = 0; t < kCloneTrials; ++t) {
    auto fx = clone_stamp_fixture(kCloneSide, kCloneCoverage, kCloneDab, t);
    min_cover = std::min(min_cover, fx.covered);
    auto report = make_report(fx.ops, ModificationLevel::validated, 0.0f);
    replay_zero += audit(fx.parent, fx.honest, report, 1000 + t, cfg).measured_score == 0.0;
    caught += !audit(fx.parent, fx.tampered, report, 1000 + t, cfg).pass;
    worst_bound = std::max(worst_bound, clone_miss_bound(fx, cfg));
  }
  bool ok = caught >= kCloneCaughtMin && replay_zero == kCloneTrials && min_cover >= kCloneCoverage;
  return {ok, fmt::format("{}/{} clone-stamped results failed at threshold {:.2f} (min coverage {:.3f}); "
                          "{}/{} honest replays scored 0; analytic patch-miss bound {:.3g}",
                          caught, kCloneTrials, kAuditThreshold, min_cover, replay_zero, kCloneTrials, worst_bound)};
}

Outcome performance() {
  auto cam = bench_camera();
  auto look = bench_lookup();
  bool ok = cam.full.samples > 0 && cam.full.p95_ms < kCameraP95Ms && look.records == 1'000'000 &&
            look.lookup.p99_ms < kLookupP99Ms && look.verify_found && look.verify_rpc.max_ms < kVerifyMs &&
            look.verify_chain.max_ms < kVerifyMs;
  return {ok, fmt::format("camera p95 {:.2f} ms (12 MP); lookup p99 {:.4f} ms at {} records; loopback verify max {:.2f} ms, "
                          "with chain {:.2f} ms; log {:.1f} B/record",
                          cam.full.p95_ms, look.lookup.p99_ms, look.records, look.verify_rpc.max_ms,
                          look.verify_chain.max_ms, look.bytes_per_record)};
}

Outcome outage() {
  auto base = scenario_clean("dual-server-outage", 6);
  if (!base.pass) return base;
  const char* wanted[] = {"assert capture_failures == 0", "assert finalized == 50", "assert duplicates == 0",
                          "assert missing == 0"};
  for (auto* a : wanted) {
    auto* f = find("dual-server-outage", a);
    if (!f || f->outcome != "PASS") return {false, std::string(a) + " missing or failed"};
  }
  auto* q = find("dual-server-outage", "queued delivery across outage");
  return {true, q ? q->evidence : base.detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <birthmark cli>\n", argv[0]);
    return 2;
  }
  cli_path = argv[1];

  // The suite runs once; criteria 3, 5, 7, 8 and 11 read its findings. The
  // outage scenario is pinned to the acceptance capture count here.
  auto suite = builtin_suite();
  auto& out = scenario_named(suite, "dual-server-outage");
  out.params["captures"] = kOutageCaptures;
  out.assertions = {{"capture_failures", "==", 0},
                    {"finalized", "==", static_cast<double>(kOutageCaptures)},
                    {"duplicates", "==", 0},
                    {"missing", "==", 0},
                    {"queued_at_capture", ">", 0}};
  auto& timing = scenario_named(suite, "timing-correlation");
  timing.assertions = {{"misaligned", "==", 0}, {"low_bins", ">=", 1}};
  scenario_named(suite, "replay").assertions = {{"second_records", "==", 0}};
  suite_report = run_suite(suite);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"wire conformance", wire_conformance},
      {"storage arithmetic", storage_arithmetic},
      {"claim-5 forgery options", claim5},
      {"byzantine sweep", byzantine},
      {"information flow", information_flow},
      {"correlation attack", correlation},
      {"replay and uniqueness", replay},
      {"temporal privacy", temporal},
      {"deviation audit", deviation_audit},
      {"performance", performance},
      {"graceful degradation", outage},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed ? 1 : 0;
}
