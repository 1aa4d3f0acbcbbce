// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "birthmark/harness.hpp"

namespace birthmark::sim {

using nlohmann::json;

namespace {

constexpr const char* kDefended = "DEFENDED";
constexpr const char* kBreached = "BREACHED";
constexpr const char* kPass = "PASS";
constexpr const char* kFail = "FAIL";

const char* defended(bool ok) { return ok ? kDefended : kBreached; }
const char* pass(bool ok) { return ok ? kPass : kFail; }

std::string short_hex(const Hash256& h) { return h.hex().substr(0, 12); }

std::string describe(const SubmissionResult& r) {
  if (std::holds_alternative<ForwardedApproval>(r)) return "approved";
  return std::get<SubmissionRejected>(r).describe();
}

std::string describe(const AdmitResult& r) {
  switch (r.status) {
    case AdmitStatus::Pending: return "pending";
    case AdmitStatus::Finalizable: return "finalizable";
    case AdmitStatus::Rejected: return std::string(to_string(*r.reason));
  }
  return "?";
}

// Admission verdict of the first online validator.
std::string first_verdict(const std::vector<AdmitResult>& results) {
  return results.empty() ? "no validators" : describe(results.front());
}

struct Context {
  explicit Context(const Scenario& s) : sc(s) {}
  const Scenario& sc;
  SecurityReport report;
  std::map<std::string, double> metrics;
  std::vector<std::unique_ptr<World>> worlds;

  World& world(WorldConfig cfg) {
    worlds.push_back(std::make_unique<World>(std::move(cfg)));
    return *worlds.back();
  }
  World& world() { return world(sc.world); }

  void finding(std::string attack, std::string outcome, std::string expected, std::string evidence) {
    report.findings.push_back({sc.name, std::move(attack), std::move(outcome), std::move(expected), std::move(evidence)});
  }
  template <typename T>
  T param(const char* key, T fallback) const {
    return sc.params.contains(key) ? sc.params.at(key).get<T>() : fallback;
  }
};

// Captures on a timeline with scripted faults, then drives recovery until
// every queue is empty.
void run_timeline(Context& ctx) {
  auto& w = ctx.world();
  const auto captures = ctx.param<std::size_t>("captures", 50);
  const auto interval = ctx.param<std::int64_t>("interval", 30);
  const auto horizon = ctx.param<std::int64_t>("recovery_horizon", 6 * 3600);

  auto apply = [&](std::size_t index) {
    for (const auto& f : ctx.sc.faults) {
      if (f.at != index) continue;
      for (const auto& role : f.roles) w.bus().set_down(role, f.action == "down");
    }
  };

  std::size_t failures = 0, queued_peak = 0, queued_at_capture = 0;
  std::vector<Hash256> hashes;
  for (std::size_t i = 0; i < captures; ++i) {
    apply(i);
    try {
      auto rec = w.capture(i % w.device_count());
      hashes.push_back(rec.image_hash);
      queued_at_capture += rec.receipt.queued;
    } catch (const Error&) {
      ++failures;
    }
    w.drain_all();
    w.settle();
    std::size_t q = 0;
    for (std::size_t d = 0; d < w.device_count(); ++d) q += w.device(d).agent->queue().size();
    queued_peak = std::max(queued_peak, q);
    w.advance(interval);
  }
  for (const auto& f : ctx.sc.faults) {
    if (f.at >= captures) apply(f.at);
  }
  std::int64_t waited = 0;
  auto pending = [&] {
    std::size_t q = 0;
    for (std::size_t d = 0; d < w.device_count(); ++d) q += w.device(d).agent->queue().size();
    return q;
  };
  while ((pending() > 0 || w.consortium().queued() > 0) && waited < horizon) {
    w.advance(30);
    waited += 30;
    w.drain_all();
    w.settle();
  }
  w.settle();

  std::size_t missing = 0;
  for (const auto& h : hashes) missing += !w.chain().contains(h);
  std::set<Hash256> unique;
  for (std::uint32_t i = 0; i < w.chain().size(); ++i) unique.insert(w.chain().record_at(i)->record.image_hash);
  const std::size_t duplicates = w.chain().size() - unique.size();

  ctx.metrics["captures"] = static_cast<double>(captures);
  ctx.metrics["capture_failures"] = static_cast<double>(failures);
  ctx.metrics["finalized"] = static_cast<double>(w.finalized());
  ctx.metrics["missing"] = static_cast<double>(missing);
  ctx.metrics["duplicates"] = static_cast<double>(duplicates);
  ctx.metrics["queued_at_capture"] = static_cast<double>(queued_at_capture);
  ctx.metrics["queued_peak"] = static_cast<double>(queued_peak);
  ctx.metrics["queue_left"] = static_cast<double>(pending());
  ctx.metrics["recovery_seconds"] = static_cast<double>(waited);
  ctx.metrics["stores_identical"] = w.consortium().honest_stores_identical() ? 1 : 0;

  bool ok = failures == 0 && missing == 0 && duplicates == 0 && pending() == 0;
  ctx.finding("queued delivery across outage", pass(ok), kPass,
              fmt::format("{} captures, {} capture failures, {} queued at capture time (peak {}), {} finalized, {} "
                          "missing, {} duplicates, recovered {} s after the last capture",
                          captures, failures, queued_at_capture, queued_peak, w.finalized(), missing, duplicates,
                          waited));
}

// A single compromised server tries to put a record on the chain that no
// camera produced, using a token harvested from one honest packet.
void run_claim5(Context& ctx) {
  auto& w = ctx.world();
  auto& s1 = w.server(0);
  auto& s2 = w.server(1);
  const auto r1 = w.server_role(s1.id());
  const auto r2 = w.server_role(s2.id());

  auto honest = w.build(0, w.next_image());
  auto honest_bytes = encode(honest.packet);
  w.bus().send("camera", r1, "camera-packet", honest_bytes);
  auto harvested = decode_packet(honest_bytes).certificate;

  BirthmarkRecord forged;
  forged.image_hash = image_hash(w.next_image());
  w.taint().add_atom(Atom::ImageHash, forged.image_hash.view());
  const auto rh = record_hash(forged);
  auto cert = harvested;
  cert.record_hash = rh;

  auto ask_ma = [&](const std::string& from_role, const std::string& peer, const std::string& bound_to) {
    ValidationRequest req{cert, bound_to};
    auto bytes = encode(req);
    w.bus().send(from_role, w.ma_role(), "validation-request", bytes);
    auto reply = w.ma().handle(bytes, peer, w.now());
    w.bus().send(w.ma_role(), from_role, "validation-response", reply);
    return decode_validation_response(reply);
  };

  auto resp1 = ask_ma(r1, s1.id(), s1.id());
  if (!std::holds_alternative<MaApproval>(resp1)) {
    throw Error(Errc::InvalidInput, "claim5 setup: MA refused the harvested token: " +
                                        std::string(to_string(std::get<MaRejection>(resp1))));
  }
  Approval a1{s1.id(), rh, std::get<MaApproval>(resp1).ma_signature, s1.sign_record_hash(rh)};
  auto first = w.forward(r1, {forged, a1});

  // Option A: reuse approval_1 as approval_2.
  auto a_res = w.forward(r1, {forged, a1});
  bool a_ok = !a_res.empty() && a_res.front().reason == AdmitRejection::SameServer;
  ctx.finding("claim5 option A: reuse approval_1", defended(a_ok), kDefended,
              "first approval " + first_verdict(first) + "; duplicate from same server " + first_verdict(a_res));

  // Option B: ask the MA for an approval bound to S2 over S1's channel.
  auto resp_b = ask_ma(r1, s1.id(), s2.id());
  bool b_ok = std::holds_alternative<MaRejection>(resp_b) && std::get<MaRejection>(resp_b) == MaRejection::Unauthorized;
  ctx.finding("claim5 option B: request approval as S2", defended(b_ok), kDefended,
              std::holds_alternative<MaRejection>(resp_b) ? "MA rejected: " + std::string(to_string(std::get<MaRejection>(resp_b)))
                                                          : "MA approved");

  // Option C: forge the MA signature.
  Approval c2{s2.id(), rh, s1.sign_record_hash(sha256(ma_approval_message(rh, s2.id()))), s1.sign_record_hash(rh)};
  auto c_res = w.forward(r1, {forged, c2});
  bool c_ok = !c_res.empty() && c_res.front().reason == AdmitRejection::BadMASig;
  ctx.finding("claim5 option C: forge MA signature", defended(c_ok), kDefended, "validators: " + first_verdict(c_res));

  // Option D: even holding a genuine MA approval bound to S2 (assumed leaked),
  // S1 cannot produce S2's server signature.
  auto leaked = ask_ma(w.ma_role() + "/leak", s2.id(), s2.id());
  Approval d2{s2.id(), rh, std::get<MaApproval>(leaked).ma_signature, s1.sign_record_hash(rh)};
  auto d_res = w.forward(r1, {forged, d2});
  bool d_ok = !d_res.empty() && d_res.front().reason == AdmitRejection::BadServerSig;
  ctx.finding("claim5 option D: forge S2 server signature", defended(d_ok), kDefended,
              "validators: " + first_verdict(d_res));

  w.settle();
  bool none_yet = !w.chain().contains(forged.image_hash);

  // Option E: S2 is compromised as well.
  auto resp_e = ask_ma(r2, s2.id(), s2.id());
  Approval e2{s2.id(), rh, std::get<MaApproval>(resp_e).ma_signature, s2.sign_record_hash(rh)};
  auto e_res = w.forward(r2, {forged, e2});
  w.settle();
  bool e_final = w.chain().contains(forged.image_hash);
  ctx.finding("claim5 option E: two compromised servers", e_final ? kBreached : kDefended, kBreached,
              "validators: " + first_verdict(e_res) + "; forged record " + short_hex(forged.image_hash) +
                  (e_final ? " finalized" : " not finalized"));

  ctx.metrics["options_rejected"] = a_ok + b_ok + c_ok + d_ok;
  ctx.metrics["forged_before_e"] = none_yet ? 0 : 1;
  ctx.metrics["forged_after_e"] = e_final ? 1 : 0;
}

// Chain observer: sees every finalized record, nothing else.
void run_identify_device(Context& ctx) {
  auto& w = ctx.world();
  const auto per_device = ctx.param<std::size_t>("captures_per_device", 2);
  for (std::size_t r = 0; r < per_device; ++r) {
    for (std::size_t d = 0; d < w.device_count(); ++d) {
      w.capture(d);
      w.advance(7);
    }
    w.settle();
  }
  auto img = w.taint().count("observer", Atom::ImageHash);
  auto nuc = w.taint().count("observer", Atom::NucHash);
  auto key = w.taint().count("observer", Atom::DeviceKey);
  auto lk = correlation_attack(w, {}, ctx.sc.seed);
  double n = static_cast<double>(w.device_count());
  double p = 1.0 / n;
  double bound = p + 3 * std::sqrt(p * (1 - p) / std::max<double>(1, static_cast<double>(lk.trials)));
  bool ok = nuc == 0 && key == 0 && lk.linkage <= bound && lk.linkage <= lk.bound;
  ctx.metrics["observer_image_hashes"] = static_cast<double>(img);
  ctx.metrics["observer_nuc_hashes"] = static_cast<double>(nuc);
  ctx.metrics["observer_device_keys"] = static_cast<double>(key);
  ctx.metrics["observer_linkage"] = lk.linkage;
  ctx.finding("identify device from chain", defended(ok), kDefended,
              fmt::format("observer saw {} image hashes, {} fingerprints, {} device keys; linkage {}/{} = {:.4f} "
                          "(1/N = {:.4f}, 1/k = {:.4f})",
                          img, nuc, key, lk.correct, lk.trials, lk.linkage, p, 1.0 / lk.k));
}

// The MA tries to link fingerprints to images with production records but
// without any server log.
void run_ma_correlation(Context& ctx) {
  auto& w = ctx.world();
  for (std::size_t d = 0; d < w.device_count(); ++d) {
    w.capture(d);
    w.advance(11);
  }
  w.settle();
  auto img = w.taint().count("ma:", Atom::ImageHash);
  auto lk = correlation_attack(w, {.ma = true, .servers = false, .production = true}, ctx.sc.seed);
  bool ok = img == 0 && lk.within_bound;
  ctx.metrics["ma_image_hashes"] = static_cast<double>(img);
  ctx.metrics["ma_linkage"] = lk.linkage;
  ctx.finding("correlate device to image (MA)", defended(ok), kDefended,
              fmt::format("MA saw {} image hashes; MA+production linkage {}/{} = {:.4f} (bound {:.4f})", img,
                          lk.correct, lk.trials, lk.linkage, lk.bound));
}

// Full dump of MA state.
void run_ma_compromise(Context& ctx) {
  auto& w = ctx.world();
  for (std::size_t d = 0; d < w.device_count(); ++d) {
    w.capture(d);
    w.advance(13);
  }
  w.advance(40 * 86400);
  for (std::size_t d = 0; d < w.device_count(); ++d) w.capture(d);
  w.settle();

  auto snap = w.ma().compromise();
  ByteWriter dump;
  for (const auto& [slot, keys] : snap.keys) {
    dump.u32(slot.first);
    dump.u32(slot.second);
    for (const auto& k : keys) dump.fixed(k);
  }
  for (const auto& h : snap.legitimate) dump.fixed(h);
  for (const auto& h : snap.revoked) dump.fixed(h);
  for (const auto& e : snap.log) {
    dump.str8(e.month);
    dump.u32(e.key_table_id);
    dump.str8(e.result);
  }
  auto text = w.ma().dump_state().dump();
  w.taint().observe("attacker:ma-dump", dump.take());
  w.taint().observe("attacker:ma-dump", as_bytes(text));

  std::size_t hex_hits = 0;
  for (const auto& c : w.captures()) hex_hits += text.find(c.image_hash.hex()) != std::string::npos;
  auto img = w.taint().count("attacker:ma-dump", Atom::ImageHash);
  auto keys = w.taint().count("attacker:ma-dump", Atom::DeviceKey);
  auto fps = w.taint().count("attacker:ma-dump", Atom::NucHash);
  std::set<std::string> months;
  bool month_only = true;
  for (const auto& e : snap.log) {
    months.insert(e.month);
    month_only = month_only && is_month_text(e.month);
  }
  bool ok = img == 0 && keys == 0 && hex_hits == 0 && month_only;
  ctx.metrics["dump_image_hashes"] = static_cast<double>(img + hex_hits);
  ctx.metrics["dump_device_keys"] = static_cast<double>(keys);
  ctx.metrics["dump_fingerprints"] = static_cast<double>(fps);
  ctx.finding("MA full compromise", defended(ok), kDefended,
              fmt::format("dump holds {} legitimate fingerprints, {} log entries over {} months (month precision: {}); "
                          "0 device-image links: {} image hashes, {} device keys",
                          snap.legitimate.size(), snap.log.size(), months.size(), month_only ? "yes" : "no",
                          img + hex_hits, keys));
}

// Posting bins and the low-traffic warning.
void run_timing(Context& ctx) {
  auto& w = ctx.world();
  const auto records = ctx.param<std::size_t>("records", 600);
  const auto span = ctx.param<std::int64_t>("span_seconds", 3600);
  const auto low = ctx.param<std::size_t>("low_traffic_records", 5);
  const auto step = span / static_cast<std::int64_t>(records);

  std::map<Hash256, std::int64_t> submitted;
  for (std::size_t i = 0; i < records; ++i) {
    auto rec = w.capture(i % w.device_count());
    submitted[rec.image_hash] = w.now();
    w.settle();
    w.advance(step);
  }
  // A quiet stretch: a few records alone in a fresh bin.
  w.advance(kPostingEpoch - (w.now() % kPostingEpoch) + 60);
  for (std::size_t i = 0; i < low; ++i) {
    auto rec = w.capture(i % w.device_count());
    submitted[rec.image_hash] = w.now();
    w.advance(20);
  }
  w.settle();

  const auto& chain = w.chain();
  auto report = timing_anonymity(chain);
  std::size_t misaligned = report.misaligned;
  for (std::uint32_t i = 0; i < chain.size(); ++i) {
    auto rec = chain.record_at(i);
    auto posted = static_cast<std::int64_t>(rec->posting_timestamp) * kPostingEpoch;
    auto it = submitted.find(rec->record.image_hash);
    if (posted % kPostingEpoch != 0 || (it != submitted.end() && (posted > it->second || it->second - posted >= kPostingEpoch))) {
      ++misaligned;
    }
  }
  std::size_t main_bins = 0, main_records = 0;
  for (const auto& [bin, count] : report.histogram) {
    if (count >= 10) {
      ++main_bins;
      main_records += count;
    }
  }
  for (const auto& msg : report.warnings) ctx.report.warnings.push_back(ctx.sc.name + ": " + msg);
  ctx.metrics["misaligned"] = static_cast<double>(misaligned);
  ctx.metrics["bins"] = static_cast<double>(report.histogram.size());
  ctx.metrics["low_bins"] = static_cast<double>(report.low_bins.size());
  ctx.metrics["mean_records_per_bin"] = main_bins ? static_cast<double>(main_records) / static_cast<double>(main_bins) : 0;

  ctx.finding("timing correlation: 600 s alignment", pass(misaligned == 0), kPass,
              fmt::format("{} records in {} bins, {} misaligned", chain.size(), report.histogram.size(), misaligned));
  ctx.finding("timing correlation: low-traffic warning", pass(!report.low_bins.empty()), kPass,
              fmt::format("{} bins under 10 records flagged; busy bins average {:.1f} records", report.low_bins.size(),
                          ctx.metrics["mean_records_per_bin"]));
}

// What the MA log says about device activity.
void run_frequency(Context& ctx) {
  auto& w = ctx.world();
  for (int month = 0; month < 3; ++month) {
    for (std::size_t d = 0; d < w.device_count(); ++d) {
      for (int k = 0; k <= static_cast<int>(d % 3); ++k) {
        w.capture(d);
        w.advance(17);
      }
    }
    w.settle();
    w.advance(31 * 86400);
  }
  const auto& log = w.ma().log();
  ByteWriter bytes;
  bool month_only = true;
  for (const auto& e : log) {
    bytes.str8(e.month);
    bytes.u32(e.key_table_id);
    bytes.str8(e.result);
    month_only = month_only && is_month_text(e.month);
  }
  w.taint().observe("attacker:ma-log", bytes.take());
  auto fps = w.taint().count("attacker:ma-log", Atom::NucHash);
  auto stats = w.ma().stats();
  std::string per_month;
  for (const auto& [m, n] : stats.validations_per_month) per_month += (per_month.empty() ? "" : ", ") + m + ":" + std::to_string(n);
  bool ok = month_only && fps == 0;
  ctx.metrics["log_fingerprints"] = static_cast<double>(fps);
  ctx.finding("frequency analysis from MA logs", defended(ok), kDefended,
              fmt::format("{} log entries (month, table, result) only; {} fingerprints in log; validations per month {}",
                          log.size(), fps, per_month));
}

std::string geo_of(std::int64_t lat_e5, std::int64_t lon_e5) {
  return format_geolocation(static_cast<double>(lat_e5) / 1e5, static_cast<double>(lon_e5) / 1e5);
}

// Brute force of the geolocation hash around a known approximate position.
void run_gps(Context& ctx) {
  auto& w = ctx.world();
  CaptureOptions opts;
  opts.metadata = true;
  auto rec = w.capture(0, opts);
  w.settle();
  auto found = w.chain().lookup(rec.image_hash);
  const auto& stored = found.record->record.metadata->geolocation;
  const auto radius = ctx.param<std::int64_t>("radius_e5", 200);

  auto claim = rec.output.claims.geolocation;
  auto comma = claim.find(',');
  auto lat0 = std::llround(std::stod(claim.substr(0, comma)) * 1e5) + radius / 3;
  auto lon0 = std::llround(std::stod(claim.substr(comma + 1)) * 1e5) - radius / 4;

  // Without the nonce a candidate location cannot be tested at all.
  ctx.finding("GPS brute force, nonce secret", kDefended, kDefended,
              fmt::format("candidate test needs the 128-bit nonce; {} grid points give no oracle",
                          (2 * radius + 1) * (2 * radius + 1)));

  std::size_t tries = 0;
  std::optional<std::string> hit;
  const auto& nonce = *rec.output.nonce;
  for (auto dlat = -radius; dlat <= radius && !hit; ++dlat) {
    for (auto dlon = -radius; dlon <= radius && !hit; ++dlon) {
      auto candidate = geo_of(lat0 + dlat, lon0 + dlon);
      ++tries;
      if (metadata_hash(MetadataDomain::geolocation, candidate, nonce) == stored) hit = candidate;
    }
  }
  bool recovered = hit && *hit == claim;
  ctx.metrics["gps_tries"] = static_cast<double>(tries);
  ctx.metrics["gps_recovered"] = recovered ? 1 : 0;
  ctx.finding("GPS brute force, nonce leaked", recovered ? kBreached : kDefended, kBreached,
              fmt::format("{} HMAC evaluations over a +/-{} e-5 degree box {}", tries, radius,
                          recovered ? "recovered the location" : "did not recover the location"));
}

// Leaked nonce: the timestamp falls quickly; values recovered for one field
// are useless against another because every field has its own prefix.
void run_cross_field(Context& ctx) {
  auto& w = ctx.world();
  CaptureOptions opts;
  opts.metadata = true;
  auto rec = w.capture(1 % w.device_count(), opts);
  w.settle();
  const auto& meta = *w.chain().lookup(rec.image_hash).record->record.metadata;
  const auto& nonce = *rec.output.nonce;

  std::size_t tries = 0;
  std::optional<std::string> month;
  for (int y = 2000; y <= 2035 && !month; ++y) {
    for (int m = 1; m <= 12 && !month; ++m) {
      auto text = fmt::format("{:04d}-{:02d}", y, m);
      ++tries;
      if (metadata_hash(MetadataDomain::timestamp, text, nonce) == meta.timestamp) month = text;
    }
  }
  // Each claim recomputed under every other field's domain must miss the
  // stored hash of its own field; a value the domain rejects counts as a miss.
  const std::array<std::pair<MetadataDomain, std::pair<const std::string*, const MetadataHash*>>, 3> fields{{
      {MetadataDomain::timestamp, {&rec.output.claims.month, &meta.timestamp}},
      {MetadataDomain::geolocation, {&rec.output.claims.geolocation, &meta.geolocation}},
      {MetadataDomain::owner, {&rec.output.claims.owner, &meta.owner}},
  }};
  std::size_t cross = 0, refused = 0, attempts = 0;
  for (const auto& [own, field] : fields) {
    for (const auto& [other, _] : fields) {
      if (other == own) continue;
      ++attempts;
      try {
        cross += metadata_hash(other, *field.first, nonce) == *field.second;
      } catch (const Error&) {
        ++refused;
      }
    }
  }
  cross += meta.timestamp == meta.geolocation || meta.timestamp == meta.owner || meta.geolocation == meta.owner;
  bool ok = month.has_value() && cross == 0;
  ctx.metrics["cross_field_matches"] = static_cast<double>(cross);
  ctx.finding("metadata cross-field reuse", defended(ok), kDefended,
              fmt::format("timestamp recovered after {} tries; {} wrong-domain recomputations, {} refused by "
                          "domain format, {} matching a stored hash",
                          tries, attempts, refused, cross));
}

SubmissionResult last_result(World& w) { return w.server_results().back().second; }

// Secure element extraction from one device.
void run_se_extraction(Context& ctx) {
  auto& w = ctx.world();
  const std::size_t victim = 0;

  // (1) Signing synthetic images with the extracted credentials.
  auto fake = w.capture(victim);
  w.settle();
  bool forged = w.chain().contains(fake.image_hash);
  ctx.finding("SE extraction: software forgery with one device", forged ? kBreached : kDefended, kBreached,
              forged ? "synthetic image finalized under the extracted device; scope is this one device"
                     : "synthetic image not finalized");

  // (2) Cloning to new hardware whose fingerprint the MA never registered.
  SensorIdentity clone_id;
  clone_id.kind = SensorKind::ManufacturingCalibrated;
  clone_id.nuc_map = NucMap::synthetic(8, 8, ctx.sc.seed ^ 0xc10e);
  clone_id.nuc_hash = clone_id.nuc_map->hash();
  clone_id.secure_element = w.device(victim).agent->identity().secure_element;
  CameraAgent clone(std::move(clone_id), w.config().validator_id);
  clone.install({w.device(victim).cert, w.device(victim).slots});
  auto out = clone.capture_and_build(w.next_image(), {}, w.now());
  w.taint().add_atom(Atom::ImageHash, out.packet.record.image_hash.view());
  w.transport().deliver(w.server(0).id(), encode(out.packet));
  auto res = last_result(w);
  bool rejected = std::holds_alternative<SubmissionRejected>(res) &&
                  std::get<SubmissionRejected>(res).authority == MaRejection::NotLegitimate;
  ctx.finding("SE extraction: cloned hardware, unregistered fingerprint", defended(rejected), kDefended,
              "server: " + describe(res));

  // (3) Revocation cuts the extracted device off.
  w.ma().revoke(w.device(victim).nuc_hash);
  w.advance(60);
  auto after = w.capture(victim);
  w.settle();
  bool blocked = !w.chain().contains(after.image_hash) && w.chain().contains(fake.image_hash);
  std::string why = "no server response";
  for (auto it = w.server_results().rbegin(); it != w.server_results().rend(); ++it) {
    why = describe(it->second);
    break;
  }
  ctx.finding("SE extraction: after revocation", defended(blocked), kDefended,
              "post-revocation capture: " + why + "; earlier record still on chain: " +
                  (w.chain().contains(fake.image_hash) ? "yes" : "no"));
  ctx.metrics["clone_rejected"] = rejected ? 1 : 0;
  ctx.metrics["revoked_blocked"] = blocked ? 1 : 0;
}

// Stolen MA signing key, alone and with two servers.
void run_ma_key(Context& ctx) {
  auto& w = ctx.world();
  auto& s1 = w.server(0);
  auto& s2 = w.server(1);
  auto attacker = SigningKeypair::from_seed(sha256(as_bytes("BM-sim-attacker")));

  BirthmarkRecord forged;
  forged.image_hash = image_hash(w.next_image());
  w.taint().add_atom(Atom::ImageHash, forged.image_hash.view());
  auto rh = record_hash(forged);

  Approval a{s1.id(), rh, w.ma().sign_approval(rh, s1.id()), attacker.sign(rh.view())};
  Approval b{s2.id(), rh, w.ma().sign_approval(rh, s2.id()), attacker.sign(rh.view())};
  auto ra = w.forward("attacker", {forged, a});
  auto rb = w.forward("attacker", {forged, b});
  w.settle();
  bool alone = !w.chain().contains(forged.image_hash);
  ctx.finding("MA key compromise alone", defended(alone), kDefended,
              "validators: " + first_verdict(ra) + ", " + first_verdict(rb));

  Approval a2{s1.id(), rh, a.ma_signature, s1.sign_record_hash(rh)};
  Approval b2{s2.id(), rh, b.ma_signature, s2.sign_record_hash(rh)};
  w.forward(w.server_role(s1.id()), {forged, a2});
  auto rb2 = w.forward(w.server_role(s2.id()), {forged, b2});
  w.settle();
  bool done = w.chain().contains(forged.image_hash);
  ctx.finding("MA key plus two servers", done ? kBreached : kDefended, kBreached,
              "validators: " + first_verdict(rb2) + (done ? "; forged record finalized" : "; not finalized"));
}

// Undeclared content edits hidden behind declared tonal operations.
void run_content_injection(Context& ctx) {
  const auto size = ctx.param<std::uint32_t>("size", 256);
  const auto dab = ctx.param<std::uint32_t>("dab", 40);
  const auto coverage = ctx.param<double>("coverage", 0.10);
  const auto trials = ctx.param<std::size_t>("trials", 10);
  AuditConfig cfg;
  cfg.threshold = ctx.param<double>("threshold", 0.16);

  std::size_t caught = 0, replay_zero = 0;
  double miss = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto fx = clone_stamp_fixture(size, coverage, dab, ctx.sc.seed * 1000 + t);
    auto report = make_report(fx.ops, ModificationLevel::validated, 0.0f);
    replay_zero += audit(fx.parent, fx.honest, report, ctx.sc.seed + t, cfg).measured_score == 0.0;
    caught += !audit(fx.parent, fx.tampered, report, ctx.sc.seed + t, cfg).pass;
    miss = std::max(miss, clone_miss_bound(fx, cfg));
  }
  ctx.metrics["audit_caught"] = static_cast<double>(caught);
  ctx.metrics["audit_replay_zero"] = static_cast<double>(replay_zero);
  ctx.finding("deviation audit: honest replay", pass(replay_zero == trials), kPass,
              fmt::format("{}/{} honest edits scored exactly 0", replay_zero, trials));
  ctx.finding("content injection via declared ops", defended(caught == trials), kDefended,
              fmt::format("{}/{} clone-stamped results failed audit at threshold {:.2f}; patch-miss bound {:.3g}",
                          caught, trials, cfg.threshold, miss));
}

// Replays and duplicate image hashes.
void run_replay(Context& ctx) {
  auto& w = ctx.world();
  auto rec = w.capture(0);
  w.settle();
  const auto before = w.finalized();
  auto bytes = encode(rec.output.packet);

  w.advance(120);
  std::vector<std::string> replies;
  for (std::size_t s = 0; s < 2; ++s) {
    w.transport().deliver(w.server(s).id(), bytes);
    replies.push_back(describe(last_result(w)));
  }
  w.settle();
  const std::size_t replay_extra = w.finalized() - before;
  bool replay_ok = replay_extra == 0;
  ctx.finding("replay valid packet", defended(replay_ok), kDefended,
              fmt::format("servers: {}, {}; finalized records {} -> {}", replies[0], replies[1], before, w.finalized()));

  auto swapped = rec.output.packet;
  swapped.record.image_hash = image_hash(w.next_image());
  w.taint().add_atom(Atom::ImageHash, swapped.record.image_hash.view());
  w.transport().deliver(w.server(0).id(), encode(swapped));
  auto res = last_result(w);
  bool bind_ok = std::holds_alternative<SubmissionRejected>(res) &&
                 std::get<SubmissionRejected>(res).reason == ServerRejection::BindingMismatch;
  ctx.finding("replay certificate with another image", defended(bind_ok), kDefended, "server: " + describe(res));

  // A second camera submits identical pixels.
  PixelImage same = random_image(w.config().image_size, w.config().image_size, 0);
  auto a = w.capture_image(1 % w.device_count(), same);
  w.settle();
  w.advance(60);
  auto b = w.capture_image(2 % w.device_count(), same);
  w.settle();
  std::size_t copies = 0;
  for (std::uint32_t i = 0; i < w.chain().size(); ++i) copies += w.chain().record_at(i)->record.image_hash == a.image_hash;
  ctx.finding("duplicate image hash", defended(copies == 1), kDefended,
              fmt::format("{} chain records for the shared hash", copies));
  ctx.metrics["second_records"] = static_cast<double>(replay_extra + (copies - 1));
  (void)b;
}

// Key rotation: notice reach, grace window and cut-off.
void run_rotation(Context& ctx) {
  auto& w = ctx.world();
  const std::uint32_t table = 0, index = 0;
  auto holds = [&](std::size_t d) {
    for (const auto& s : w.device(d).slots) {
      if (s.key_table_id == table && s.key_index == index) return true;
    }
    return false;
  };
  std::size_t holder = w.device_count();
  for (std::size_t d = 0; d < w.device_count() && holder == w.device_count(); ++d) {
    if (holds(d)) holder = d;
  }
  if (holder == w.device_count()) throw Error(Errc::InvalidInput, "rotation: no device holds slot 0/0");

  auto build_on_slot = [&] {
    for (int i = 0; i < 64; ++i) {
      auto out = w.build(holder, w.next_image());
      if (out.packet.certificate.key_table_id == table && out.packet.certificate.key_index == index) return out;
    }
    throw Error(Errc::InvalidInput, "rotation: slot never chosen");
  };
  auto in_grace = build_on_slot();
  auto late = build_on_slot();

  auto notice = w.ma().rotate_key(table, index, w.now());
  auto notice_bytes = encode(notice);
  std::size_t applied = 0, expected = 0, mismatched = 0;
  for (std::size_t d = 0; d < w.device_count(); ++d) {
    w.bus().send(w.ma_role(), "camera", "rotation-notice", notice_bytes);
    bool ok = w.device(d).agent->apply_rotation(decode_rotation_notice(notice_bytes));
    applied += ok;
    expected += holds(d);
    mismatched += ok != holds(d);
  }
  ctx.finding("rotation notice reach", pass(mismatched == 0), kPass,
              fmt::format("{} devices applied the notice, {} hold the slot, {} mismatches", applied, expected, mismatched));

  auto& agent = *w.device(holder).agent;
  w.advance(600);
  agent.select_servers(w.registry().entries(), w.now());
  auto r1 = agent.submit(in_grace.packet, w.transport(), w.now());
  w.settle();
  bool grace_ok = w.chain().contains(in_grace.packet.record.image_hash);
  ctx.finding("rotation grace window", pass(grace_ok), kPass,
              fmt::format("in-flight packet under the old key, 600 s after rotation: {} deliveries, {}",
                          r1.delivered.size(), grace_ok ? "finalized" : "not finalized"));

  w.advance(w.ma().config().rotation_grace_seconds);
  w.transport().deliver(w.server(0).id(), encode(late.packet));
  auto res = last_result(w);
  bool cut = std::holds_alternative<SubmissionRejected>(res) &&
             std::get<SubmissionRejected>(res).authority == MaRejection::UnknownKey;
  ctx.finding("old key after grace", pass(cut), kPass, "server: " + describe(res));

  CaptureRecord fresh;
  for (int i = 0; i < 64; ++i) {
    fresh = w.capture(holder);
    if (fresh.output.packet.certificate.key_table_id == table) break;
    w.advance(5);
  }
  w.settle();
  bool fresh_ok = w.chain().contains(fresh.image_hash);
  ctx.finding("capture with rotated key", pass(fresh_ok), kPass, fresh_ok ? "finalized" : "not finalized");
  ctx.metrics["rotation_mismatches"] = static_cast<double>(mismatched);
}

// Revocation contract and re-registration under a PRNU-derived identity.
void run_revocation(Context& ctx) {
  auto& w = ctx.world();
  auto before = w.capture(0);
  w.settle();
  const auto& nuc = w.device(0).nuc_hash;
  w.ma().revoke(nuc);
  w.ma().revoke(nuc);
  auto stats = w.ma().stats();
  w.advance(60);
  auto after = w.capture(0);
  w.settle();
  std::string reason = describe(w.server_results().back().second);
  bool ok = !w.chain().contains(after.image_hash) && w.chain().contains(before.image_hash) && stats.revoked == 1;
  ctx.finding("revoked device", pass(ok), kPass,
              fmt::format("post-revocation capture: {}; revocation list size {} after two revokes; earlier record kept",
                          reason, stats.revoked));

  bool reprovision_rejected = false;
  try {
    w.ma().provision_device(nuc, w.device(0).agent->public_key());
  } catch (const Error& e) {
    reprovision_rejected = e.code() == Errc::Rejected;
  }
  auto frames = synthetic_prnu_frames(32, 32, ctx.sc.seed ^ 0x9e11, ctx.sc.seed ^ 0x5ce7e);
  auto identity = enroll_prnu(frames, sha256(as_bytes("BM-sim-reenroll")));
  auto idx = w.add_device(std::move(identity));
  auto fresh = w.capture(idx);
  w.settle();
  bool reenrolled = w.chain().contains(fresh.image_hash);
  ctx.finding("re-registration with PRNU identity", pass(reprovision_rejected && reenrolled), kPass,
              fmt::format("old fingerprint re-provision {}; new identity capture {}",
                          reprovision_rejected ? "rejected" : "accepted", reenrolled ? "finalized" : "not finalized"));
}

// Correlation attack across store compromise combinations.
void run_correlation(Context& ctx) {
  auto& w = ctx.world();
  const auto per_device = ctx.param<std::size_t>("captures_per_device", 1);
  for (std::size_t r = 0; r < per_device; ++r) {
    for (std::size_t d = 0; d < w.device_count(); ++d) {
      w.capture(d);
      w.advance(3);
      if (d % 200 == 199) w.settle();
    }
  }
  w.settle();

  for (int mask = 0; mask < 8; ++mask) {
    CompromiseSet c{.ma = (mask & 1) != 0, .servers = (mask & 2) != 0, .production = (mask & 4) != 0};
    auto lk = correlation_attack(w, c, ctx.sc.seed + static_cast<std::uint64_t>(mask));
    ctx.metrics["linkage_" + c.label()] = lk.linkage;
    std::string ev = fmt::format("{}/{} linked = {:.4f}; expected {:.4f}; k = {:.1f}; 1/k + 3 sigma = {:.4f}",
                                 lk.correct, lk.trials, lk.linkage, lk.expected, lk.k, lk.bound);
    if (c.size() == 3) {
      ctx.metrics["linkage_triple"] = lk.linkage;
      ctx.finding("correlation: " + c.label(), lk.linkage >= 0.99 ? kBreached : kDefended, kBreached, ev);
    } else {
      ctx.finding("correlation: " + c.label(), defended(lk.within_bound), kDefended, ev);
    }
  }
}

void run_byzantine(Context& ctx) {
  std::vector<std::size_t> sizes = ctx.param<std::vector<std::size_t>>("sizes", {4, 10});
  const auto runs = ctx.param<std::size_t>("runs", 100);
  auto cells = byzantine_sweep(sizes, runs, ctx.sc.seed);
  for (const auto& c : cells) {
    auto ev = fmt::format("{}/{} runs safe; diverged {}, invalid {}, conflicting certificates {}", c.safe_runs, c.runs,
                          c.diverged, c.invalid_finalized, c.conflicting);
    auto name = fmt::format("validator collusion n={} f={}", c.n, c.f);
    if (c.tolerated()) {
      ctx.finding(name, defended(c.safe_runs == c.runs), kDefended, ev);
    } else {
      ctx.finding(name, c.diverged > 0 ? kBreached : kDefended, kBreached, ev);
    }
    ctx.metrics[fmt::format("safe_n{}_f{}", c.n, c.f)] = static_cast<double>(c.safe_runs);
  }
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"timeline", run_timeline},
      {"claim5", run_claim5},
      {"identify-device", run_identify_device},
      {"ma-correlation", run_ma_correlation},
      {"ma-compromise", run_ma_compromise},
      {"timing", run_timing},
      {"frequency", run_frequency},
      {"gps", run_gps},
      {"cross-field", run_cross_field},
      {"se-extraction", run_se_extraction},
      {"ma-key", run_ma_key},
      {"content-injection", run_content_injection},
      {"replay", run_replay},
      {"rotation", run_rotation},
      {"revocation", run_revocation},
      {"correlation", run_correlation},
      {"byzantine-sweep", run_byzantine},
  };
  return table;
}

bool compare(double actual, const std::string& op, double value) {
  if (op == "==") return actual == value;
  if (op == "!=") return actual != value;
  if (op == "<") return actual < value;
  if (op == "<=") return actual <= value;
  if (op == ">") return actual > value;
  if (op == ">=") return actual >= value;
  throw Error(Errc::InvalidInput, "unknown assertion operator " + op);
}

std::string number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return fmt::format("{:.6g}", v);
}

}  // namespace

std::vector<std::string> scenario_kinds() {
  std::vector<std::string> out;
  for (const auto& [k, _] : handlers()) out.push_back(k);
  return out;
}

SecurityReport run_scenario(const Scenario& scenario, FlowTotals* flow) {
  auto it = handlers().find(scenario.kind);
  if (it == handlers().end()) throw Error(Errc::InvalidInput, "unknown scenario kind: " + scenario.kind);
  Context ctx(scenario);
  it->second(ctx);
  for (const auto& a : scenario.assertions) {
    auto m = ctx.metrics.find(a.metric);
    if (m == ctx.metrics.end()) {
      throw Error(Errc::InvalidInput, "scenario " + scenario.name + ": assertion on unknown metric '" + a.metric + "'");
    }
    bool ok = compare(m->second, a.op, a.value);
    ctx.finding("assert " + a.metric + " " + a.op + " " + number(a.value), pass(ok), kPass,
                "measured " + number(m->second));
  }
  if (flow) {
    for (const auto& w : ctx.worlds) {
      const auto& t = w->taint();
      flow->ma_image_hashes += t.count("ma:", Atom::ImageHash);
      flow->server_nuc_hashes += t.count("server:", Atom::NucHash);
      flow->server_table_keys += t.count("server:", Atom::TableKey);
      flow->observer_nuc_hashes += t.count("observer", Atom::NucHash);
      flow->observer_device_keys += t.count("observer", Atom::DeviceKey);
      flow->server_image_hashes += t.count("server:", Atom::ImageHash);
      flow->registered_nuc_hashes += t.atoms(Atom::NucHash);
      ++flow->worlds;
    }
  }
  return std::move(ctx.report);
}

SecurityReport run_suite(const std::vector<Scenario>& scenarios) {
  SecurityReport all;
  FlowTotals flow;
  for (const auto& s : scenarios) all.merge(run_scenario(s, &flow));
  auto add = [&](std::string attack, bool ok, std::string evidence) {
    all.findings.push_back({"flow-properties", std::move(attack), pass(ok), kPass, std::move(evidence)});
  };
  add("taint ledger control", flow.server_image_hashes > 0 && flow.registered_nuc_hashes > 0,
      fmt::format("{} image hashes seen at server roles; {} fingerprints registered as atoms", flow.server_image_hashes,
                  flow.registered_nuc_hashes));
  add("MA never observes an image hash", flow.ma_image_hashes == 0,
      fmt::format("{} image hashes at MA roles across {} worlds", flow.ma_image_hashes, flow.worlds));
  add("servers never observe a fingerprint", flow.server_nuc_hashes == 0,
      fmt::format("{} fingerprints at server roles across {} worlds", flow.server_nuc_hashes, flow.worlds));
  add("servers never hold a table key", flow.server_table_keys == 0,
      fmt::format("{} table keys at server roles", flow.server_table_keys));
  add("observer sees no device identity", flow.observer_nuc_hashes == 0 && flow.observer_device_keys == 0,
      fmt::format("{} fingerprints, {} device keys at the observer", flow.observer_nuc_hashes, flow.observer_device_keys));
  return all;
}

bool SecurityReport::ok() const {
  return std::all_of(findings.begin(), findings.end(), [](const Finding& f) { return f.as_expected(); });
}

void SecurityReport::merge(const SecurityReport& other) {
  findings.insert(findings.end(), other.findings.begin(), other.findings.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

std::string SecurityReport::text() const {
  std::ostringstream out;
  out << "security report: " << findings.size() << " findings\n";
  for (const auto& f : findings) {
    out << (f.as_expected() ? "  ok   " : "  FAIL ") << f.scenario << " / " << f.attack << ": " << f.outcome;
    if (!f.as_expected()) out << " (expected " << f.expected << ")";
    out << "\n         " << f.evidence << "\n";
  }
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  out << (ok() ? "all findings as expected\n" : "UNEXPECTED FINDINGS\n");
  return out.str();
}

json SecurityReport::to_json() const {
  json arr = json::array();
  for (const auto& f : findings) {
    arr.push_back({{"scenario", f.scenario},
                   {"attack", f.attack},
                   {"outcome", f.outcome},
                   {"expected", f.expected},
                   {"as_expected", f.as_expected()},
                   {"evidence", f.evidence}});
  }
  return {{"ok", ok()}, {"findings", arr}, {"warnings", warnings}};
}

Scenario parse_scenario(const json& j) {
  auto fail = [](const std::string& msg) { return Error(Errc::InvalidInput, "scenario: " + msg); };
  if (!j.is_object()) throw fail("top level must be an object");
  Scenario s;
  try {
    s.name = j.at("name").get<std::string>();
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.value("seed", std::uint64_t{1});
    s.world.seed = s.seed;
    if (j.contains("world")) {
      const auto& w = j["world"];
      s.world.devices = w.value("devices", s.world.devices);
      s.world.validators = w.value("validators", s.world.validators);
      s.world.validator_id = w.value("validator_id", s.world.validator_id);
      s.world.image_size = w.value("image_size", s.world.image_size);
      s.world.start_time = w.value("start_time", s.world.start_time);
      s.world.seal_bootstrap = w.value("seal_bootstrap", s.world.seal_bootstrap);
      s.world.chain.posting_granularity = w.value("posting_granularity", s.world.chain.posting_granularity);
      if (w.contains("servers")) {
        s.world.servers.clear();
        for (const auto& sv : w["servers"]) {
          s.world.servers.push_back({sv.at("id").get<std::string>(), sv.at("region").get<std::string>()});
        }
      }
      if (w.contains("authority")) {
        const auto& a = w["authority"];
        auto& c = s.world.authority;
        c.tables = a.value("tables", c.tables);
        c.keys_per_table = a.value("keys_per_table", c.keys_per_table);
        c.k_min = a.value("k_min", c.k_min);
        c.k_warn = a.value("k_warn", c.k_warn);
        c.slots_per_device = a.value("slots_per_device", c.slots_per_device);
        c.rotation_grace_seconds = a.value("rotation_grace_seconds", c.rotation_grace_seconds);
      }
    }
    if (j.contains("params")) s.params = j["params"];
    for (const auto& f : j.value("faults", json::array())) {
      FaultEvent e{f.at("at").get<std::size_t>(), f.at("action").get<std::string>(),
                   f.at("roles").get<std::vector<std::string>>()};
      if (e.action != "down" && e.action != "up") throw fail("fault action must be 'down' or 'up'");
      s.faults.push_back(std::move(e));
    }
    for (const auto& a : j.value("assertions", json::array())) {
      s.assertions.push_back({a.at("metric").get<std::string>(), a.at("op").get<std::string>(), a.at("value").get<double>()});
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  if (!handlers().contains(s.kind)) throw fail("unknown kind '" + s.kind + "'");
  if (s.world.devices == 0) throw fail("world needs at least one device");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidInput, "scenario: " + path.string() + " is not valid JSON");
  return parse_scenario(j);
}

json scenario_to_json(const Scenario& s) {
  json servers = json::array();
  for (const auto& sv : s.world.servers) servers.push_back({{"id", sv.id}, {"region", sv.region}});
  const auto& a = s.world.authority;
  json j{{"name", s.name},
         {"kind", s.kind},
         {"seed", s.seed},
         {"world",
          {{"devices", s.world.devices},
           {"validators", s.world.validators},
           {"validator_id", s.world.validator_id},
           {"image_size", s.world.image_size},
           {"start_time", s.world.start_time},
           {"seal_bootstrap", s.world.seal_bootstrap},
           {"posting_granularity", s.world.chain.posting_granularity},
           {"servers", servers},
           {"authority",
            {{"tables", a.tables},
             {"keys_per_table", a.keys_per_table},
             {"k_min", a.k_min},
             {"k_warn", a.k_warn},
             {"slots_per_device", a.slots_per_device},
             {"rotation_grace_seconds", a.rotation_grace_seconds}}}}},
         {"params", s.params}};
  json faults = json::array();
  for (const auto& f : s.faults) faults.push_back({{"at", f.at}, {"action", f.action}, {"roles", f.roles}});
  json asserts = json::array();
  for (const auto& x : s.assertions) asserts.push_back({{"metric", x.metric}, {"op", x.op}, {"value", x.value}});
  j["faults"] = faults;
  j["assertions"] = asserts;
  return j;
}

std::vector<Scenario> builtin_suite() {
  auto make = [](std::string name, std::string kind, std::uint64_t seed, json params = json::object()) {
    Scenario s;
    s.name = std::move(name);
    s.kind = std::move(kind);
    s.seed = seed;
    s.world.seed = seed;
    s.params = std::move(params);
    return s;
  };
  std::vector<Scenario> out;

  out.push_back(make("identify-device-from-chain", "identify-device", 101));
  out.back().world.devices = 40;
  out.push_back(make("ma-correlation", "ma-correlation", 102));
  out.back().world.devices = 40;
  out.push_back(make("ma-compromise", "ma-compromise", 103));
  out.push_back(make("timing-correlation", "timing", 104, {{"records", 600}, {"span_seconds", 3600}}));
  out.back().world.devices = 30;
  out.back().assertions = {{"misaligned", "==", 0}, {"low_bins", ">=", 1}};
  out.push_back(make("frequency-analysis", "frequency", 105));
  out.push_back(make("gps-brute-force", "gps", 106, {{"radius_e5", 200}}));
  out.push_back(make("metadata-cross-field", "cross-field", 107));
  out.push_back(make("se-extraction", "se-extraction", 108));
  out.push_back(make("ma-key-compromise", "ma-key", 109));
  out.push_back(make("single-server-forge", "claim5", 110));
  out.back().assertions = {{"options_rejected", "==", 4}, {"forged_before_e", "==", 0}, {"forged_after_e", "==", 1}};
  out.push_back(make("content-injection", "content-injection", 111, {{"trials", 10}}));
  out.push_back(make("replay", "replay", 112));
  out.back().assertions = {{"second_records", "==", 0}};
  out.push_back(make("key-rotation", "rotation", 113));
  out.back().assertions = {{"rotation_mismatches", "==", 0}};
  out.push_back(make("revocation", "revocation", 114));

  auto outage = make("dual-server-outage", "timeline", 115, {{"captures", 50}, {"interval", 30}});
  outage.world.devices = 5;
  outage.world.servers = {{"node-eu-1", "eu"}, {"node-us-3", "us"}, {"node-ap-2", "ap"}};
  outage.faults = {{5, "down", {"server:node-eu-1", "server:node-us-3"}}, {40, "up", {"server:node-eu-1", "server:node-us-3"}}};
  outage.assertions = {{"capture_failures", "==", 0}, {"finalized", "==", 50}, {"duplicates", "==", 0},
                       {"missing", "==", 0}, {"queued_at_capture", ">", 0}};
  out.push_back(outage);

  auto corr = make("correlation-attack", "correlation", 116);
  corr.world.devices = 2000;
  corr.world.validators = 1;
  corr.world.image_size = 8;
  out.push_back(corr);

  out.push_back(make("byzantine-sweep", "byzantine-sweep", 117, {{"sizes", {4, 10}}, {"runs", 100}}));
  return out;
}

}  // namespace birthmark::sim
