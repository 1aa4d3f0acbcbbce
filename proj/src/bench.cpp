// SPDX-License-Identifier: Apache-2.0
#include "birthmark/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "birthmark/camera.hpp"
#include "birthmark/rpc.hpp"
#include "birthmark/verify.hpp"

namespace birthmark {

namespace {

using Clock = std::chrono::steady_clock;

double since_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

CameraAgent bench_agent(std::uint64_t seed) {
  AuthorityConfig cfg;
  cfg.tables = 1;
  ManufacturerAuthority ma("BENCH_MA", cfg, seed);
  auto identity = calibrated_identity(NucMap::synthetic(64, 48, seed), sha256(as_bytes("BM-bench-device")));
  auto prov = ma.provision_device(identity.nuc_hash, identity.secure_element->public_key());
  AgentConfig ac;
  ac.seed = seed;
  CameraAgent agent(std::move(identity), ma.validator_id(), ac);
  agent.install(prov);
  return agent;
}

std::vector<double> time_captures(CameraAgent& agent, const PixelImage& image, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  CaptureOptions opts;
  opts.metadata = true;
  for (std::size_t i = 0; i < n; ++i) {
    auto t0 = Clock::now();
    agent.capture_and_build(image, opts, 1767225600);
    out.push_back(since_ms(t0));
  }
  return out;
}

Hash256 random_hash(std::mt19937_64& rng) {
  Hash256 h;
  for (auto& b : h.bytes) b = static_cast<std::uint8_t>(rng());
  return h;
}

ChainRecord synthetic_record(const Hash256& image, std::optional<Hash256> parent, std::uint32_t posting) {
  ChainRecord c;
  c.record.image_hash = image;
  c.record.modification_level = parent ? ModificationLevel::validated : ModificationLevel::raw;
  c.record.parent_image_hash = parent;
  RecordMetadata md;
  for (std::size_t i = 0; i < 8; ++i) {
    md.timestamp.bytes[i] = image.bytes[i];
    md.geolocation.bytes[i] = image.bytes[8 + i];
    md.owner.bytes[i] = image.bytes[16 + i];
  }
  c.record.metadata = md;
  c.posting_server_ids = "node-eu-1/node-us-3";
  c.posting_timestamp = posting;
  return c;
}

}  // namespace

LatencySummary summarize(std::vector<double>& millis) {
  LatencySummary s;
  s.samples = millis.size();
  if (millis.empty()) return s;
  std::sort(millis.begin(), millis.end());
  auto rank = [&](double p) {
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(millis.size())));
    return millis[std::clamp<std::size_t>(idx, 1, millis.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  s.p99_ms = rank(0.99);
  s.max_ms = millis.back();
  return s;
}

CameraBench bench_camera(const CameraBenchConfig& config) {
  CameraBench out;
  auto agent = bench_agent(config.seed);

  auto full = random_image(config.width, config.height, config.seed);
  time_captures(agent, full, 3);  // warm-up
  auto t = time_captures(agent, full, config.captures);
  out.full = summarize(t);

  auto tiny = random_image(1, 1, config.seed + 1);
  auto f = time_captures(agent, tiny, config.floor_captures);
  out.floor = summarize(f);

  for (auto side : config.scaling_sides) {
    auto img = random_image(side, side, config.seed + side);
    auto s = time_captures(agent, img, config.scaling_captures);
    out.scaling.emplace_back(static_cast<double>(side) * side, median(s));
  }
  // Least squares of median ms against megapixels.
  double n = static_cast<double>(out.scaling.size()), sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto [px, ms] : out.scaling) {
    double x = px / 1e6;
    sx += x;
    sy += ms;
    sxx += x * x;
    sxy += x * ms;
    syy += ms * ms;
  }
  double den = n * sxx - sx * sx;
  if (n >= 2 && den > 0) {
    out.slope_ms_per_mpx = (n * sxy - sx * sy) / den;
    out.intercept_ms = (sy - out.slope_ms_per_mpx * sx) / n;
    double r_num = n * sxy - sx * sy;
    double r_den = std::sqrt(den * (n * syy - sy * sy));
    out.r_squared = r_den > 0 ? (r_num / r_den) * (r_num / r_den) : 0;
  }
  return out;
}

LookupBench bench_lookup(const LookupBenchConfig& config) {
  LookupBench out;
  std::mt19937_64 rng(config.seed);
  ValidatorNode node("bench-node", NodeRole::cold);
  auto& store = node.store();

  // A raw original and a derived edit, so the custody chain has two links.
  auto original = random_image(config.verify_image_side, config.verify_image_side, config.seed);
  auto edited = random_image(config.verify_image_side, config.verify_image_side, config.seed + 1);
  const std::uint32_t base_posting = 2945376;  // 2026-01-01 in 600 s units

  auto t0 = Clock::now();
  store.append(synthetic_record(image_hash(original), std::nullopt, base_posting));
  store.append(synthetic_record(image_hash(edited), image_hash(original), base_posting));
  std::vector<Hash256> sample;
  sample.reserve(std::min<std::size_t>(config.records, 4096));
  while (store.size() < config.records) {
    auto h = random_hash(rng);
    store.append(synthetic_record(h, random_hash(rng), base_posting + static_cast<std::uint32_t>(store.size() / 1000)));
    if (sample.size() < sample.capacity() && rng() % 64 == 0) sample.push_back(h);
  }
  out.load_seconds = since_ms(t0) / 1000.0;
  out.records = store.size();
  out.log_bytes = store.log_bytes();
  out.bytes_per_record = static_cast<double>(out.log_bytes) / static_cast<double>(out.records);

  std::vector<double> lookups;
  lookups.reserve(config.lookups);
  std::size_t found = 0;
  for (std::size_t i = 0; i < config.lookups; ++i) {
    Hash256 q = (i % 2 == 0 && !sample.empty()) ? sample[rng() % sample.size()] : random_hash(rng);
    auto t = Clock::now();
    auto r = store.lookup(q);
    lookups.push_back(since_ms(t));
    found += r.status == LookupStatus::Found;
  }
  out.lookup = summarize(lookups);
  out.lookup_hits = found;

  JsonRpcService service(node);
  RpcServer server(service);
  int port = server.start("127.0.0.1", 0);
  RpcClient client("http://127.0.0.1:" + std::to_string(port));
  std::vector<double> plain, chained;
  bool ok = true;
  for (std::size_t i = 0; i < config.verifies; ++i) {
    auto t = Clock::now();
    auto rep = verify_image(edited, client, false);
    plain.push_back(since_ms(t));
    t = Clock::now();
    auto full = verify_image(edited, client, true);
    chained.push_back(since_ms(t));
    ok = ok && rep.authenticated() && full.authenticated() && full.chain.size() == 2;
  }
  server.stop();
  out.verify_rpc = summarize(plain);
  out.verify_chain = summarize(chained);
  out.verify_found = ok;
  return out;
}

nlohmann::json to_json(const LatencySummary& s) {
  return {{"samples", s.samples}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"p99_ms", s.p99_ms}, {"max_ms", s.max_ms}};
}

nlohmann::json to_json(const CameraBench& b) {
  nlohmann::json scaling = nlohmann::json::array();
  for (auto [px, ms] : b.scaling) scaling.push_back({{"pixels", px}, {"median_ms", ms}});
  return {{"bench", "camera"},
          {"full", to_json(b.full)},
          {"floor_1x1", to_json(b.floor)},
          {"scaling", scaling},
          {"fit", {{"slope_ms_per_mpx", b.slope_ms_per_mpx}, {"intercept_ms", b.intercept_ms}, {"r_squared", b.r_squared}}}};
}

nlohmann::json to_json(const LookupBench& b) {
  return {{"bench", "lookup"},
          {"records", b.records},
          {"log_bytes", b.log_bytes},
          {"bytes_per_record", b.bytes_per_record},
          {"load_seconds", b.load_seconds},
          {"lookup", to_json(b.lookup)},
          {"lookup_hits", b.lookup_hits},
          {"verify_rpc", to_json(b.verify_rpc)},
          {"verify_rpc_chain", to_json(b.verify_chain)},
          {"verify_found", b.verify_found}};
}

}  // namespace birthmark
