// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale performance measurement with JSON output.
#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace birthmark {

struct LatencySummary {
  std::size_t samples = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double p99_ms = 0;
  double max_ms = 0;
};

// Nearest-rank percentiles; sorts the input.
LatencySummary summarize(std::vector<double>& millis);

struct CameraBenchConfig {
  std::uint32_t width = 4000;
  std::uint32_t height = 3000;
  std::size_t captures = 100;
  std::size_t floor_captures = 200;  // 1x1 image
  std::vector<std::uint32_t> scaling_sides = {256, 512, 1024, 2048, 3072};
  std::size_t scaling_captures = 9;
  std::uint64_t seed = 7;
};

struct CameraBench {
  LatencySummary full;   // hash + encrypt + sign on the full fixture
  LatencySummary floor;  // 1x1 image
  std::vector<std::pair<double, double>> scaling;  // (pixels, median ms)
  double slope_ms_per_mpx = 0;
  double intercept_ms = 0;
  double r_squared = 0;
};

CameraBench bench_camera(const CameraBenchConfig& config = {});

struct LookupBenchConfig {
  std::size_t records = 1'000'000;
  std::size_t lookups = 100'000;
  std::size_t verifies = 50;
  std::uint32_t verify_image_side = 1024;
  std::uint64_t seed = 11;
};

struct LookupBench {
  std::size_t records = 0;
  std::uint64_t log_bytes = 0;
  double bytes_per_record = 0;
  double load_seconds = 0;
  LatencySummary lookup;       // in-process hash lookup, hits and misses
  std::size_t lookup_hits = 0;
  LatencySummary verify_rpc;   // hash + lookup over loopback JSON-RPC
  LatencySummary verify_chain; // same, with the custody chain
  bool verify_found = false;
};

LookupBench bench_lookup(const LookupBenchConfig& config = {});

nlohmann::json to_json(const LatencySummary& s);
nlohmann::json to_json(const CameraBench& b);
nlohmann::json to_json(const LookupBench& b);

}  // namespace birthmark
