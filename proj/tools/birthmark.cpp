// SPDX-License-Identifier: Apache-2.0
//
// birthmark: command-line front end.
//
//   dump <file> [--as kind]
//   verify <image> (--node url | --nodes file) [--json] [--chain] [--meta k=v ...]
//   audit --parent p.bmpx --result r.bmpx --report r.json
//   sim run <scenario.json|name|all> [--json]   sim list   sim export <dir>   sim fixture <dir>
//   bench camera|lookup [--json]
//   stats [--records-per-day n]
//   node serve --data <dir> [--host h] [--port p]
//   ma init|provision|revoke|rotate|stats --state <file>
//
// Exit codes: 0 success / found / pass, 1 not found / fail, 2 error.
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "birthmark/bench.hpp"
#include "birthmark/deviation.hpp"
#include "birthmark/dump.hpp"
#include "birthmark/harness.hpp"
#include "birthmark/json.hpp"
#include "birthmark/rpc.hpp"
#include "birthmark/verify.hpp"

using namespace birthmark;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNo = 1;
constexpr int kExitError = 2;

Bytes read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidInput, p.string() + " is not valid JSON");
  return j;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error(Errc::Io, "cannot write " + p.string());
  out << j.dump(2) << "\n";
}

std::string level_name(ModificationLevel l) {
  switch (l) {
    case ModificationLevel::raw: return "0 (raw sensor data)";
    case ModificationLevel::validated: return "1 (validated tonal/compositional edits)";
    case ModificationLevel::modified: return "2 (content modified)";
  }
  return "?";
}

std::string posting_time(std::uint32_t posting) {
  std::time_t t = static_cast<std::time_t>(posting) * kPostingEpoch;
  return fmt::format("{:%Y-%m-%d %H:%M} UTC", fmt::gmtime(t));
}

// --- dump ---------------------------------------------------------------

int cmd_dump(const std::string& file, const std::string& as) {
  auto bytes = read_all(file);
  WireKind kind;
  if (!as.empty()) {
    kind = wire_kind_from_string(as);
  } else {
    auto k = detect_kind(bytes);
    if (!k) {
      std::cerr << "dump: " << file << " (" << bytes.size() << " bytes) is not a known wire object; try --as\n";
      return kExitError;
    }
    kind = *k;
  }
  std::cout << format_dump(bytes, kind);
  return kExitOk;
}

// --- verify -------------------------------------------------------------

struct VerifyArgs {
  std::string image;
  std::string node;
  std::string nodes_file;
  bool json = false;
  bool chain = false;
  std::vector<std::string> meta;
  double timeout = 5.0;
};

ClaimedMetadata parse_meta(const std::vector<std::string>& items, std::optional<Nonce>& nonce, bool& nonce_given) {
  ClaimedMetadata claims;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidInput, "--meta expects key=value, got '" + item + "'");
    auto key = item.substr(0, eq);
    auto value = item.substr(eq + 1);
    if (key == "nonce") {
      nonce_given = true;
      nonce = read_nonce_sidecar(value);
    } else if (key == "ts") {
      claims.month = value;
    } else if (key == "geo") {
      claims.geolocation = value;
    } else if (key == "owner") {
      claims.owner = value;
    } else {
      throw Error(Errc::InvalidInput, "unknown --meta key '" + key + "' (nonce, ts, geo, owner)");
    }
  }
  return claims;
}

std::vector<std::string> endpoints(const VerifyArgs& a) {
  std::vector<std::string> out;
  if (!a.node.empty()) out.push_back(a.node);
  if (!a.nodes_file.empty()) {
    std::ifstream in(a.nodes_file);
    if (!in) throw Error(Errc::Io, "cannot read " + a.nodes_file);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line[0] != '#') out.push_back(line);
    }
  }
  if (out.empty()) throw Error(Errc::InvalidInput, "no validator endpoint: pass --node <url> or --nodes <file>");
  return out;
}

void print_report(const VerificationReport& r) {
  std::cout << "image_hash  " << r.image_hash.hex() << "\n";
  if (r.status == LookupStatus::PrunedSeeColdNode) {
    std::cout << "PRUNED: this hot node no longer holds the payload; query a cold (archive) node\n";
    return;
  }
  if (!r.authenticated()) {
    std::cout << "NOT FOUND: no record for these exact pixels\n";
    return;
  }
  const auto& rec = *r.record;
  std::cout << "AUTHENTICATED\n";
  std::cout << "  modification level  " << level_name(rec.record.modification_level) << "\n";
  if (rec.record.parent_image_hash) std::cout << "  parent              " << rec.record.parent_image_hash->hex() << "\n";
  std::cout << "  posted              " << posting_time(rec.posting_timestamp) << " via " << rec.posting_server_ids << "\n";
  std::cout << "  metadata hashes     " << (rec.record.metadata ? "present" : "none") << "\n";
  if (r.chain_error) {
    std::cout << "  custody chain       ERROR: " << *r.chain_error << "\n";
  } else if (!r.chain.empty()) {
    std::cout << "  custody chain       " << r.chain.size() << " record(s), root first\n";
    for (std::size_t i = 0; i < r.chain.size(); ++i) {
      std::cout << fmt::format("    [{}] {} level {}\n", i, r.chain[i].record.image_hash.hex(),
                               static_cast<int>(r.chain[i].record.modification_level));
    }
  }
  if (r.metadata) {
    const auto& m = *r.metadata;
    std::cout << "  metadata            timestamp " << to_string(m.timestamp) << ", geolocation "
              << to_string(m.geolocation) << ", owner " << to_string(m.owner) << " (" << m.matches()
              << " match)\n";
  }
}

int cmd_verify(const VerifyArgs& a) {
  auto image = read_image(a.image);
  std::optional<Nonce> nonce;
  bool nonce_given = false;
  auto claims = parse_meta(a.meta, nonce, nonce_given);
  bool want_meta = !a.meta.empty();

  std::string last_error;
  for (const auto& url : endpoints(a)) {
    try {
      RpcClient client(url, a.timeout);
      auto report = verify_image(image, client, a.chain);
      if (want_meta && report.record) report.metadata = verify_metadata(report.record->record, nonce, claims);
      if (a.json) {
        std::cout << to_json(report).dump(2) << "\n";
      } else {
        print_report(report);
      }
      return report.authenticated() ? kExitOk : kExitNo;
    } catch (const Error& e) {
      if (e.code() != Errc::Unreachable) throw;
      last_error = e.what();
    }
  }
  std::cerr << "error: no validator reachable (" << last_error << ")\n"
            << "hint: the node may be down; retry later or pass another endpoint with --node or --nodes\n";
  return kExitError;
}

// --- audit --------------------------------------------------------------

int cmd_audit(const std::string& parent, const std::string& result, const std::string& report_path,
              std::uint64_t seed, double threshold, bool as_json) {
  auto p = read_image(parent);
  auto r = read_image(result);
  auto report = deviation_report_from_json(read_json(report_path));
  AuditConfig cfg;
  cfg.threshold = threshold;
  auto verdict = audit(p, r, report, seed, cfg);
  if (as_json) {
    std::cout << to_json(verdict).dump(2) << "\n";
  } else {
    std::cout << (verdict.pass ? "PASS" : "FAIL") << fmt::format("  measured score {:.4f}", verdict.measured_score)
              << fmt::format("  reported {:.4f}  threshold {:.2f}\n", report.reported_score, cfg.threshold);
    for (const auto& f : verdict.flags) std::cout << "  flag: " << f << "\n";
  }
  return verdict.pass ? kExitOk : kExitNo;
}

// --- sim ----------------------------------------------------------------

std::vector<sim::Scenario> resolve_scenarios(const std::string& what) {
  if (what == "all") return sim::builtin_suite();
  if (fs::exists(what)) {
    if (fs::is_directory(what)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(what)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      std::vector<sim::Scenario> out;
      for (const auto& f : files) out.push_back(sim::load_scenario(f));
      return out;
    }
    return {sim::load_scenario(what)};
  }
  for (auto& s : sim::builtin_suite()) {
    if (s.name == what) return {s};
  }
  throw Error(Errc::InvalidInput, "no scenario file or built-in scenario named '" + what + "' (see 'sim list')");
}

int cmd_sim_run(const std::string& what, bool as_json, const std::string& out_file) {
  auto scenarios = resolve_scenarios(what);
  auto report = scenarios.size() > 1 || what == "all" ? sim::run_suite(scenarios) : sim::run_scenario(scenarios.front());
  std::string text = as_json ? report.to_json().dump(2) + "\n" : report.text();
  std::cout << text;
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    out << text;
  }
  return report.ok() ? kExitOk : kExitNo;
}

int cmd_sim_list() {
  for (const auto& s : sim::builtin_suite()) std::cout << fmt::format("{:<28} {}\n", s.name, s.kind);
  std::cout << "\nkinds:";
  for (const auto& k : sim::scenario_kinds()) std::cout << " " << k;
  std::cout << "\n";
  return kExitOk;
}

int cmd_sim_export(const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& s : sim::builtin_suite()) {
    write_json(dir / (s.name + ".json"), sim::scenario_to_json(s));
    std::cout << (dir / (s.name + ".json")).string() << "\n";
  }
  return kExitOk;
}

// Small world whose chain and images can be served and verified: an
// original capture with metadata and a crop of it.
int cmd_sim_fixture(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir / "images");
  sim::WorldConfig cfg;
  cfg.seed = seed;
  cfg.devices = 3;
  cfg.image_size = 64;
  sim::World w(cfg);

  CaptureOptions meta;
  meta.metadata = true;
  auto original = random_image(64, 64, seed * 7 + 1);
  auto rec = w.capture_image(0, original, meta);
  w.settle();
  w.advance(900);

  std::vector<DeclaredOp> ops{Crop{8, 8, 32, 32}};
  auto cropped = apply_ops(original, ops);
  CaptureOptions edit;
  edit.declared_ops = ops;
  edit.parent = rec.image_hash;
  w.capture_image(0, cropped, edit);
  w.settle();

  auto unregistered = random_image(64, 64, seed * 7 + 2);
  write_image(dir / "images" / "original.bmpx", original);
  write_nonce_sidecar(dir / "images" / "original.bmpx.nonce", *rec.output.nonce);
  write_image(dir / "images" / "crop.bmpx", cropped);
  write_image(dir / "images" / "unregistered.bmpx", unregistered);

  fs::remove_all(dir / "store");
  auto store = RecordStore::open(dir / "store");
  for (std::uint32_t i = 0; i < w.chain().size(); ++i) store.append(*w.chain().record_at(i));
  json claims{{"ts", rec.output.claims.month}, {"geo", rec.output.claims.geolocation}, {"owner", rec.output.claims.owner}};
  write_json(dir / "images" / "original.claims.json", claims);
  std::cout << fmt::format("{} records in {}\nimages and sidecars in {}\n", store.size(), (dir / "store").string(),
                           (dir / "images").string());
  return kExitOk;
}

// --- bench --------------------------------------------------------------

int cmd_bench(const std::string& what, bool as_json, std::size_t records, std::size_t captures) {
  json j;
  if (what == "camera") {
    CameraBenchConfig cfg;
    if (captures) cfg.captures = captures;
    j = to_json(bench_camera(cfg));
  } else if (what == "lookup") {
    LookupBenchConfig cfg;
    if (records) cfg.records = records;
    j = to_json(bench_lookup(cfg));
  } else {
    throw Error(Errc::InvalidInput, "bench target must be 'camera' or 'lookup'");
  }
  if (as_json) {
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  if (what == "camera") {
    std::cout << fmt::format("camera auth delta, 12 MP: p50 {:.2f} ms  p95 {:.2f} ms  p99 {:.2f} ms ({} captures)\n",
                             j["full"]["p50_ms"].get<double>(), j["full"]["p95_ms"].get<double>(),
                             j["full"]["p99_ms"].get<double>(), j["full"]["samples"].get<std::size_t>());
    std::cout << fmt::format("1x1 floor: p50 {:.3f} ms\n", j["floor_1x1"]["p50_ms"].get<double>());
    std::cout << fmt::format("scaling fit: {:.3f} ms/MP + {:.3f} ms, r^2 {:.4f}\n",
                             j["fit"]["slope_ms_per_mpx"].get<double>(), j["fit"]["intercept_ms"].get<double>(),
                             j["fit"]["r_squared"].get<double>());
  } else {
    std::cout << fmt::format("{} records, log {} bytes ({:.1f} B/record), loaded in {:.1f} s\n",
                             j["records"].get<std::size_t>(), j["log_bytes"].get<std::uint64_t>(),
                             j["bytes_per_record"].get<double>(), j["load_seconds"].get<double>());
    std::cout << fmt::format("lookup p50 {:.4f} ms  p99 {:.4f} ms\n", j["lookup"]["p50_ms"].get<double>(),
                             j["lookup"]["p99_ms"].get<double>());
    std::cout << fmt::format("verify over loopback RPC p99 {:.2f} ms (with chain {:.2f} ms), found: {}\n",
                             j["verify_rpc"]["p99_ms"].get<double>(), j["verify_rpc_chain"]["p99_ms"].get<double>(),
                             j["verify_found"].get<bool>() ? "yes" : "no");
  }
  return kExitOk;
}

// --- stats --------------------------------------------------------------

int cmd_stats(double per_day, double bytes_per_record, bool as_json) {
  double year = storage_projection_bytes(per_day, bytes_per_record);
  if (as_json) {
    std::cout << json{{"records_per_day", per_day},
                      {"bytes_per_record", bytes_per_record},
                      {"bytes_per_year", year},
                      {"gb_per_year", year / 1e9}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << fmt::format("{:.0f} records/day x {:.0f} B/record x 365 days = {:.3f} GB/year\n", per_day,
                             bytes_per_record, year / 1e9);
  }
  return kExitOk;
}

// --- node ---------------------------------------------------------------

RpcServer* g_server = nullptr;

int cmd_node_serve(const fs::path& data, const std::string& host, int port) {
  ValidatorNode node("node", NodeRole::cold);
  node.open_store(data);
  if (!node.store().verify_links()) {
    std::cerr << "error: chain links under " << data.string() << " do not verify\n";
    return kExitError;
  }
  JsonRpcService service(node);
  RpcServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << fmt::format("serving {} records from {} on http://{}:{}/\n", node.store().size(), data.string(), host,
                           port);
  server.serve(host, port);
  return kExitOk;
}

// --- ma -----------------------------------------------------------------
//
// State file: {"validator_id", "seed", "config", "journal": [...]}. The
// authority is rebuilt by replaying the journal on a seeded instance.

struct MaState {
  json doc;
  std::unique_ptr<ManufacturerAuthority> ma;
};

AuthorityConfig config_from_json(const json& j) {
  AuthorityConfig c;
  c.tables = j.value("tables", c.tables);
  c.keys_per_table = j.value("keys_per_table", c.keys_per_table);
  c.k_min = j.value("k_min", c.k_min);
  c.k_warn = j.value("k_warn", c.k_warn);
  c.slots_per_device = j.value("slots_per_device", c.slots_per_device);
  c.rotation_grace_seconds = j.value("rotation_grace_seconds", c.rotation_grace_seconds);
  return c;
}

MaState load_ma(const fs::path& state) {
  MaState s;
  s.doc = read_json(state);
  s.ma = std::make_unique<ManufacturerAuthority>(s.doc.at("validator_id").get<std::string>(),
                                                 config_from_json(s.doc.at("config")),
                                                 s.doc.at("seed").get<std::uint64_t>());
  for (const auto& op : s.doc.at("journal")) {
    auto kind = op.at("op").get<std::string>();
    if (kind == "provision") {
      s.ma->provision_device(Hash256::from_hex(op.at("nuc").get<std::string>()),
                             PublicKey::from_hex(op.at("key").get<std::string>()));
    } else if (kind == "revoke") {
      s.ma->revoke(Hash256::from_hex(op.at("nuc").get<std::string>()));
    } else if (kind == "rotate") {
      s.ma->rotate_key(op.at("table").get<std::uint32_t>(), op.at("index").get<std::uint32_t>(), op.at("at").get<std::int64_t>());
    } else if (kind == "seal") {
      s.ma->seal_bootstrap();
    }
  }
  return s;
}

void save_ma(const fs::path& state, MaState& s, json op) {
  s.doc["journal"].push_back(std::move(op));
  write_json(state, s.doc);
}

int cmd_ma(const std::string& action, const fs::path& state, const json& args) {
  if (action == "init") {
    if (fs::exists(state)) throw Error(Errc::InvalidInput, state.string() + " already exists");
    AuthorityConfig c;
    json doc{{"validator_id", args.at("id")},
             {"seed", args.at("seed")},
             {"config",
              {{"tables", args.value("tables", c.tables)},
               {"keys_per_table", args.value("keys_per_table", c.keys_per_table)},
               {"k_min", c.k_min},
               {"k_warn", c.k_warn},
               {"slots_per_device", c.slots_per_device},
               {"rotation_grace_seconds", c.rotation_grace_seconds}}},
             {"journal", json::array()}};
    write_json(state, doc);
    std::cout << "initialized " << state.string() << "\n";
    return kExitOk;
  }
  auto s = load_ma(state);
  if (action == "provision") {
    auto nuc = Hash256::from_hex(args.at("nuc").get<std::string>());
    auto key = PublicKey::from_hex(args.at("key").get<std::string>());
    auto prov = s.ma->provision_device(nuc, key);
    json slots = json::array();
    for (const auto& sl : prov.slots) {
      slots.push_back({{"key_table_id", sl.key_table_id}, {"key_index", sl.key_index}, {"key", sl.key.hex()}});
    }
    save_ma(state, s, {{"op", "provision"}, {"nuc", nuc.hex()}, {"key", key.hex()}});
    std::cout << json{{"device_cert", to_hex(encode(prov.device_cert))}, {"slots", slots}}.dump(2) << "\n";
  } else if (action == "revoke") {
    auto nuc = Hash256::from_hex(args.at("nuc").get<std::string>());
    s.ma->revoke(nuc);
    save_ma(state, s, {{"op", "revoke"}, {"nuc", nuc.hex()}});
    std::cout << "revoked " << nuc.hex() << "\n";
  } else if (action == "rotate") {
    auto at = args.at("at").get<std::int64_t>();
    auto notice = s.ma->rotate_key(args.at("table"), args.at("index"), at);
    save_ma(state, s, {{"op", "rotate"}, {"table", args.at("table")}, {"index", args.at("index")}, {"at", at}});
    std::cout << to_hex(encode(notice)) << "\n";
  } else if (action == "seal") {
    s.ma->seal_bootstrap();
    save_ma(state, s, {{"op", "seal"}});
    std::cout << "bootstrap sealed\n";
  } else if (action == "stats") {
    auto st = s.ma->stats();
    json keys = json::array();
    for (const auto& k : st.keys) {
      keys.push_back({{"table", k.key_table_id}, {"index", k.key_index}, {"devices", k.devices}, {"below_warning", k.below_warning}});
    }
    std::cout << json{{"legitimate", st.legitimate},
                      {"revoked", st.revoked},
                      {"log_entries", st.log_entries},
                      {"bootstrap", st.bootstrap},
                      {"keys", keys},
                      {"validations_per_month", st.validations_per_month}}
                     .dump(2)
              << "\n";
  } else {
    throw Error(Errc::InvalidInput, "unknown ma action '" + action + "'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birthmark photo authentication tools"};
  app.require_subcommand(1);

  std::string dump_file, dump_as;
  auto* dump = app.add_subcommand("dump", "Annotated field dump of a wire object or record log");
  dump->add_option("file", dump_file, "Binary file")->required()->check(CLI::ExistingFile);
  dump->add_option("--as", dump_as, "Wire kind (record, chain-record, log, packet, bundle, ...)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Look up an image by pixel hash on a validator node");
  verify->add_option("image", va.image, "Image file (.bmpx)")->required()->check(CLI::ExistingFile);
  verify->add_option("--node", va.node, "Validator JSON-RPC endpoint, e.g. http://127.0.0.1:8545");
  verify->add_option("--nodes", va.nodes_file, "File with one endpoint per line, tried in order")->check(CLI::ExistingFile);
  verify->add_flag("--json", va.json, "Machine-readable output");
  verify->add_flag("--chain", va.chain, "Also fetch the custody chain");
  verify->add_option("--meta", va.meta, "Metadata claims: nonce=<file> ts=<YYYY-MM> geo=<lat,lon> owner=<id>");
  verify->add_option("--timeout", va.timeout, "Per-request timeout in seconds");

  std::string a_parent, a_result, a_report;
  std::uint64_t a_seed = 1;
  double a_threshold = 0.16;
  bool a_json = false;
  auto* aud = app.add_subcommand("audit", "Replay declared operations on random patches and score deviation");
  aud->add_option("--parent", a_parent)->required()->check(CLI::ExistingFile);
  aud->add_option("--result", a_result)->required()->check(CLI::ExistingFile);
  aud->add_option("--report", a_report, "Deviation report JSON")->required()->check(CLI::ExistingFile);
  aud->add_option("--seed", a_seed, "Patch sampling seed");
  aud->add_option("--threshold", a_threshold, "Deviation threshold");
  aud->add_flag("--json", a_json);

  auto* simc = app.add_subcommand("sim", "Adversary harness");
  simc->require_subcommand(1);
  std::string sim_what, sim_out, sim_dir;
  bool sim_json = false;
  std::uint64_t fixture_seed = 1;
  auto* run = simc->add_subcommand("run", "Run a scenario file, directory, built-in name or 'all'");
  run->add_option("scenario", sim_what)->required();
  run->add_flag("--json", sim_json);
  run->add_option("--out", sim_out, "Also write the report here");
  auto* list = simc->add_subcommand("list", "List built-in scenarios and kinds");
  auto* exp = simc->add_subcommand("export", "Write the built-in scenarios as JSON files");
  exp->add_option("dir", sim_dir)->required();
  auto* fix = simc->add_subcommand("fixture", "Write a servable chain plus registered images");
  fix->add_option("dir", sim_dir)->required();
  fix->add_option("--seed", fixture_seed);

  std::string bench_what;
  bool bench_json = false;
  std::size_t bench_records = 0, bench_captures = 0;
  auto* bench = app.add_subcommand("bench", "Performance measurements");
  bench->add_option("target", bench_what, "camera or lookup")->required()->check(CLI::IsMember({"camera", "lookup"}));
  bench->add_flag("--json", bench_json);
  bench->add_option("--records", bench_records, "Store size for lookup (default 1e6)");
  bench->add_option("--captures", bench_captures, "Captures for camera (default 100)");

  double per_day = 1e6, per_record = 153;
  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "Storage projection");
  stats->add_option("--records-per-day", per_day);
  stats->add_option("--bytes-per-record", per_record);
  stats->add_flag("--json", stats_json);

  std::string node_data, node_host = "127.0.0.1";
  int node_port = 8545;
  auto* node = app.add_subcommand("node", "Validator node");
  node->require_subcommand(1);
  auto* serve = node->add_subcommand("serve", "Serve a record store over JSON-RPC");
  serve->add_option("--data", node_data, "Store directory")->required();
  serve->add_option("--host", node_host);
  serve->add_option("--port", node_port);

  std::string ma_state, ma_id = "CANON_001", ma_nuc, ma_key;
  std::uint64_t ma_seed = 1;
  std::uint32_t ma_tables = 4, ma_keys = 1, ma_table = 0, ma_index = 0;
  std::int64_t ma_at = 0;
  auto* ma = app.add_subcommand("ma", "Manufacturer authority administration");
  ma->require_subcommand(1);
  ma->add_option("--state", ma_state, "Authority state file")->required();
  auto* ma_init = ma->add_subcommand("init", "Create a state file");
  ma_init->add_option("--id", ma_id);
  ma_init->add_option("--seed", ma_seed);
  ma_init->add_option("--tables", ma_tables);
  ma_init->add_option("--keys-per-table", ma_keys);
  auto* ma_prov = ma->add_subcommand("provision", "Register a fingerprint and issue a device cert and key slots");
  ma_prov->add_option("--nuc", ma_nuc, "Fingerprint hex")->required();
  ma_prov->add_option("--key", ma_key, "Device public key hex (65 bytes)")->required();
  auto* ma_rev = ma->add_subcommand("revoke", "Revoke a fingerprint");
  ma_rev->add_option("--nuc", ma_nuc)->required();
  auto* ma_rot = ma->add_subcommand("rotate", "Rotate one key slot; prints the notice hex");
  ma_rot->add_option("--table", ma_table)->required();
  ma_rot->add_option("--index", ma_index)->required();
  ma_rot->add_option("--at", ma_at, "Unix time of the rotation")->required();
  auto* ma_seal = ma->add_subcommand("seal", "End bootstrap");
  auto* ma_stats = ma->add_subcommand("stats", "Population and per-key statistics");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dump) return cmd_dump(dump_file, dump_as);
    if (*verify) return cmd_verify(va);
    if (*aud) return cmd_audit(a_parent, a_result, a_report, a_seed, a_threshold, a_json);
    if (*simc) {
      if (*run) return cmd_sim_run(sim_what, sim_json, sim_out);
      if (*list) return cmd_sim_list();
      if (*exp) return cmd_sim_export(sim_dir);
      if (*fix) return cmd_sim_fixture(sim_dir, fixture_seed);
    }
    if (*bench) return cmd_bench(bench_what, bench_json, bench_records, bench_captures);
    if (*stats) return cmd_stats(per_day, per_record, stats_json);
    if (*serve) return cmd_node_serve(node_data, node_host, node_port);
    if (*ma) {
      std::string action = *ma_init ? "init" : *ma_prov ? "provision" : *ma_rev ? "revoke" : *ma_rot ? "rotate"
                         : *ma_seal ? "seal" : *ma_stats ? "stats" : "";
      json args{{"id", ma_id},   {"seed", ma_seed}, {"tables", ma_tables}, {"keys_per_table", ma_keys},
                {"nuc", ma_nuc}, {"key", ma_key},   {"table", ma_table},   {"index", ma_index},
                {"at", ma_at}};
      return cmd_ma(action, ma_state, args);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
