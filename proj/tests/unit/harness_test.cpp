#include <gtest/gtest.h>

#include "birthmark/deviation.hpp"
#include "birthmark/harness.hpp"

using namespace birthmark;
using namespace birthmark::sim;
using nlohmann::json;

namespace {

Scenario named(const std::string& name) {
  for (auto& s : builtin_suite()) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no builtin " + name);
}

}  // namespace

TEST(Taint, CatchesDeliberateLeak) {
  TaintLedger ledger;
  Bus bus(ledger);
  auto fingerprint = sha256(as_bytes("sensor-7"));
  auto image = sha256(as_bytes("image-7"));
  ledger.add_atom(Atom::NucHash, fingerprint.view());
  ledger.add_atom(Atom::ImageHash, image.view());

  Bytes clean(image.view().begin(), image.view().end());
  ASSERT_TRUE(bus.send("camera", "server:node-eu-1", "packet", clean));
  EXPECT_EQ(ledger.count("server:", Atom::NucHash), 0u);
  EXPECT_EQ(ledger.count("server:", Atom::ImageHash), 1u);

  // Fingerprint buried at an odd offset inside a larger payload.
  Bytes leaky(13, 0xaa);
  leaky.insert(leaky.end(), fingerprint.view().begin(), fingerprint.view().end());
  leaky.push_back(0x55);
  bus.send("camera", "server:node-us-3", "packet", leaky);
  EXPECT_EQ(ledger.count("server:", Atom::NucHash), 1u);
  EXPECT_TRUE(ledger.saw("server:node-us-3", Atom::NucHash, fingerprint.view()));
  EXPECT_FALSE(ledger.saw("server:node-eu-1", Atom::NucHash, fingerprint.view()));
}

TEST(Taint, DownEndpointObservesNothing) {
  TaintLedger ledger;
  Bus bus(ledger);
  auto image = sha256(as_bytes("x"));
  ledger.add_atom(Atom::ImageHash, image.view());
  bus.set_down("server:a", true);
  EXPECT_FALSE(bus.send("camera", "server:a", "packet", image.view()));
  EXPECT_EQ(ledger.count("server:", Atom::ImageHash), 0u);
  EXPECT_EQ(bus.dropped(), 1u);
  bus.set_down("server:a", false);
  EXPECT_TRUE(bus.send("camera", "server:a", "packet", image.view()));
  EXPECT_EQ(bus.delivered(), 1u);
}

TEST(Taint, TappedLinksCountForAttacker) {
  TaintLedger ledger;
  Bus bus(ledger);
  auto image = sha256(as_bytes("tap"));
  ledger.add_atom(Atom::ImageHash, image.view());
  bus.tap("server:");
  bus.send("camera", "server:a", "packet", image.view());
  bus.send("camera", "ma:x", "other", Bytes(8, 1));
  EXPECT_EQ(bus.tapped().size(), 1u);
  EXPECT_EQ(ledger.count("attacker", Atom::ImageHash), 1u);
}

TEST(ScenarioParse, Diagnostics) {
  auto base = scenario_to_json(named("replay"));
  EXPECT_NO_THROW(parse_scenario(base));

  auto expect_invalid = [](const json& j, const std::string& needle) {
    try {
      parse_scenario(j);
      ADD_FAILURE() << "accepted: " << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidInput);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_invalid(json::array(), "object");
  auto j = base;
  j["kind"] = "teleport";
  expect_invalid(j, "teleport");
  j = base;
  j.erase("name");
  expect_invalid(j, "name");
  j = base;
  j["faults"] = json::array({{{"at", 1}, {"action", "explode"}, {"roles", json::array()}}});
  expect_invalid(j, "fault action");
  j = base;
  j["world"]["devices"] = 0;
  expect_invalid(j, "device");
  j = base;
  j["assertions"] = json::array({{{"metric", "finalized"}, {"op", "=="}}});
  expect_invalid(j, "value");
}

TEST(ScenarioParse, JsonRoundTripAndFiles) {
  for (const auto& s : builtin_suite()) {
    SCOPED_TRACE(s.name);
    auto back = parse_scenario(scenario_to_json(s));
    EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
  }
  auto dir = std::filesystem::path(BIRTHMARK_SOURCE_DIR) / "scenarios";
  auto replay = load_scenario(dir / "replay.json");
  EXPECT_EQ(scenario_to_json(replay), scenario_to_json(named("replay")));
  EXPECT_THROW(load_scenario(dir / "missing.json"), Error);
}

TEST(ScenarioRun, ReplayDefendedAndDeterministic) {
  auto s = named("replay");
  auto a = run_scenario(s);
  auto b = run_scenario(s);
  EXPECT_TRUE(a.ok()) << a.text();
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  bool asserted = false;
  for (const auto& f : a.findings) asserted |= f.attack.rfind("assert second_records", 0) == 0;
  EXPECT_TRUE(asserted);
}

TEST(ScenarioRun, UnknownMetricRejected) {
  auto s = named("replay");
  s.assertions.push_back({"no_such_metric", "==", 0});
  EXPECT_THROW(run_scenario(s), Error);
}

TEST(ScenarioRun, FailingAssertionIsReported) {
  auto s = named("replay");
  s.assertions = {{"second_records", "==", 1}};
  auto r = run_scenario(s);
  EXPECT_FALSE(r.ok());
}

TEST(Timing, EmptyAndSparseHistograms) {
  RecordStore empty;
  auto r = timing_anonymity(empty);
  EXPECT_TRUE(r.histogram.empty());
  EXPECT_TRUE(r.low_bins.empty());

  RecordStore sparse;
  for (int i = 0; i < 5; ++i) {
    ChainRecord c;
    c.record.image_hash = sha256(as_bytes("t" + std::to_string(i)));
    c.posting_server_ids = "a/b";
    c.posting_timestamp = 2945376;
    sparse.append(c);
  }
  r = timing_anonymity(sparse);
  ASSERT_EQ(r.histogram.size(), 1u);
  EXPECT_EQ(r.histogram.at(2945376), 5u);
  EXPECT_EQ(r.low_bins, std::vector<std::uint32_t>{2945376});
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.misaligned, 0u);
}

TEST(World, CapturesFinalizeAndKeepGroundTruthOutsideRoles) {
  WorldConfig cfg;
  cfg.seed = 5;
  cfg.devices = 3;
  World w(cfg);
  for (std::size_t i = 0; i < 6; ++i) w.capture(i % 3);
  w.settle();
  EXPECT_EQ(w.finalized(), 6u);
  EXPECT_TRUE(w.consortium().honest_stores_identical());
  for (const auto& c : w.captures()) EXPECT_EQ(w.true_device(c.image_hash), c.device);
  EXPECT_EQ(w.taint().count("ma:", Atom::ImageHash), 0u);
  EXPECT_EQ(w.taint().count("server:", Atom::NucHash), 0u);
  EXPECT_GT(w.taint().count("server:", Atom::ImageHash), 0u);
}

TEST(CloneStamp, FixtureCoversRequestedFraction) {
  auto fx = clone_stamp_fixture(256, 0.10, 40, 3);
  EXPECT_GE(fx.covered, 0.10);
  EXPECT_FALSE(fx.dabs.empty());
  EXPECT_NE(fx.honest, fx.tampered);
  EXPECT_EQ(fx.honest, apply_ops(fx.parent, fx.ops));
  double bound = clone_miss_bound(fx);
  EXPECT_GE(bound, 0.0);
  EXPECT_LT(bound, 0.01);
}
