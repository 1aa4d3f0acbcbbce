#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "fixture.hpp"

using namespace birthmark;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("birthmark-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Bytes slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool contains(const Bytes& hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::vector<RegistryEntry> registry(std::initializer_list<std::tuple<const char*, const char*, std::uint32_t>> rows) {
  std::vector<RegistryEntry> out;
  for (auto [id, region, rank] : rows) out.push_back({id, region, rank, 0});
  return out;
}

}  // namespace

TEST(Capture, RawWithoutMetadata) {
  fixture::Network net;
  auto agent = net.make_agent(1);
  auto out = agent.capture_and_build(random_image(8, 8, 1), {}, net.now);
  const auto& r = out.packet.record;
  EXPECT_EQ(r.modification_level, ModificationLevel::raw);
  EXPECT_FALSE(r.parent_image_hash);
  EXPECT_FALSE(r.metadata);
  EXPECT_FALSE(out.nonce);
  EXPECT_EQ(out.packet.certificate.record_hash, record_hash(r));
  EXPECT_TRUE(verify(encode(out.packet.certificate), out.packet.camera_signature, agent.public_key()));
}

TEST(Capture, MetadataHashesAndNonceSidecar) {
  fixture::Network net;
  AgentConfig cfg;
  cfg.owner = "alice";
  cfg.latitude = 48.85837;
  cfg.longitude = 2.29448;
  auto agent = net.make_agent(2, cfg);
  CaptureOptions opts;
  opts.metadata = true;
  auto out = agent.capture_and_build(random_image(8, 8, 2), opts, net.now);
  ASSERT_TRUE(out.packet.record.metadata);
  ASSERT_TRUE(out.nonce);
  EXPECT_EQ(encode(out.packet.record).size(), 57u);
  EXPECT_EQ(out.claims.month, "2026-01");
  EXPECT_EQ(out.claims.geolocation, "48.85837,2.29448");
  EXPECT_EQ(*out.packet.record.metadata, hash_metadata(out.claims, *out.nonce));

  auto dir = temp_dir("sidecar");
  write_nonce_sidecar(dir / "img.bmpx.nonce", *out.nonce);
  EXPECT_EQ(read_nonce_sidecar(dir / "img.bmpx.nonce"), *out.nonce);
  EXPECT_EQ(fs::file_size(dir / "img.bmpx.nonce") >= 32, true);
  fs::remove_all(dir);
}

TEST(Capture, DeclaredExposureIsLevelOneWithParent) {
  fixture::Network net;
  auto agent = net.make_agent(3);
  auto parent = random_image(8, 8, 3);
  CaptureOptions opts;
  opts.declared_ops = {parse_op("exposure +1.5")};
  opts.parent = image_hash(parent);
  auto out = agent.capture_and_build(apply_ops(parent, opts.declared_ops), opts, net.now);
  EXPECT_EQ(out.packet.record.modification_level, ModificationLevel::validated);
  EXPECT_EQ(out.packet.record.parent_image_hash, image_hash(parent));
  EXPECT_EQ(out.packet.certificate.deviation.proposed_level, ModificationLevel::validated);
}

TEST(Capture, UnprovisionedAgentThrows) {
  auto identity = calibrated_identity(NucMap::synthetic(4, 4, 1));
  CameraAgent agent(std::move(identity), "CANON_001");
  try {
    agent.capture_and_build(random_image(2, 2, 1), {}, fixture::kNow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotProvisioned);
  }
}

TEST(Capture, AnyCertificateMutationBreaksServerCheck) {
  fixture::Network net;
  auto agent = net.make_agent(4);
  auto out = agent.capture_and_build(random_image(8, 8, 4), {}, net.now);
  auto& server = net.server("node-eu-1");

  auto swapped = out.packet;
  swapped.record.image_hash = image_hash(random_image(8, 8, 99));
  auto r1 = server.handle_submission(swapped, net.now);
  ASSERT_TRUE(std::holds_alternative<SubmissionRejected>(r1));
  EXPECT_EQ(std::get<SubmissionRejected>(r1).reason, ServerRejection::BindingMismatch);

  for (auto mutate : std::vector<std::function<void(ManufacturerCertificate&)>>{
           [](auto& c) { c.encrypted_token.bytes[0] ^= 1; },
           [](auto& c) { c.key_index ^= 1; },
           [](auto& c) { c.record_hash.bytes[3] ^= 1; },
           [](auto& c) { c.deviation.reported_score = 0.5f; }}) {
    auto p = out.packet;
    mutate(p.certificate);
    auto r = server.handle_submission(p, net.now);
    ASSERT_TRUE(std::holds_alternative<SubmissionRejected>(r));
    EXPECT_EQ(std::get<SubmissionRejected>(r).reason, ServerRejection::BadSignature);
  }
}

TEST(PrnuEnrollment, FlatFramesWithFixedEntropyAreDeterministic) {
  std::vector<PixelImage> frames(kEnrollmentFrames, PixelImage(16, 16, Bytes(16 * 16 * 3, 128)));
  auto entropy = sha256(as_bytes("fixed"));
  auto a = enroll_prnu(frames, entropy);
  auto b = enroll_prnu(frames, entropy);
  EXPECT_EQ(a.kind, SensorKind::PrnuSeeded);
  EXPECT_EQ(a.secure_element->public_key(), b.secure_element->public_key());
  EXPECT_EQ(a.nuc_hash, prnu_fingerprint(a.secure_element->public_key()));
}

TEST(PrnuEnrollment, FreshEntropyGivesNewIdentity) {
  auto frames = synthetic_prnu_frames(32, 32, 7, 1);
  auto a = enroll_prnu(frames, sha256(as_bytes("boot 1")));
  auto b = enroll_prnu(frames, sha256(as_bytes("boot 2")));
  EXPECT_NE(a.secure_element->public_key(), b.secure_element->public_key());
  EXPECT_NE(a.nuc_hash, b.nuc_hash);
}

TEST(PrnuEnrollment, DistinctSensorsGiveDistinctKeys) {
  auto entropy = sha256(as_bytes("same"));
  auto a = enroll_prnu(synthetic_prnu_frames(32, 32, 1, 5), entropy);
  auto b = enroll_prnu(synthetic_prnu_frames(32, 32, 2, 5), entropy);
  EXPECT_NE(a.secure_element->public_key(), b.secure_element->public_key());
}

TEST(PrnuEnrollment, FrameCountEnforced) {
  auto frames = synthetic_prnu_frames(16, 16, 1, 1, 19);
  try {
    enroll_prnu(frames, Hash256{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientFrames);
  }
}

TEST(PrnuEnrollment, PersistedStateHoldsNoPattern) {
  fixture::Network net;
  auto frames = synthetic_prnu_frames(32, 32, 11, 3);
  auto identity = enroll_prnu(frames, sha256(as_bytes("e")));
  auto prov = net.ma.provision_device(identity.nuc_hash, identity.secure_element->public_key());
  auto dir = temp_dir("prnu");
  AgentConfig cfg;
  cfg.queue_path = dir / "queue.json";
  cfg.seed = 1;
  CameraAgent agent(std::move(identity), net.ma.validator_id(), cfg);
  agent.install(prov);
  agent.save_identity(dir / "identity.json");
  net.down = {"node-eu-1", "node-us-3", "node-ap-2"};
  agent.select_servers(net.registry.entries(), net.now);
  agent.submit(agent.capture_and_build(frames[0], {}, net.now).packet, net, net.now);

  auto pattern = synthetic_prnu_pattern(32, 32, 11);
  ByteView probe(pattern.data(), 64);
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto bytes = slurp(entry.path());
    EXPECT_FALSE(contains(bytes, probe)) << entry.path();
    EXPECT_FALSE(contains(bytes, as_bytes(to_hex(probe)))) << entry.path();
  }
  fs::remove_all(dir);
}

TEST(ServerSelection, TwelveServersFourRegionsPickThreeRegions) {
  std::vector<RegistryEntry> reg;
  const char* regions[] = {"eu", "us", "ap", "sa"};
  for (std::uint32_t i = 0; i < 12; ++i) reg.push_back({"s" + std::to_string(i), regions[i % 4], 0, 0});
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    auto sel = choose_servers(reg, rng);
    ASSERT_EQ(sel.servers.size(), 3u);
    std::set<std::string> seen;
    for (const auto& id : sel.servers) {
      auto it = std::find_if(reg.begin(), reg.end(), [&](const RegistryEntry& e) { return e.server_id == id; });
      seen.insert(it->region);
    }
    EXPECT_EQ(seen.size(), 3u);
  }
}

TEST(ServerSelection, RegionRuleRelaxedBeforeLoadRule) {
  // Ranks 0..5 all in "eu"; the two busiest (one quarter of 8) elsewhere.
  auto reg = registry({{"eu-a", "eu", 0}, {"eu-b", "eu", 1}, {"eu-c", "eu", 2}, {"eu-d", "eu", 3},
                       {"eu-e", "eu", 4}, {"eu-f", "eu", 5}, {"us-a", "us", 6}, {"ap-a", "ap", 7}});
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    auto sel = choose_servers(reg, rng);
    ASSERT_EQ(sel.servers.size(), 3u);
    for (const auto& id : sel.servers) EXPECT_TRUE(id.starts_with("eu-")) << id;
    EXPECT_FALSE(sel.degraded);
  }
}

TEST(ServerSelection, TopQuartileNeverChosen) {
  std::vector<RegistryEntry> reg;
  for (std::uint32_t i = 0; i < 8; ++i) reg.push_back({"s" + std::to_string(i), i % 2 ? "eu" : "us", i, 0});
  std::mt19937_64 rng(3);
  std::map<std::string, int> counts;
  for (int t = 0; t < 1000; ++t) {
    for (const auto& id : choose_servers(reg, rng).servers) ++counts[id];
  }
  EXPECT_EQ(counts["s6"], 0);
  EXPECT_EQ(counts["s7"], 0);
  EXPECT_GT(counts["s0"], 0);
}

TEST(ServerSelection, TooFewServersIsDegraded) {
  auto reg = registry({{"only", "eu", 0}});
  std::mt19937_64 rng(4);
  auto sel = choose_servers(reg, rng);
  EXPECT_TRUE(sel.degraded);
  EXPECT_EQ(sel.servers, std::vector<std::string>{"only"});
}

TEST(Submit, BothServersUpGivesTwoReceipts) {
  fixture::Network net;
  auto agent = net.make_agent(5);
  auto out = agent.capture_and_build(random_image(8, 8, 5), {}, net.now);
  auto receipt = agent.submit(out.packet, net, net.now);
  EXPECT_EQ(receipt.delivered.size(), 2u);
  EXPECT_NE(receipt.delivered[0], receipt.delivered[1]);
  EXPECT_FALSE(receipt.queued);
  net.settle();
  EXPECT_TRUE(net.node().store().contains(out.packet.record.image_hash));
}

TEST(Submit, AllDownQueuesThenDrainSucceeds) {
  fixture::Network net;
  auto agent = net.make_agent(6);
  net.down = {"node-eu-1", "node-us-3", "node-ap-2"};
  auto out = agent.capture_and_build(random_image(8, 8, 6), {}, net.now);
  auto receipt = agent.submit(out.packet, net, net.now);
  EXPECT_TRUE(receipt.queued);
  EXPECT_EQ(agent.queue().size(), 1u);

  net.down.clear();
  std::size_t done = 0;
  for (int i = 0; i < 20 && done == 0; ++i) {
    net.now += 60;
    done = agent.drain(net, net.now);
  }
  EXPECT_EQ(done, 1u);
  EXPECT_TRUE(agent.queue().empty());
  net.settle();
  EXPECT_TRUE(net.node().store().contains(out.packet.record.image_hash));
}

TEST(Submit, OneDownSubstitutesTheThirdServer) {
  fixture::Network net;
  auto agent = net.make_agent(7);
  const auto& sel = agent.selection().servers;
  ASSERT_EQ(sel.size(), 3u);
  net.down = {sel[0]};
  auto out = agent.capture_and_build(random_image(8, 8, 7), {}, net.now);
  auto receipt = agent.submit(out.packet, net, net.now);
  ASSERT_EQ(receipt.delivered.size(), 2u);
  EXPECT_EQ(std::count(receipt.delivered.begin(), receipt.delivered.end(), sel[0]), 0);
  EXPECT_FALSE(receipt.queued);
}

TEST(Submit, QueueSurvivesRestartWithoutDuplicates) {
  fixture::Network net;
  auto dir = temp_dir("queue");
  AgentConfig cfg;
  cfg.queue_path = dir / "queue.json";
  auto first = net.make_agent(8, cfg);
  net.down = {"node-eu-1", "node-us-3", "node-ap-2"};
  std::vector<Hash256> hashes;
  for (int i = 0; i < 3; ++i) {
    auto out = first.capture_and_build(random_image(8, 8, 100 + i), {}, net.now);
    hashes.push_back(out.packet.record.image_hash);
    first.submit(out.packet, net, net.now);
  }
  ASSERT_EQ(first.queue().size(), 3u);

  // Same device, new process: the queue comes back from disk.
  SubmissionQueue reloaded(dir / "queue.json");
  EXPECT_EQ(reloaded.size(), 3u);
  auto second = net.make_agent(8, cfg);
  EXPECT_EQ(second.queue().size(), 3u);

  net.down.clear();
  for (int i = 0; i < 20 && !second.queue().empty(); ++i) {
    net.now += 120;
    second.drain(net, net.now);
    first.drain(net, net.now);  // a stale copy of the queue retrying too
  }
  net.settle();
  for (const auto& h : hashes) EXPECT_TRUE(net.node().store().contains(h));
  EXPECT_EQ(net.node().store().size(), 3u);
  fs::remove_all(dir);
}

TEST(Retry, ExponentialBackoffWithCapAndJitter) {
  RetryPolicy p;
  std::mt19937_64 rng(1);
  for (std::uint32_t a = 1; a <= 12; ++a) {
    double nominal = std::min(2.0 * std::pow(2.0, a - 1), 600.0);
    auto d = static_cast<double>(p.delay(a, rng));
    EXPECT_GE(d, std::floor(nominal * 0.8));
    EXPECT_LE(d, std::ceil(nominal * 1.2));
  }
}

TEST(NucIdentity, FingerprintIsHashOfMap) {
  auto map = NucMap::synthetic(8, 6, 3);
  EXPECT_EQ(map.bytes().size(), 8u * 6 * 4);
  auto id = calibrated_identity(map);
  EXPECT_EQ(id.nuc_hash, sha256(map.bytes()));
  EXPECT_NE(NucMap::synthetic(8, 6, 4).hash(), map.hash());
}
