#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "fixture.hpp"

using namespace birthmark;
namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kPosting = 2945376;

ChainRecord chain_record(const Hash256& image, std::optional<Hash256> parent, ModificationLevel level,
                         std::uint32_t posting = kPosting) {
  ChainRecord c;
  c.record.image_hash = image;
  c.record.modification_level = level;
  c.record.parent_image_hash = parent;
  c.posting_server_ids = "node-eu-1/node-us-3";
  c.posting_timestamp = posting;
  return c;
}

Hash256 h(std::string_view s) { return sha256(as_bytes(s)); }

// One record approved independently by each of the three servers.
struct Approved {
  BirthmarkRecord record;
  std::map<std::string, Approval> by_server;
};

Approved approve_everywhere(fixture::Network& net, CameraAgent& agent, std::uint64_t image_seed) {
  auto out = agent.capture_and_build(random_image(8, 8, image_seed), {}, net.now);
  Approved a{out.packet.record, {}};
  for (auto& sv : net.servers) {
    auto res = sv->handle_submission(out.packet, net.now);
    auto& fwd = std::get<ForwardedApproval>(res);
    a.by_server[sv->id()] = fwd.approval;
  }
  return a;
}

Candidate candidate(const Approved& a, const std::string& s1, const std::string& s2) {
  return {a.record, a.by_server.at(s1), a.by_server.at(s2), posting_timestamp(fixture::kNow)};
}

Consortium consortium_of(fixture::Network& net, std::size_t n) {
  Consortium c;
  for (std::size_t i = 0; i < n; ++i) c.add_node("v" + std::to_string(i));
  c.trust_authority(net.ma.public_key());
  for (auto& sv : net.servers) c.trust_server(sv->id(), sv->public_key());
  return c;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("birthmark-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Admission, TwoServersPairIntoFinalizableCandidate) {
  fixture::Network net;
  auto agent = net.make_agent(1);
  auto a = approve_everywhere(net, agent, 1);
  auto& node = net.node();
  auto r1 = node.admit(a.record, a.by_server["node-us-3"], net.now);
  EXPECT_EQ(r1.status, AdmitStatus::Pending);
  auto r2 = node.admit(a.record, a.by_server["node-eu-1"], net.now + 5);
  ASSERT_EQ(r2.status, AdmitStatus::Finalizable);
  EXPECT_EQ(r2.candidate->chain_record().posting_server_ids, "node-eu-1/node-us-3");
  EXPECT_EQ(r2.candidate->chain_record().posting_timestamp, posting_timestamp(net.now));
}

TEST(Admission, ReusedApprovalIsSameServer) {
  fixture::Network net;
  auto agent = net.make_agent(2);
  auto a = approve_everywhere(net, agent, 2);
  auto& node = net.node();
  node.admit(a.record, a.by_server["node-eu-1"], net.now);
  auto r = node.admit(a.record, a.by_server["node-eu-1"], net.now);
  EXPECT_EQ(r.status, AdmitStatus::Rejected);
  EXPECT_EQ(r.reason, AdmitRejection::SameServer);
}

TEST(Admission, ForgedSignaturesAndBindingRejected) {
  fixture::Network net;
  auto agent = net.make_agent(3);
  auto a = approve_everywhere(net, agent, 3);
  auto& node = net.node();

  auto forged_ma = a.by_server["node-us-3"];
  forged_ma.ma_signature = SigningKeypair::generate().sign(ma_approval_message(forged_ma.record_hash, "node-us-3"));
  EXPECT_EQ(node.admit(a.record, forged_ma, net.now).reason, AdmitRejection::BadMASig);

  // An approval issued to node-eu-1 relabelled as node-us-3.
  auto relabelled = a.by_server["node-eu-1"];
  relabelled.server_id = "node-us-3";
  EXPECT_EQ(node.admit(a.record, relabelled, net.now).reason, AdmitRejection::BadMASig);

  auto forged_server = a.by_server["node-us-3"];
  forged_server.server_signature = net.server("node-eu-1").sign_record_hash(forged_server.record_hash);
  EXPECT_EQ(node.admit(a.record, forged_server, net.now).reason, AdmitRejection::BadServerSig);

  auto other = a.record;
  other.image_hash = h("other");
  EXPECT_EQ(node.admit(other, a.by_server["node-us-3"], net.now).reason, AdmitRejection::BindingMismatch);

  auto stranger = a.by_server["node-us-3"];
  stranger.server_id = "node-xx-9";
  EXPECT_EQ(node.admit(a.record, stranger, net.now).reason, AdmitRejection::UnknownServer);
}

TEST(Admission, DuplicateImageRejectedAfterFinalization) {
  fixture::Network net;
  auto agent = net.make_agent(4);
  auto a = approve_everywhere(net, agent, 4);
  net.consortium.deliver({a.record, a.by_server["node-eu-1"]}, net.now);
  net.consortium.deliver({a.record, a.by_server["node-us-3"]}, net.now);
  net.settle();
  ASSERT_TRUE(net.node().store().contains(a.record.image_hash));
  auto res = net.consortium.deliver({a.record, a.by_server["node-ap-2"]}, net.now);
  EXPECT_EQ(res[0].reason, AdmitRejection::Duplicate);
  net.settle();
  EXPECT_EQ(net.node().store().size(), 1u);
}

TEST(Admission, PendingSingleExpires) {
  fixture::Network net;
  auto agent = net.make_agent(5);
  auto a = approve_everywhere(net, agent, 5);
  auto& node = net.node();
  node.admit(a.record, a.by_server["node-eu-1"], net.now);
  node.expire_pending(net.now + 601);
  EXPECT_EQ(node.admit(a.record, a.by_server["node-us-3"], net.now + 601).status, AdmitStatus::Pending);
}

TEST(Rounds, FourNodesOneMaliciousAllValidFinalize) {
  fixture::Network net;
  auto agent = net.make_agent(6);
  auto c = consortium_of(net, 4);
  c.set_honest(3, false);
  std::vector<Candidate> batch;
  for (std::uint64_t i = 0; i < 5; ++i) batch.push_back(candidate(approve_everywhere(net, agent, 60 + i), "node-eu-1", "node-us-3"));
  auto out = c.finalize_round(batch);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.appended[i].size(), 5u);
  EXPECT_TRUE(out.stalled.empty());
  EXPECT_TRUE(c.honest_stores_identical());
}

TEST(Rounds, TenNodesThreeMaliciousCannotFinalizeInvalid) {
  fixture::Network net;
  auto agent = net.make_agent(7);
  auto c = consortium_of(net, 10);
  auto good = approve_everywhere(net, agent, 70);
  auto bad = candidate(approve_everywhere(net, agent, 71), "node-eu-1", "node-us-3");
  bad.second.ma_signature = Signature64{};
  std::vector<Candidate> batch{candidate(good, "node-eu-1", "node-us-3"), bad};
  RoundPlan plan;
  for (std::size_t m = 7; m < 10; ++m) {
    c.set_honest(m, false);
    for (std::size_t j = 0; j < 7; ++j) plan.byzantine_votes[{m, j}] = {1};
  }
  auto out = c.finalize_round(batch, plan);
  EXPECT_FALSE(out.invalid_certified);
  for (std::size_t j = 0; j < 7; ++j) {
    EXPECT_EQ(out.appended[j], std::vector<std::size_t>{0});
    EXPECT_FALSE(c.node(j).store().contains(bad.record.image_hash));
  }
  EXPECT_TRUE(c.honest_stores_identical());
}

TEST(Rounds, TenNodesFourMaliciousSplitHonestStores) {
  fixture::Network net;
  auto agent = net.make_agent(8);
  auto c = consortium_of(net, 10);
  auto a = approve_everywhere(net, agent, 80);
  // Two valid candidates for one image, paired from different servers.
  std::vector<Candidate> batch{candidate(a, "node-eu-1", "node-us-3"), candidate(a, "node-ap-2", "node-eu-1")};
  RoundPlan plan;
  for (std::size_t j = 0; j < 6; ++j) plan.delivery_order[j] = j < 3 ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1, 0};
  for (std::size_t m = 6; m < 10; ++m) {
    c.set_honest(m, false);
    for (std::size_t j = 0; j < 6; ++j) plan.byzantine_votes[{m, j}] = {j < 3 ? std::size_t{0} : std::size_t{1}};
  }
  auto out = c.finalize_round(batch, plan);
  EXPECT_TRUE(out.conflicting_certified);
  EXPECT_FALSE(c.honest_stores_identical());
}

TEST(Rounds, SameAttackWithThreeMaliciousStaysSafe) {
  fixture::Network net;
  auto agent = net.make_agent(9);
  auto c = consortium_of(net, 10);
  auto a = approve_everywhere(net, agent, 90);
  std::vector<Candidate> batch{candidate(a, "node-eu-1", "node-us-3"), candidate(a, "node-ap-2", "node-eu-1")};
  RoundPlan plan;
  for (std::size_t j = 0; j < 7; ++j) plan.delivery_order[j] = j < 4 ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1, 0};
  for (std::size_t m = 7; m < 10; ++m) {
    c.set_honest(m, false);
    for (std::size_t j = 0; j < 7; ++j) plan.byzantine_votes[{m, j}] = {j < 4 ? std::size_t{0} : std::size_t{1}};
  }
  auto out = c.finalize_round(batch, plan);
  EXPECT_FALSE(out.conflicting_certified);
  EXPECT_TRUE(c.honest_stores_identical());
  EXPECT_EQ(c.node(0).store().size(), 1u);
}

TEST(Rounds, QuorumIsCeilSixtySevenPercent) {
  Consortium c;
  for (int i = 0; i < 4; ++i) c.add_node("v" + std::to_string(i));
  EXPECT_EQ(c.quorum(), 3u);
  for (int i = 4; i < 10; ++i) c.add_node("v" + std::to_string(i));
  EXPECT_EQ(c.quorum(), 7u);
}

TEST(Rounds, OfflineNodeCatchesUp) {
  fixture::Network net;
  auto agent = net.make_agent(10);
  std::vector<Candidate> batch;
  for (std::uint64_t i = 0; i < 3; ++i) batch.push_back(candidate(approve_everywhere(net, agent, 100 + i), "node-eu-1", "node-us-3"));
  RoundPlan plan;
  plan.offline = {3};
  net.consortium.finalize_round(batch, plan);
  EXPECT_FALSE(net.consortium.honest_stores_identical());
  net.consortium.catch_up(3);
  EXPECT_TRUE(net.consortium.honest_stores_identical());
}

TEST(RecordStoreTest, LookupBitExactAndNotFound) {
  RecordStore s;
  auto c = chain_record(h("a"), std::nullopt, ModificationLevel::raw);
  s.append(c);
  auto r = s.lookup(h("a"));
  ASSERT_EQ(r.status, LookupStatus::Found);
  EXPECT_EQ(encode(*r.record), encode(c));
  EXPECT_EQ(s.lookup(h("zzz")).status, LookupStatus::NotFound);
  EXPECT_THROW(s.append(c), Error);
  EXPECT_EQ(s.log_bytes(), 40u + encode(c).size());
}

TEST(RecordStoreTest, LinksChainEveryEntry) {
  RecordStore s;
  Hash256 prev{};
  for (int i = 0; i < 5; ++i) {
    s.append(chain_record(h("r" + std::to_string(i)), std::nullopt, ModificationLevel::raw));
    auto entry = s.entry_bytes(static_cast<std::uint32_t>(i));
    auto env = decode_envelope(entry.subspan(0, Envelope::kSize));
    EXPECT_EQ(env.chain_index, static_cast<std::uint32_t>(i));
    EXPECT_EQ(env.prev_link, prev);
    prev = entry_link(entry.subspan(0, Envelope::kSize), entry.subspan(Envelope::kSize));
  }
  EXPECT_EQ(s.head(), prev);
  EXPECT_TRUE(s.verify_links());
}

TEST(RecordStoreTest, PersistedLogReopensAndDetectsTampering) {
  auto dir = temp_dir("store");
  Hash256 head;
  {
    auto s = RecordStore::open(dir);
    for (int i = 0; i < 4; ++i) s.append(chain_record(h("p" + std::to_string(i)), std::nullopt, ModificationLevel::raw));
    head = s.head();
  }
  auto again = RecordStore::open(dir);
  EXPECT_EQ(again.size(), 4u);
  EXPECT_EQ(again.head(), head);
  EXPECT_EQ(again.lookup(h("p2")).status, LookupStatus::Found);

  {
    std::fstream f(dir / "records.log", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(153 + 40 + 5);  // inside the second entry's image hash
    f.put('\x7f');
  }
  try {
    RecordStore::open(dir);
    FAIL() << "tampered log accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptChain);
  }
  fs::remove_all(dir);
}

TEST(Pruning, HotNodeStubsColdNodeKeeps) {
  ChainConfig cfg;
  cfg.prune_horizon = 86400;
  ValidatorNode hot("hot", NodeRole::hot, cfg);
  ValidatorNode cold("cold", NodeRole::cold, cfg);
  const std::int64_t t0 = fixture::kNow;
  for (auto* n : {&hot, &cold}) {
    n->store().append(chain_record(h("old"), std::nullopt, ModificationLevel::raw, posting_timestamp(t0)));
    n->store().append(chain_record(h("new"), std::nullopt, ModificationLevel::raw, posting_timestamp(t0 + 2 * 86400)));
  }
  EXPECT_EQ(hot.prune(t0 + 2 * 86400), 1u);
  EXPECT_EQ(cold.prune(t0 + 2 * 86400), 0u);
  EXPECT_EQ(hot.lookup(h("old")).status, LookupStatus::PrunedSeeColdNode);
  EXPECT_EQ(hot.lookup(h("new")).status, LookupStatus::Found);
  EXPECT_EQ(cold.lookup(h("old")).status, LookupStatus::Found);
  EXPECT_EQ(hot.store().retained(), 1u);
  EXPECT_TRUE(hot.store().verify_links());
  EXPECT_TRUE(cold.store().verify_links());
}

TEST(Custody, RawCropEditResolvesRootFirst) {
  ValidatorNode node("n", NodeRole::cold);
  node.store().append(chain_record(h("raw"), std::nullopt, ModificationLevel::raw));
  node.store().append(chain_record(h("crop"), h("raw"), ModificationLevel::validated));
  node.store().append(chain_record(h("edit"), h("crop"), ModificationLevel::modified));
  auto chain = node.custody_chain(h("edit"));
  ASSERT_EQ(chain.size(), 3u);
  EXPECT_EQ(chain[0].record.modification_level, ModificationLevel::raw);
  EXPECT_EQ(chain[1].record.modification_level, ModificationLevel::validated);
  EXPECT_EQ(chain[2].record.modification_level, ModificationLevel::modified);
}

TEST(Custody, OrphanEditIsBrokenChain) {
  ValidatorNode node("n", NodeRole::cold);
  node.store().append(chain_record(h("edit"), h("missing"), ModificationLevel::validated));
  try {
    node.custody_chain(h("edit"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BrokenChain);
  }
}

TEST(Custody, CycleIsCorruptChain) {
  ValidatorNode node("n", NodeRole::cold);
  node.store().append(chain_record(h("a"), h("b"), ModificationLevel::validated));
  node.store().append(chain_record(h("b"), h("a"), ModificationLevel::validated));
  try {
    node.custody_chain(h("a"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptChain);
  }
}

TEST(Custody, ThousandDeepChainResolves) {
  ValidatorNode node("n", NodeRole::cold);
  Hash256 prev = h("root");
  node.store().append(chain_record(prev, std::nullopt, ModificationLevel::raw));
  for (int i = 1; i < 1000; ++i) {
    auto cur = h("gen" + std::to_string(i));
    node.store().append(chain_record(cur, prev, ModificationLevel::validated));
    prev = cur;
  }
  auto chain = node.custody_chain(prev);
  ASSERT_EQ(chain.size(), 1000u);
  EXPECT_EQ(chain.front().record.image_hash, h("root"));
  EXPECT_EQ(chain.back().record.image_hash, prev);
}

TEST(Storage, ProjectionAndHistogram) {
  EXPECT_DOUBLE_EQ(storage_projection_bytes(1e6), 1e6 * 153 * 365);
  RecordStore s;
  s.append(chain_record(h("x"), std::nullopt, ModificationLevel::raw, 10));
  s.append(chain_record(h("y"), std::nullopt, ModificationLevel::raw, 10));
  s.append(chain_record(h("z"), std::nullopt, ModificationLevel::raw, 11));
  auto bins = posting_histogram(s);
  EXPECT_EQ(bins.at(10), 2u);
  EXPECT_EQ(bins.at(11), 1u);
}

TEST(ServerRole, HonestPacketYieldsVerifiableApproval) {
  fixture::Network net;
  auto agent = net.make_agent(11);
  auto out = agent.capture_and_build(random_image(8, 8, 11), {}, net.now);
  auto res = net.server("node-eu-1").handle_bytes(encode(out.packet), net.now);
  ASSERT_TRUE(std::holds_alternative<ForwardedApproval>(res));
  const auto& ap = std::get<ForwardedApproval>(res).approval;
  EXPECT_TRUE(verify(ma_approval_message(ap.record_hash, "node-eu-1"), ap.ma_signature, net.ma.public_key()));
  EXPECT_TRUE(verify(ap.record_hash.view(), ap.server_signature, net.server("node-eu-1").public_key()));
  const auto& log = net.server("node-eu-1").log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].image_hash, out.packet.record.image_hash);
}

TEST(ServerRole, RejectionsByClass) {
  fixture::Network net;
  auto agent = net.make_agent(12);
  auto out = agent.capture_and_build(random_image(8, 8, 12), {}, net.now);
  auto& sv = net.server("node-eu-1");
  auto reason = [](const SubmissionResult& r) { return std::get<SubmissionRejected>(r).reason; };

  EXPECT_EQ(reason(sv.handle_bytes(Bytes{1, 2, 3}, net.now)), ServerRejection::Malformed);
  auto p = out.packet;
  p.device_cert.ma_signature.bytes[0] ^= 1;
  EXPECT_EQ(reason(sv.handle_submission(p, net.now)), ServerRejection::BadDeviceCert);
  p = out.packet;
  p.certificate.validator_id = "NIKON_001";
  EXPECT_EQ(reason(sv.handle_submission(p, net.now)), ServerRejection::UnknownValidator);
  net.links[0]->down = true;
  EXPECT_EQ(reason(sv.handle_submission(out.packet, net.now)), ServerRejection::AuthorityUnreachable);
  net.links[0]->down = false;
  net.ma.revoke(agent.identity().nuc_hash);
  auto r = sv.handle_submission(out.packet, net.now);
  EXPECT_EQ(reason(r), ServerRejection::Authority);
  EXPECT_EQ(std::get<SubmissionRejected>(r).authority, MaRejection::Revoked);
}

TEST(ServerRole, ReplayedPacketPassesServerButChainDeduplicates) {
  fixture::Network net;
  auto agent = net.make_agent(13);
  auto out = agent.capture_and_build(random_image(8, 8, 13), {}, net.now);
  agent.submit(out.packet, net, net.now);
  net.settle();
  auto bytes = encode(out.packet);
  net.now += 60;
  EXPECT_EQ(net.deliver("node-eu-1", bytes), DeliveryStatus::Delivered);
  EXPECT_EQ(net.deliver("node-ap-2", bytes), DeliveryStatus::Delivered);
  net.settle();
  EXPECT_EQ(net.node().store().size(), 1u);
}

TEST(ServerRole, LogRetention) {
  fixture::Network net;
  auto agent = net.make_agent(14);
  auto& sv = net.server("node-eu-1");
  sv.handle_submission(agent.capture_and_build(random_image(8, 8, 14), {}, net.now).packet, net.now);
  sv.expire_logs(net.now + sv.log_retention_seconds);
  EXPECT_EQ(sv.log().size(), 1u);
  sv.expire_logs(net.now + sv.log_retention_seconds + 1);
  EXPECT_TRUE(sv.log().empty());
}

TEST(Registry, BusyServerRanksBelowIdleAndSchemaRoundTrips) {
  fixture::Network net;
  auto agent = net.make_agent(15);
  for (int i = 0; i < 100; ++i) {
    net.server("node-us-3").handle_submission(agent.capture_and_build(random_image(4, 4, 1000 + i), {}, net.now).packet, net.now);
  }
  for (int i = 0; i < 30; ++i) {
    net.server("node-ap-2").handle_submission(agent.capture_and_build(random_image(4, 4, 2000 + i), {}, net.now).packet, net.now);
  }
  net.publish();
  std::map<std::string, std::uint32_t> rank;
  for (const auto& e : net.registry.entries()) rank[e.server_id] = e.load_rank;
  EXPECT_LT(rank["node-eu-1"], rank["node-ap-2"]);
  EXPECT_LT(rank["node-ap-2"], rank["node-us-3"]);

  auto text = net.registry.to_json();
  auto back = ServerRegistry::from_json(text);
  EXPECT_EQ(back.entries(), net.registry.entries());
  EXPECT_THROW(ServerRegistry::from_json(R"({"server_id": "x"})"), Error);
  EXPECT_THROW(ServerRegistry::from_json(R"([{"region": "eu"}])"), Error);
}
