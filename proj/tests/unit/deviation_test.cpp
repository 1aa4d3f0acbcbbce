#include <gtest/gtest.h>

#include "birthmark/deviation.hpp"

using namespace birthmark;

namespace {

PixelImage flat(std::uint32_t w, std::uint32_t h, std::uint8_t v) {
  return PixelImage(w, h, Bytes(static_cast<std::size_t>(w) * h * 3, v));
}

// Inverts a square block of the image in place.
void overwrite(PixelImage& img, std::uint32_t x0, std::uint32_t y0, std::uint32_t side) {
  for (std::uint32_t y = y0; y < y0 + side; ++y) {
    for (std::uint32_t x = x0; x < x0 + side; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(255 - img.at(x, y, c));
    }
  }
}

bool has_flag(const AuditVerdict& v, std::string_view f) {
  return std::find(v.flags.begin(), v.flags.end(), f) != v.flags.end();
}

}  // namespace

TEST(DeclaredOps, DescribeParseRoundTrip) {
  for (const char* text : {"exposure +1.5", "wb 1.1,1,0.9", "denoise 2", "crop 0,0,640,480"}) {
    EXPECT_EQ(describe(parse_op(text)), text);
  }
  EXPECT_THROW(parse_op("sharpen 3"), Error);
  EXPECT_THROW(parse_op("crop 1,2"), Error);
}

TEST(DeclaredOps, LevelOneBounds) {
  EXPECT_TRUE(op_in_bounds(Exposure{2.0f}));
  EXPECT_FALSE(op_in_bounds(Exposure{2.5f}));
  EXPECT_FALSE(op_in_bounds(WhiteBalance{5.0f, 1, 1}));
  EXPECT_FALSE(op_in_bounds(Denoise{kMaxDenoiseRadius + 1}));
  std::vector<DeclaredOp> none;
  EXPECT_EQ(level_for(none), ModificationLevel::raw);
  std::vector<DeclaredOp> l1{Exposure{1.5f}, Crop{0, 0, 4, 4}};
  EXPECT_EQ(level_for(l1), ModificationLevel::validated);
  std::vector<DeclaredOp> l2{Exposure{3.0f}};
  EXPECT_EQ(level_for(l2), ModificationLevel::modified);
}

TEST(DeviationReportEncoding, OpSizesAndRoundTrip) {
  auto empty = make_report({}, ModificationLevel::raw);
  EXPECT_EQ(encode(empty).size(), 1u + 1 + 4 + 32);
  auto r = make_report({Exposure{1.5f}, WhiteBalance{1.1f, 1.0f, 0.9f}, Denoise{2}, Crop{1, 2, 3, 4}},
                       ModificationLevel::validated, 0.03f);
  EXPECT_EQ(encode(r).size(), 38u + 5 + 13 + 5 + 17);
  EXPECT_EQ(decode_deviation_report(encode(r)), r);
  EXPECT_EQ(r.code_hash, audit_code_hash());
  EXPECT_EQ(audit_code_hash(), sha256(as_bytes(kAuditCodeVersion)));
}

TEST(ApplyOps, ExposureZeroIsIdentity) {
  auto img = random_image(9, 7, 1);
  std::vector<DeclaredOp> ops{Exposure{0}};
  EXPECT_EQ(apply_ops(img, ops), img);
}

TEST(ApplyOps, ExposurePlusOneDoublesAndClamps) {
  std::vector<DeclaredOp> ops{Exposure{1}};
  EXPECT_EQ(apply_ops(flat(2, 2, 100), ops), flat(2, 2, 200));
  EXPECT_EQ(apply_ops(flat(2, 2, 200), ops), flat(2, 2, 255));
}

TEST(ApplyOps, FullFrameCropIsIdentityAndOutOfBoundsThrows) {
  auto img = random_image(9, 7, 2);
  std::vector<DeclaredOp> full{Crop{0, 0, 9, 7}};
  EXPECT_EQ(apply_ops(img, full), img);
  std::vector<DeclaredOp> sub{Crop{2, 1, 3, 4}};
  auto c = apply_ops(img, sub);
  EXPECT_EQ(c.width, 3u);
  EXPECT_EQ(c.at(0, 0, 1), img.at(2, 1, 1));
  std::vector<DeclaredOp> bad{Crop{5, 0, 9, 7}};
  try {
    apply_ops(img, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidOp);
  }
}

TEST(ApplyOps, DenoiseOfFlatImageIsIdentity) {
  std::vector<DeclaredOp> ops{Denoise{3}};
  EXPECT_EQ(apply_ops(flat(12, 12, 77), ops), flat(12, 12, 77));
}

TEST(Audit, ReplayOfDeclaredOpsScoresExactlyZero) {
  auto parent = random_image(256, 192, 3);
  std::vector<std::vector<DeclaredOp>> lists = {
      {},
      {Exposure{1.5f}},
      {WhiteBalance{1.1f, 1.0f, 0.9f}, Denoise{2}},
      {Crop{10, 20, 200, 150}, Exposure{-0.5f}, Denoise{1}},
      {Denoise{2}, Crop{0, 0, 128, 128}, WhiteBalance{0.8f, 1.2f, 1.0f}},
  };
  for (std::size_t i = 0; i < lists.size(); ++i) {
    auto result = apply_ops(parent, lists[i]);
    auto level = lists[i].empty() ? ModificationLevel::raw : ModificationLevel::validated;
    auto v = audit(parent, result, make_report(lists[i], level), 1000 + i);
    EXPECT_EQ(v.measured_score, 0.0) << "list " << i;
    EXPECT_TRUE(v.pass) << "list " << i;
    EXPECT_EQ(v.patches.size(), 100u);
  }
}

TEST(Audit, SameSeedSamePatchesAndScore) {
  auto parent = random_image(128, 128, 4);
  auto result = apply_ops(parent, std::vector<DeclaredOp>{Exposure{1}});
  overwrite(result, 0, 0, 40);
  auto report = make_report({Exposure{1}}, ModificationLevel::validated);
  auto a = audit(parent, result, report, 77);
  auto b = audit(parent, result, report, 77);
  EXPECT_EQ(a.measured_score, b.measured_score);
  ASSERT_EQ(a.patches.size(), b.patches.size());
  for (std::size_t i = 0; i < a.patches.size(); ++i) {
    EXPECT_EQ(a.patches[i].x, b.patches[i].x);
    EXPECT_EQ(a.patches[i].y, b.patches[i].y);
  }
}

TEST(Audit, OverwrittenQuarterFailsWhileDeclaringExposure) {
  auto parent = random_image(256, 256, 5);
  std::vector<DeclaredOp> ops{Exposure{1.5f}};
  auto result = apply_ops(parent, ops);
  overwrite(result, 64, 64, 128);  // 25% of the frame
  auto v = audit(parent, result, make_report(ops, ModificationLevel::validated), 9);
  EXPECT_GT(v.measured_score, 0.05);
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(has_flag(v, "score-mismatch"));
}

TEST(Audit, UndeclaredOpDifferenceFiresMismatch) {
  auto parent = random_image(128, 128, 6);
  auto result = apply_ops(parent, std::vector<DeclaredOp>{Exposure{1.0f}});
  auto v = audit(parent, result, make_report({Exposure{0.5f}}, ModificationLevel::validated, 0.0f), 10);
  EXPECT_GT(v.measured_score, 0.05);
  EXPECT_TRUE(has_flag(v, "score-mismatch"));
  EXPECT_FALSE(v.pass);
}

TEST(Audit, ThresholdFlagAndShapeErrors) {
  auto parent = random_image(96, 96, 7);
  auto inverted = parent;
  overwrite(inverted, 0, 0, 96);
  auto report = make_report({}, ModificationLevel::raw);
  report.reported_score = 0.5f;
  auto v = audit(parent, inverted, report, 1);
  EXPECT_TRUE(has_flag(v, "threshold-exceeded"));
  EXPECT_FALSE(has_flag(v, "score-mismatch"));

  auto small = random_image(50, 50, 1);
  EXPECT_TRUE(has_flag(audit(parent, small, make_report({}, ModificationLevel::raw), 1), "dimension-mismatch"));
  auto bad = make_report({}, ModificationLevel::raw);
  bad.code_hash = Hash256{};
  EXPECT_TRUE(has_flag(audit(parent, parent, bad, 1), "unknown-code-hash"));
}

TEST(Audit, ProductionModeDrawsPatchSizeInRange) {
  auto parent = random_image(128, 128, 8);
  AuditConfig cfg;
  cfg.randomize_patch_size = true;
  std::set<std::uint32_t> sizes;
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto v = audit(parent, parent, make_report({}, ModificationLevel::raw), s, cfg);
    ASSERT_FALSE(v.patches.empty());
    EXPECT_GE(v.patches[0].size, 48u);
    EXPECT_LE(v.patches[0].size, 80u);
    sizes.insert(v.patches[0].size);
  }
  EXPECT_GT(sizes.size(), 5u);
}

TEST(PatchSampling, HitProbabilityMatchesEnumeration) {
  const std::uint32_t w = 100, h = 80, patch = 16;
  for (const auto& region : {Crop{0, 0, 4, 4}, Crop{30, 20, 10, 25}, Crop{90, 70, 10, 10}}) {
    std::size_t hits = 0, total = 0;
    for (std::uint32_t y = 0; y + patch <= h; ++y) {
      for (std::uint32_t x = 0; x + patch <= w; ++x) {
        ++total;
        bool overlap = x < region.x + region.w && region.x < x + patch && y < region.y + region.h && region.y < y + patch;
        hits += overlap;
      }
    }
    EXPECT_DOUBLE_EQ(patch_hit_probability(w, h, patch, region), static_cast<double>(hits) / total);
  }
  EXPECT_DOUBLE_EQ(patch_miss_bound(0.25, 2), 0.5625);
}

TEST(PatchSampling, EmpiricalMissRateWithinBinomialBandOfBound) {
  const std::uint32_t side = 96;
  const Crop region{0, 0, 4, 4};
  auto parent = random_image(side, side, 9);
  auto report = make_report({}, ModificationLevel::raw);
  double p = patch_hit_probability(side, side, 64, region);
  double miss = patch_miss_bound(p, 100);
  const int trials = 400;
  int all_missed = 0;
  for (int s = 0; s < trials; ++s) {
    auto v = audit(parent, parent, report, 5000 + s);
    bool hit = std::any_of(v.patches.begin(), v.patches.end(), [&](const PatchSample& ps) {
      return ps.x < region.x + region.w && ps.y < region.y + region.h;
    });
    all_missed += !hit;
  }
  double sigma = std::sqrt(trials * miss * (1 - miss));
  EXPECT_NEAR(all_missed, trials * miss, 3 * sigma);
}

TEST(LevelPolicy, SelfConsistency) {
  EXPECT_TRUE(level_policy_ok(make_report({}, ModificationLevel::raw), 0.16));
  EXPECT_FALSE(level_policy_ok(make_report({Exposure{1}}, ModificationLevel::raw), 0.16));
  EXPECT_TRUE(level_policy_ok(make_report({Exposure{1}}, ModificationLevel::validated, 0.1f), 0.16));
  EXPECT_FALSE(level_policy_ok(make_report({Exposure{1}}, ModificationLevel::validated, 0.2f), 0.16));
  EXPECT_FALSE(level_policy_ok(make_report({Exposure{3}}, ModificationLevel::validated), 0.16));
  auto stale = make_report({Exposure{1}}, ModificationLevel::validated);
  stale.code_hash = Hash256{};
  EXPECT_FALSE(level_policy_ok(stale, 0.16));
  EXPECT_TRUE(level_policy_ok(make_report({Exposure{3}}, ModificationLevel::modified), 0.16));
}

TEST(RedFlags, FiveFailuresSameSoftwareMonthCluster) {
  std::vector<AuditLogEntry> log;
  for (int i = 0; i < 5; ++i) log.push_back({"EditPro 3.1", i % 2 ? "CANON" : "NIKON", "2026-03", false, 0.3});
  log.push_back({"EditPro 3.1", "CANON", "2026-03", true, 0.0});
  auto c = cluster_flags(log);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].failures, 5u);
  EXPECT_EQ(c[0].manufacturers.size(), 2u);
}

TEST(RedFlags, FourFailuresNoCluster) {
  std::vector<AuditLogEntry> log;
  for (int i = 0; i < 4; ++i) log.push_back({"EditPro 3.1", "CANON", "2026-03", false, 0.3});
  EXPECT_TRUE(cluster_flags(log).empty());
}

TEST(RedFlags, FailuresSpreadOverMonthsNoCluster) {
  std::vector<AuditLogEntry> log;
  for (int m = 1; m <= 12; ++m) {
    char month[8];
    std::snprintf(month, sizeof month, "2026-%02d", m);
    log.push_back({"EditPro 3.1", "CANON", month, false, 0.3});
  }
  EXPECT_TRUE(cluster_flags(log).empty());
}

TEST(SoftwareAuthorityLog, AuditsRoughlyTheConfiguredFraction) {
  SoftwareAuthority sa({}, 0.10, 3);
  auto parent = random_image(64, 64, 1);
  auto report = make_report({}, ModificationLevel::raw);
  int audited = 0;
  for (int i = 0; i < 1000; ++i) audited += sa.maybe_audit(parent, parent, report, "tool", "CANON", "2026-01").has_value();
  // Binomial(1000, 0.1): sigma ~ 9.5.
  EXPECT_NEAR(audited, 100, 29);
  EXPECT_EQ(sa.log().size(), static_cast<std::size_t>(audited));
}
