// SPDX-License-Identifier: Apache-2.0
#include "birthmark/deviation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace birthmark {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    auto v = rng();
    if (v < limit) return v % bound;
  }
}

bool op_in_bounds(const DeclaredOp& op) noexcept {
  return std::visit(
      [](const auto& o) -> bool {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Exposure>) {
          return std::isfinite(o.stops) && std::fabs(o.stops) <= kMaxExposureStops;
        } else if constexpr (std::is_same_v<T, WhiteBalance>) {
          for (float g : {o.r, o.g, o.b}) {
            if (!std::isfinite(g) || g <= 0 || g > kMaxWhiteBalanceGain) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, Denoise>) {
          return o.radius >= 1 && o.radius <= kMaxDenoiseRadius;
        } else {
          return o.w > 0 && o.h > 0;
        }
      },
      op);
}

std::string describe(const DeclaredOp& op) {
  char buf[96];
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Exposure>) {
          std::snprintf(buf, sizeof(buf), "exposure %+g", static_cast<double>(o.stops));
        } else if constexpr (std::is_same_v<T, WhiteBalance>) {
          std::snprintf(buf, sizeof(buf), "wb %g,%g,%g", o.r, o.g, o.b);
        } else if constexpr (std::is_same_v<T, Denoise>) {
          std::snprintf(buf, sizeof(buf), "denoise %u", o.radius);
        } else {
          std::snprintf(buf, sizeof(buf), "crop %u,%u,%u,%u", o.x, o.y, o.w, o.h);
        }
      },
      op);
  return buf;
}

namespace {

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::string s(text);
  for (auto& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw Error(Errc::InvalidOp, "malformed operation parameters '" + std::string(text) + "'");
  return out;
}

std::uint32_t as_u32(double v) {
  if (v < 0 || v > 4294967295.0 || v != std::floor(v)) throw Error(Errc::InvalidOp, "expected unsigned integer");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

DeclaredOp parse_op(std::string_view text) {
  auto space = text.find(' ');
  if (space == std::string_view::npos) throw Error(Errc::InvalidOp, "operation needs parameters");
  auto name = text.substr(0, space);
  auto nums = parse_numbers(text.substr(space + 1));
  if (name == "exposure" && nums.size() == 1) return Exposure{static_cast<float>(nums[0])};
  if ((name == "wb" || name == "white_balance") && nums.size() == 3) {
    return WhiteBalance{static_cast<float>(nums[0]), static_cast<float>(nums[1]), static_cast<float>(nums[2])};
  }
  if (name == "denoise" && nums.size() == 1) return Denoise{as_u32(nums[0])};
  if (name == "crop" && nums.size() == 4) {
    return Crop{as_u32(nums[0]), as_u32(nums[1]), as_u32(nums[2]), as_u32(nums[3])};
  }
  throw Error(Errc::InvalidOp, "unknown operation '" + std::string(text) + "'");
}

const Hash256& audit_code_hash() {
  static const Hash256 h = sha256(as_bytes(kAuditCodeVersion));
  return h;
}

DeviationReport make_report(std::vector<DeclaredOp> ops, ModificationLevel level, float reported_score) {
  return DeviationReport{std::move(ops), level, reported_score, audit_code_hash()};
}

ModificationLevel level_for(std::span<const DeclaredOp> ops) noexcept {
  if (ops.empty()) return ModificationLevel::raw;
  for (const auto& op : ops) {
    if (!op_in_bounds(op)) return ModificationLevel::modified;
  }
  return ModificationLevel::validated;
}

bool level_policy_ok(const DeviationReport& report, double threshold) {
  switch (report.proposed_level) {
    case ModificationLevel::raw: return report.operations.empty() && report.reported_score == 0;
    case ModificationLevel::validated:
      if (report.code_hash != audit_code_hash()) return false;
      if (!(report.reported_score >= 0 && report.reported_score <= threshold)) return false;
      for (const auto& op : report.operations) {
        if (!op_in_bounds(op)) return false;
      }
      return true;
    case ModificationLevel::modified: return true;
  }
  return false;
}

Bytes encode(const DeviationReport& report) {
  if (report.operations.size() > 0xff) throw Error(Errc::InvalidValue, "too many declared operations");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(report.operations.size()));
  for (const auto& op : report.operations) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Exposure>) {
            w.u8(1);
            w.f32(o.stops);
          } else if constexpr (std::is_same_v<T, WhiteBalance>) {
            w.u8(2);
            w.f32(o.r);
            w.f32(o.g);
            w.f32(o.b);
          } else if constexpr (std::is_same_v<T, Denoise>) {
            w.u8(3);
            w.u32(o.radius);
          } else {
            w.u8(4);
            w.u32(o.x);
            w.u32(o.y);
            w.u32(o.w);
            w.u32(o.h);
          }
        },
        op);
  }
  w.u8(static_cast<std::uint8_t>(report.proposed_level));
  w.f32(report.reported_score);
  w.fixed(report.code_hash);
  return w.take();
}

DeviationReport decode_deviation_report(ByteView bytes) {
  ByteReader r(bytes);
  DeviationReport out;
  auto count = r.u8();
  for (int i = 0; i < count; ++i) {
    auto at = r.offset();
    switch (r.u8()) {
      case 1: out.operations.emplace_back(Exposure{r.f32()}); break;
      case 2: {
        WhiteBalance wb;
        wb.r = r.f32();
        wb.g = r.f32();
        wb.b = r.f32();
        out.operations.emplace_back(wb);
        break;
      }
      case 3: out.operations.emplace_back(Denoise{r.u32()}); break;
      case 4: {
        Crop c;
        c.x = r.u32();
        c.y = r.u32();
        c.w = r.u32();
        c.h = r.u32();
        out.operations.emplace_back(c);
        break;
      }
      default: throw Error(Errc::DecodeError, "unknown operation kind", at);
    }
  }
  auto at = r.offset();
  auto level = r.u8();
  if (level > 2) throw Error(Errc::InvalidValue, "modification level out of range", at);
  out.proposed_level = static_cast<ModificationLevel>(level);
  out.reported_score = r.f32();
  if (!std::isfinite(out.reported_score)) throw Error(Errc::InvalidValue, "reported score not finite");
  out.code_hash = r.fixed<Hash256>();
  r.expect_end();
  return out;
}

namespace {

// A rectangular piece of the current frame. Ops are applied to the window
// with edge handling relative to the full frame, so any pixel farther than
// the accumulated blur radius from a non-frame window edge comes out
// identical to the whole-image transform.
struct Window {
  PixelImage px;
  std::int64_t x0 = 0, y0 = 0;
  std::uint32_t frame_w = 0, frame_h = 0;
};

std::array<std::uint8_t, 256> gain_lut(double gain) {
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    double s = std::nearbyint(v * gain);
    lut[v] = static_cast<std::uint8_t>(std::clamp(s, 0.0, 255.0));
  }
  return lut;
}

void apply_luts(PixelImage& img, const std::array<std::uint8_t, 256>* luts) {
  auto* p = img.pixels.data();
  std::size_t n = img.pixels.size();
  for (std::size_t i = 0; i < n; i += 3) {
    p[i] = luts[0][p[i]];
    p[i + 1] = luts[1][p[i + 1]];
    p[i + 2] = luts[2][p[i + 2]];
  }
}

void box_blur(Window& win, std::uint32_t radius) {
  auto& img = win.px;
  const std::int64_t w = img.width, h = img.height;
  if (w == 0 || h == 0) return;
  const std::int64_t r = radius;
  const std::int64_t fw = win.frame_w, fh = win.frame_h;
  auto local_x = [&](std::int64_t lx) {
    std::int64_t ax = std::clamp<std::int64_t>(win.x0 + lx, 0, fw - 1);
    return std::clamp<std::int64_t>(ax - win.x0, 0, w - 1);
  };
  auto local_y = [&](std::int64_t ly) {
    std::int64_t ay = std::clamp<std::int64_t>(win.y0 + ly, 0, fh - 1);
    return std::clamp<std::int64_t>(ay - win.y0, 0, h - 1);
  };
  std::vector<std::uint32_t> horiz(static_cast<std::size_t>(w * h * 3));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      std::uint32_t s[3] = {0, 0, 0};
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        auto sx = local_x(x + dx);
        const auto* p = &img.pixels[static_cast<std::size_t>((y * w + sx) * 3)];
        s[0] += p[0];
        s[1] += p[1];
        s[2] += p[2];
      }
      auto* o = &horiz[static_cast<std::size_t>((y * w + x) * 3)];
      o[0] = s[0];
      o[1] = s[1];
      o[2] = s[2];
    }
  }
  const std::uint32_t count = static_cast<std::uint32_t>((2 * r + 1) * (2 * r + 1));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      std::uint32_t s[3] = {0, 0, 0};
      for (std::int64_t dy = -r; dy <= r; ++dy) {
        auto sy = local_y(y + dy);
        const auto* p = &horiz[static_cast<std::size_t>((sy * w + x) * 3)];
        s[0] += p[0];
        s[1] += p[1];
        s[2] += p[2];
      }
      auto* o = &img.pixels[static_cast<std::size_t>((y * w + x) * 3)];
      for (int c = 0; c < 3; ++c) o[c] = static_cast<std::uint8_t>((s[c] + count / 2) / count);
    }
  }
}

PixelImage sub_image(const PixelImage& img, std::int64_t x, std::int64_t y, std::int64_t w, std::int64_t h) {
  PixelImage out(static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h));
  for (std::int64_t row = 0; row < h; ++row) {
    const auto* src = &img.pixels[img.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y + row), 0)];
    std::copy(src, src + w * 3, &out.pixels[out.index(0, static_cast<std::uint32_t>(row), 0)]);
  }
  return out;
}

void apply_op(Window& win, const DeclaredOp& op) {
  if (!op_in_bounds(op)) throw Error(Errc::InvalidOp, "operation out of Level-1 bounds: " + describe(op));
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Exposure>) {
          auto lut = gain_lut(std::exp2(static_cast<double>(o.stops)));
          std::array<std::uint8_t, 256> luts[3] = {lut, lut, lut};
          apply_luts(win.px, luts);
        } else if constexpr (std::is_same_v<T, WhiteBalance>) {
          std::array<std::uint8_t, 256> luts[3] = {gain_lut(o.r), gain_lut(o.g), gain_lut(o.b)};
          apply_luts(win.px, luts);
        } else if constexpr (std::is_same_v<T, Denoise>) {
          box_blur(win, o.radius);
        } else {
          if (static_cast<std::uint64_t>(o.x) + o.w > win.frame_w ||
              static_cast<std::uint64_t>(o.y) + o.h > win.frame_h) {
            throw Error(Errc::InvalidOp, "crop outside image bounds: " + describe(op));
          }
          // Shift into the cropped frame, then intersect the window with it.
          std::int64_t nx0 = win.x0 - o.x, ny0 = win.y0 - o.y;
          std::int64_t lx = std::max<std::int64_t>(0, -nx0);
          std::int64_t ly = std::max<std::int64_t>(0, -ny0);
          std::int64_t rx = std::min<std::int64_t>(win.px.width, static_cast<std::int64_t>(o.w) - nx0);
          std::int64_t ry = std::min<std::int64_t>(win.px.height, static_cast<std::int64_t>(o.h) - ny0);
          if (rx <= lx || ry <= ly) {
            win.px = PixelImage(0, 0);
          } else if (lx != 0 || ly != 0 || rx != win.px.width || ry != win.px.height) {
            win.px = sub_image(win.px, lx, ly, rx - lx, ry - ly);
          }
          win.x0 = nx0 + lx;
          win.y0 = ny0 + ly;
          win.frame_w = o.w;
          win.frame_h = o.h;
        }
      },
      op);
}

struct Geometry {
  std::uint32_t final_w, final_h;
  std::int64_t offset_x = 0, offset_y = 0;  // parent coords = result coords + offset
  std::uint32_t margin = 0;
};

Geometry geometry_of(std::uint32_t w, std::uint32_t h, std::span<const DeclaredOp> ops) {
  Geometry g{w, h};
  for (const auto& op : ops) {
    if (const auto* c = std::get_if<Crop>(&op)) {
      if (static_cast<std::uint64_t>(c->x) + c->w > g.final_w || static_cast<std::uint64_t>(c->y) + c->h > g.final_h) {
        throw Error(Errc::InvalidOp, "crop outside image bounds: " + describe(op));
      }
      g.offset_x += c->x;
      g.offset_y += c->y;
      g.final_w = c->w;
      g.final_h = c->h;
    } else if (const auto* d = std::get_if<Denoise>(&op)) {
      g.margin += d->radius;
    }
  }
  return g;
}

}  // namespace

PixelImage apply_ops(const PixelImage& image, std::span<const DeclaredOp> ops) {
  Window win{image, 0, 0, image.width, image.height};
  for (const auto& op : ops) apply_op(win, op);
  return std::move(win.px);
}

AuditVerdict audit(const PixelImage& parent, const PixelImage& result, const DeviationReport& report,
                   std::uint64_t rng_seed, const AuditConfig& config) {
  AuditVerdict verdict;
  if (report.code_hash != audit_code_hash()) verdict.flags.emplace_back("unknown-code-hash");
  Geometry geo{};
  try {
    for (const auto& op : report.operations) {
      if (!op_in_bounds(op)) throw Error(Errc::InvalidOp, "operation out of bounds");
    }
    geo = geometry_of(parent.width, parent.height, report.operations);
  } catch (const Error&) {
    verdict.flags.emplace_back("invalid-operation");
    verdict.measured_score = 1.0;
    return verdict;
  }
  if (geo.final_w != result.width || geo.final_h != result.height) {
    verdict.flags.emplace_back("dimension-mismatch");
    verdict.measured_score = 1.0;
    return verdict;
  }

  std::mt19937_64 rng(rng_seed);
  std::uint32_t patch = config.patch_size;
  if (config.randomize_patch_size) patch = 48 + static_cast<std::uint32_t>(uniform_below(rng, 33));
  if (result.width < patch || result.height < patch) {
    patch = std::min(result.width, result.height);
    verdict.flags.emplace_back("degenerate-patch-size");
  }
  if (patch == 0) {
    verdict.flags.emplace_back("empty-image");
    verdict.measured_score = 0;
    verdict.pass = false;
    return verdict;
  }

  double total = 0;
  const std::int64_t m = geo.margin;
  for (std::uint32_t i = 0; i < config.patch_count; ++i) {
    auto px = static_cast<std::uint32_t>(uniform_below(rng, result.width - patch + 1));
    auto py = static_cast<std::uint32_t>(uniform_below(rng, result.height - patch + 1));
    std::int64_t wx0 = std::max<std::int64_t>(0, px + geo.offset_x - m);
    std::int64_t wy0 = std::max<std::int64_t>(0, py + geo.offset_y - m);
    std::int64_t wx1 = std::min<std::int64_t>(parent.width, px + geo.offset_x + patch + m);
    std::int64_t wy1 = std::min<std::int64_t>(parent.height, py + geo.offset_y + patch + m);
    Window win{sub_image(parent, wx0, wy0, wx1 - wx0, wy1 - wy0), wx0, wy0, parent.width, parent.height};
    for (const auto& op : report.operations) apply_op(win, op);

    std::uint64_t diff = 0;
    for (std::uint32_t y = 0; y < patch; ++y) {
      auto sy = static_cast<std::uint32_t>(py + y - win.y0);
      const auto* sim = &win.px.pixels[win.px.index(static_cast<std::uint32_t>(px - win.x0), sy, 0)];
      const auto* act = &result.pixels[result.index(px, py + y, 0)];
      for (std::uint32_t k = 0; k < patch * 3; ++k) {
        diff += static_cast<std::uint64_t>(std::abs(static_cast<int>(sim[k]) - static_cast<int>(act[k])));
      }
    }
    double dev = static_cast<double>(diff) / (static_cast<double>(patch) * patch * 3 * 255.0);
    verdict.patches.push_back({px, py, patch, dev});
    total += dev;
  }
  verdict.measured_score = total / config.patch_count;
  bool over = verdict.measured_score > config.threshold;
  bool mismatch = std::fabs(verdict.measured_score - report.reported_score) > config.mismatch_tolerance;
  if (over) verdict.flags.emplace_back("threshold-exceeded");
  if (mismatch) verdict.flags.emplace_back("score-mismatch");
  verdict.pass = !over && !mismatch;
  return verdict;
}

double patch_hit_probability(std::uint32_t width, std::uint32_t height, std::uint32_t patch, const Crop& region) {
  if (patch > width || patch > height) return 1.0;
  auto axis = [&](std::uint32_t extent, std::uint32_t start, std::uint32_t len) {
    // Patch origins p in [0, extent - patch] overlapping [start, start + len).
    std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(start) - patch + 1);
    std::int64_t hi = std::min<std::int64_t>(extent - patch, static_cast<std::int64_t>(start) + len - 1);
    return hi < lo ? 0.0 : static_cast<double>(hi - lo + 1) / (extent - patch + 1);
  };
  return axis(width, region.x, region.w) * axis(height, region.y, region.h);
}

double patch_miss_bound(double hit_probability, std::uint32_t patches) {
  return std::pow(1.0 - hit_probability, static_cast<double>(patches));
}

std::vector<RedFlagCluster> cluster_flags(std::span<const AuditLogEntry> log, std::size_t min_failures) {
  std::map<std::pair<std::string, std::string>, RedFlagCluster> groups;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> makers;
  for (const auto& e : log) {
    if (e.passed) continue;
    auto key = std::make_pair(e.software_id, e.month);
    auto& g = groups[key];
    g.software_id = e.software_id;
    g.month = e.month;
    ++g.failures;
    makers[key].insert(e.manufacturer);
  }
  std::vector<RedFlagCluster> out;
  for (auto& [key, g] : groups) {
    if (g.failures < min_failures) continue;
    g.manufacturers.assign(makers[key].begin(), makers[key].end());
    out.push_back(std::move(g));
  }
  return out;
}

SoftwareAuthority::SoftwareAuthority(AuditConfig config, double audit_probability, std::uint64_t seed)
    : config_(config), probability_(audit_probability), rng_(seed) {}

std::optional<AuditVerdict> SoftwareAuthority::maybe_audit(const PixelImage& parent, const PixelImage& result,
                                                           const DeviationReport& report,
                                                           const std::string& software_id,
                                                           const std::string& manufacturer,
                                                           const std::string& month) {
  double draw = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  if (draw >= probability_) return std::nullopt;
  return audit_and_log(parent, result, report, software_id, manufacturer, month);
}

AuditVerdict SoftwareAuthority::audit_and_log(const PixelImage& parent, const PixelImage& result,
                                              const DeviationReport& report, const std::string& software_id,
                                              const std::string& manufacturer, const std::string& month) {
  auto verdict = audit(parent, result, report, rng_(), config_);
  log_.push_back({software_id, manufacturer, month, verdict.pass, verdict.measured_score});
  return verdict;
}

}  // namespace birthmark
