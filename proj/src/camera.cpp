// SPDX-License-Identifier: Apache-2.0
#include "birthmark/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace birthmark {

namespace {

// Separable 5-tap binomial blur with clamped edges, one float plane per channel.
std::vector<float> gaussian(const std::vector<float>& src, std::uint32_t w, std::uint32_t h) {
  static constexpr float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
  std::vector<float> tmp(src.size()), out(src.size());
  auto at = [&](const std::vector<float>& v, std::int64_t x, std::int64_t y, int c) {
    x = std::clamp<std::int64_t>(x, 0, w - 1);
    y = std::clamp<std::int64_t>(y, 0, h - 1);
    return v[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3 + c];
  };
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float s = 0;
        for (int d = -2; d <= 2; ++d) s += k[d + 2] * at(src, std::int64_t{x} + d, y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = s;
      }
    }
  }
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float s = 0;
        for (int d = -2; d <= 2; ++d) s += k[d + 2] * at(tmp, x, std::int64_t{y} + d, c);
        out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = s;
      }
    }
  }
  return out;
}

std::vector<double> prnu_field(std::uint32_t w, std::uint32_t h, std::uint64_t sensor_seed, double strength) {
  std::mt19937_64 rng(sensor_seed);
  std::normal_distribution<double> n(0.0, strength);
  std::vector<double> k(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : k) v = n(rng);
  return k;
}

}  // namespace

Bytes NucMap::bytes() const {
  ByteWriter wr;
  for (float g : gains) wr.f32(g);
  return wr.take();
}

NucMap NucMap::synthetic(std::uint32_t width, std::uint32_t height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NucMap m{width, height, std::vector<float>(static_cast<std::size_t>(width) * height)};
  for (auto& g : m.gains) g = 0.95f + 0.1f * static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return m;
}

SensorIdentity calibrated_identity(NucMap map, std::optional<Hash256> key_seed) {
  SensorIdentity id;
  id.kind = SensorKind::ManufacturingCalibrated;
  id.nuc_hash = map.hash();
  id.nuc_map = std::move(map);
  id.secure_element = std::make_shared<SecureElement>(key_seed ? SigningKeypair::from_seed(*key_seed)
                                                               : SigningKeypair::generate());
  return id;
}

Hash256 prnu_fingerprint(const PublicKey& key) {
  return sha256(concat(as_bytes("BM-v1-prnu-fingerprint:"), key.view()));
}

SensorIdentity enroll_prnu(std::span<const PixelImage> frames, const Hash256& entropy) {
  if (frames.size() < kEnrollmentFrames) {
    throw Error(Errc::InsufficientFrames, "PRNU enrollment needs " + std::to_string(kEnrollmentFrames) + " frames");
  }
  if (frames.size() > kEnrollmentFrames) throw Error(Errc::InvalidInput, "PRNU enrollment takes exactly 20 frames");
  const auto w = frames[0].width, h = frames[0].height;
  if (w == 0 || h == 0) throw Error(Errc::InvalidInput, "empty enrollment frame");
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw Error(Errc::InvalidInput, "enrollment frames differ in size");
  }

  std::vector<float> acc(static_cast<std::size_t>(w) * h * 3, 0.f);
  std::vector<float> plane(acc.size());
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = f.pixels[i];
    auto smooth = gaussian(plane, w, h);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += plane[i] - smooth[i];
  }
  Bytes prnu(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    float mean = acc[i] / static_cast<float>(frames.size());
    prnu[i] = static_cast<std::uint8_t>(static_cast<std::int8_t>(std::clamp(std::lround(mean * 8.f), -127L, 127L)));
  }
  auto seed = sha256(concat(prnu, entropy.view()));
  secure_zero(prnu);
  secure_zero({reinterpret_cast<std::uint8_t*>(acc.data()), acc.size() * sizeof(float)});
  secure_zero({reinterpret_cast<std::uint8_t*>(plane.data()), plane.size() * sizeof(float)});

  SensorIdentity id;
  id.kind = SensorKind::PrnuSeeded;
  id.secure_element = std::make_shared<SecureElement>(SigningKeypair::from_seed(seed));
  secure_zero(seed.bytes);
  id.nuc_hash = prnu_fingerprint(id.secure_element->public_key());
  return id;
}

std::vector<PixelImage> synthetic_prnu_frames(std::uint32_t width, std::uint32_t height, std::uint64_t sensor_seed,
                                              std::uint64_t scene_seed, std::size_t count, double strength) {
  auto k = prnu_field(width, height, sensor_seed, strength);
  std::mt19937_64 rng(scene_seed);
  std::normal_distribution<double> shot(0.0, 1.5);
  std::vector<PixelImage> frames;
  for (std::size_t f = 0; f < count; ++f) {
    double base = 90 + 80 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double gx = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.2;
    double gy = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.2;
    PixelImage img(width, height);
    for (std::uint32_t y = 0; y < height; ++y) {
      for (std::uint32_t x = 0; x < width; ++x) {
        for (int c = 0; c < 3; ++c) {
          auto i = img.index(x, y, c);
          double scene = base + gx * x + gy * y + 6 * c;
          double v = scene * (1 + k[i]) + shot(rng);
          img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

Bytes synthetic_prnu_pattern(std::uint32_t width, std::uint32_t height, std::uint64_t sensor_seed, double strength) {
  auto k = prnu_field(width, height, sensor_seed, strength);
  Bytes out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(static_cast<std::int8_t>(std::clamp(std::lround(k[i] * 1000), -127L, 127L)));
  }
  return out;
}

ServerSelection choose_servers(std::span<const RegistryEntry> registry, std::mt19937_64& rng) {
  ServerSelection sel;
  std::vector<const RegistryEntry*> by_load;
  for (const auto& e : registry) by_load.push_back(&e);
  std::sort(by_load.begin(), by_load.end(), [](const RegistryEntry* a, const RegistryEntry* b) {
    return std::tie(a->load_rank, a->server_id) < std::tie(b->load_rank, b->server_id);
  });
  std::size_t busy = by_load.size() / 4;
  std::vector<const RegistryEntry*> eligible(by_load.begin(), by_load.end() - static_cast<std::ptrdiff_t>(busy));
  std::vector<const RegistryEntry*> excluded(by_load.end() - static_cast<std::ptrdiff_t>(busy), by_load.end());
  if (eligible.size() < 2) {
    sel.degraded = true;
    eligible = by_load;
    excluded.clear();
  }
  for (std::size_t i = eligible.size(); i > 1; --i) {
    std::swap(eligible[i - 1], eligible[uniform_below(rng, i)]);
  }

  std::set<std::string> regions;
  auto taken = [&](const RegistryEntry* e) {
    return std::find(sel.servers.begin(), sel.servers.end(), e->server_id) != sel.servers.end();
  };
  for (const auto* e : eligible) {
    if (sel.servers.size() == 3) break;
    if (regions.insert(e->region).second) sel.servers.push_back(e->server_id);
  }
  for (const auto* e : eligible) {
    if (sel.servers.size() == 3) break;
    if (!taken(e)) sel.servers.push_back(e->server_id);
  }
  for (const auto* e : excluded) {
    if (sel.servers.size() == 3) break;
    if (!taken(e)) sel.servers.push_back(e->server_id);
  }
  return sel;
}

std::int64_t RetryPolicy::delay(std::uint32_t attempts, std::mt19937_64& rng) const {
  double d = base_seconds * std::pow(factor, attempts > 0 ? attempts - 1 : 0);
  d = std::min(d, cap_seconds);
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  d *= 1 + jitter * (2 * u - 1);
  return std::max<std::int64_t>(1, std::llround(d));
}

SubmissionQueue::SubmissionQueue(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;
  try {
    auto doc = nlohmann::json::parse(in);
    for (const auto& e : doc.at("entries")) {
      QueueEntry q;
      q.packet = from_hex(e.at("packet").get<std::string>());
      q.image_hash = Hash256::from_hex(e.at("image_hash").get<std::string>());
      q.delivered = e.at("delivered").get<std::vector<std::string>>();
      q.first_delivery = e.at("first_delivery").get<std::int64_t>();
      q.attempts = e.at("attempts").get<std::uint32_t>();
      q.next_retry = e.at("next_retry").get<std::int64_t>();
      q.enqueued_at = e.at("enqueued_at").get<std::int64_t>();
      entries_.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, "queue file " + path_->string() + ": " + e.what());
  }
}

void SubmissionQueue::push(QueueEntry entry) {
  entries_.push_back(std::move(entry));
  persist();
}

void SubmissionQueue::persist() const {
  if (!path_) return;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : entries_) {
    arr.push_back({{"packet", to_hex(q.packet)},
                   {"image_hash", q.image_hash.hex()},
                   {"delivered", q.delivered},
                   {"first_delivery", q.first_delivery},
                   {"attempts", q.attempts},
                   {"next_retry", q.next_retry},
                   {"enqueued_at", q.enqueued_at}});
  }
  auto tmp = *path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out << nlohmann::json{{"version", 1}, {"entries", arr}}.dump() << '\n';
    if (!out) throw Error(Errc::Io, "write failed on " + tmp.string());
  }
  std::filesystem::rename(tmp, *path_);
}

CameraAgent::CameraAgent(SensorIdentity identity, std::string validator_id, AgentConfig config)
    : identity_(std::move(identity)),
      validator_id_(std::move(validator_id)),
      config_(std::move(config)),
      rng_(config_.seed ? *config_.seed : std::random_device{}()),
      queue_(config_.queue_path ? SubmissionQueue(*config_.queue_path) : SubmissionQueue()) {
  if (!identity_.secure_element) throw Error(Errc::InvalidInput, "sensor identity has no secure element");
}

void CameraAgent::install(const Provisioning& provisioning) {
  if (provisioning.device_cert.device_key != public_key()) {
    throw Error(Errc::InvalidInput, "device certificate is for a different key");
  }
  device_cert_ = provisioning.device_cert;
  slots_ = provisioning.slots;
}

bool CameraAgent::apply_rotation(const RotationNotice& notice) {
  if (notice.validator_id != validator_id_) return false;
  for (auto& slot : slots_) {
    if (slot.key_table_id != notice.key_table_id || slot.key_index != notice.key_index) continue;
    try {
      auto key = decrypt_token(notice.wrapped_key, slot.key);
      slot.key = SymmetricKey::from(key.view());
      secure_zero(key.bytes);
      return true;
    } catch (const Error&) {
      return false;
    }
  }
  return false;
}

CaptureOutput CameraAgent::capture_and_build(const PixelImage& image, const CaptureOptions& options, std::int64_t now) {
  if (!provisioned()) throw Error(Errc::NotProvisioned, "camera has no device certificate or key slots");
  CaptureOutput out;
  auto& rec = out.packet.record;
  rec.image_hash = image_hash(image);
  rec.parent_image_hash = options.parent;

  ModificationLevel level = options.content_modified ? ModificationLevel::modified : level_for(options.declared_ops);
  if (level != ModificationLevel::raw && !options.parent && level == ModificationLevel::modified) {
    throw Error(Errc::InvalidInput, "content-modified capture needs a parent image");
  }
  if (level == ModificationLevel::raw && options.parent) level = ModificationLevel::validated;
  rec.modification_level = level;

  if (options.metadata) {
    Nonce nonce = config_.seed ? seeded_fixed<Nonce>(rng_) : random_fixed<Nonce>();
    out.claims = {month_text(now), format_geolocation(config_.latitude, config_.longitude), config_.owner};
    rec.metadata = hash_metadata(out.claims, nonce);
    out.nonce = nonce;
  }

  // One of the assigned slots, uniformly per submission.
  const auto& slot = slots_[uniform_below(rng_, slots_.size())];
  auto& cert = out.packet.certificate;
  cert.validator_id = validator_id_;
  cert.encrypted_token = encrypt_token(identity_.nuc_hash, slot.key);
  cert.key_table_id = slot.key_table_id;
  cert.key_index = slot.key_index;
  cert.deviation = make_report(options.declared_ops, level, options.reported_score);
  cert.record_hash = record_hash(rec);

  out.packet.camera_signature = identity_.secure_element->sign(encode(cert));
  out.packet.device_cert = *device_cert_;
  return out;
}

const ServerSelection& CameraAgent::select_servers(std::span<const RegistryEntry> registry, std::int64_t now) {
  if (!has_selection_ || now - selection_.selected_at >= config_.selection_refresh_seconds) {
    selection_ = choose_servers(registry, rng_);
    selection_.selected_at = now;
    has_selection_ = true;
  }
  return selection_;
}

bool CameraAgent::attempt(QueueEntry& entry, SubmissionTransport& transport, std::int64_t now, std::size_t rotation,
                          std::vector<std::string>& rejected) {
  const auto& servers = selection_.servers;
  if (!entry.delivered.empty() && now - entry.first_delivery > config_.retry.pairing_timeout) {
    entry.delivered.clear();  // the lone approval has expired on the validators
  }
  const std::size_t k = servers.size();
  for (std::size_t step = 0; step < k && entry.delivered.size() < 2; ++step) {
    const auto& target = servers[(rotation + step) % k];
    if (std::find(entry.delivered.begin(), entry.delivered.end(), target) != entry.delivered.end()) continue;
    switch (transport.deliver(target, entry.packet)) {
      case DeliveryStatus::Delivered:
        if (entry.delivered.empty()) entry.first_delivery = now;
        entry.delivered.push_back(target);
        break;
      case DeliveryStatus::Rejected: rejected.push_back(target); return true;
      case DeliveryStatus::Unreachable: break;
    }
  }
  return entry.delivered.size() >= 2;
}

DualReceipt CameraAgent::submit(const CameraPacket& packet, SubmissionTransport& transport, std::int64_t now) {
  DualReceipt receipt;
  QueueEntry entry;
  entry.packet = encode(packet);
  entry.image_hash = packet.record.image_hash;
  entry.enqueued_at = now;
  auto rotation = static_cast<std::size_t>(submission_counter_++);
  bool done = !selection_.servers.empty() && attempt(entry, transport, now, rotation, receipt.rejected);
  receipt.delivered = entry.delivered;
  if (!done) {
    entry.attempts = 1;
    entry.next_retry = now + config_.retry.delay(1, rng_);
    queue_.push(std::move(entry));
    receipt.queued = true;
  }
  return receipt;
}

std::size_t CameraAgent::drain(SubmissionTransport& transport, std::int64_t now) {
  std::size_t completed = 0;
  auto& entries = queue_.entries();
  bool changed = false;
  for (auto it = entries.begin(); it != entries.end();) {
    if (it->next_retry > now || selection_.servers.empty()) {
      ++it;
      continue;
    }
    std::vector<std::string> rejected;
    auto rotation = static_cast<std::size_t>(it->attempts);
    changed = true;
    if (attempt(*it, transport, now, rotation, rejected)) {
      it = entries.erase(it);
      ++completed;
    } else {
      ++it->attempts;
      it->next_retry = now + config_.retry.delay(it->attempts, rng_);
      ++it;
    }
  }
  if (changed) queue_.persist();
  return completed;
}

void CameraAgent::save_identity(const std::filesystem::path& path) const {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : slots_) slots.push_back({{"key_table_id", s.key_table_id}, {"key_index", s.key_index}});
  nlohmann::json doc{{"kind", identity_.kind == SensorKind::PrnuSeeded ? "prnu" : "calibrated"},
                     {"validator_id", validator_id_},
                     {"public_key", public_key().hex()},
                     {"device_cert", device_cert_ ? to_hex(encode(*device_cert_)) : ""},
                     {"slots", slots}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_nonce_sidecar(const std::filesystem::path& path, const Nonce& nonce) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << nonce.hex() << '\n';
}

Nonce read_nonce_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string hex;
  in >> hex;
  return Nonce::from_hex(hex);
}

}  // namespace birthmark
