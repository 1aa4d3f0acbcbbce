// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstring>

#include "birthmark/harness.hpp"

namespace birthmark::sim {

std::string_view to_string(Atom a) noexcept {
  switch (a) {
    case Atom::ImageHash: return "image_hash";
    case Atom::NucHash: return "nuc_hash";
    case Atom::DeviceKey: return "device_key";
    case Atom::TableKey: return "table_key";
  }
  return "?";
}

namespace {

std::uint64_t prefix_of(const std::uint8_t* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void TaintLedger::add_atom(Atom kind, ByteView value) {
  if (value.size() < 8) return;
  Bytes v(value.begin(), value.end());
  if (ids_.contains(v)) return;
  auto id = static_cast<std::uint32_t>(atoms_.size());
  ids_.emplace(v, id);
  prefix_.emplace(prefix_of(v.data()), id);
  atoms_.push_back({kind, std::move(v)});
  ++totals_[static_cast<std::size_t>(kind)];
}

void TaintLedger::observe(const std::string& role, ByteView payload) {
  auto& sets = seen_[role];
  if (payload.size() < 8) return;
  for (std::size_t i = 0; i + 8 <= payload.size(); ++i) {
    auto [lo, hi] = prefix_.equal_range(prefix_of(payload.data() + i));
    for (auto it = lo; it != hi; ++it) {
      const auto& atom = atoms_[it->second];
      if (i + atom.value.size() <= payload.size() &&
          std::equal(atom.value.begin(), atom.value.end(), payload.begin() + static_cast<std::ptrdiff_t>(i))) {
        sets[static_cast<std::size_t>(atom.kind)].insert(it->second);
      }
    }
  }
}

std::size_t TaintLedger::count(std::string_view role_prefix, Atom kind) const {
  std::set<std::uint32_t> all;
  for (const auto& [role, sets] : seen_) {
    if (role.starts_with(role_prefix)) {
      const auto& s = sets[static_cast<std::size_t>(kind)];
      all.insert(s.begin(), s.end());
    }
  }
  return all.size();
}

bool TaintLedger::saw(const std::string& role, Atom kind, ByteView value) const {
  auto it = seen_.find(role);
  auto id = ids_.find(Bytes(value.begin(), value.end()));
  if (it == seen_.end() || id == ids_.end()) return false;
  return it->second[static_cast<std::size_t>(kind)].contains(id->second);
}

std::vector<std::string> TaintLedger::roles() const {
  std::vector<std::string> out;
  for (const auto& [role, _] : seen_) out.push_back(role);
  return out;
}

nlohmann::json TaintLedger::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [role, sets] : seen_) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t k = 0; k < kAtomKinds; ++k) r[std::string(to_string(static_cast<Atom>(k)))] = sets[k].size();
    j[role] = r;
  }
  return j;
}

bool Bus::send(const std::string& from, const std::string& to, std::string_view kind, ByteView payload) {
  if (down_.contains(from) || down_.contains(to)) {
    ++dropped_;
    return false;
  }
  ++delivered_;
  taint_.observe(to, payload);
  for (const auto& t : taps_) {
    if (from.starts_with(t) || to.starts_with(t)) {
      tapped_.push_back({from, to, std::string(kind), Bytes(payload.begin(), payload.end())});
      taint_.observe("attacker", payload);
      break;
    }
  }
  return true;
}

void Bus::set_down(const std::string& role, bool down) {
  if (down) {
    down_.insert(role);
  } else {
    down_.erase(role);
  }
}

AuthorityConfig WorldConfig::small_authority() {
  AuthorityConfig c;
  c.tables = 2;
  c.keys_per_table = 2;
  c.k_min = 1;
  c.k_warn = 1;
  c.slots_per_device = 2;
  return c;
}

// Server -> MA over the bus; the bus identity of the sender is what the MA
// treats as the authenticated peer.
class World::MaLink : public AuthorityLink {
 public:
  MaLink(World& world, std::string server_id) : world_(world), server_id_(std::move(server_id)) {}

  std::optional<ValidationResponse> validate(const ValidationRequest& request) override {
    auto bytes = encode(request);
    auto from = world_.server_role(server_id_);
    auto ma = world_.ma_role();
    if (!world_.bus_.send(from, ma, "validation-request", bytes)) return std::nullopt;
    auto reply = world_.ma_->handle(bytes, server_id_, world_.now_);
    if (!world_.bus_.send(ma, from, "validation-response", reply)) return std::nullopt;
    return decode_validation_response(reply);
  }

 private:
  World& world_;
  std::string server_id_;
};

class World::Transport : public SubmissionTransport {
 public:
  explicit Transport(World& world) : world_(world) {}

  DeliveryStatus deliver(const std::string& server_id, ByteView packet) override {
    auto role = world_.server_role(server_id);
    if (!world_.bus_.send("camera", role, "camera-packet", packet)) return DeliveryStatus::Unreachable;
    auto& server = world_.server(server_id);
    auto result = server.handle_bytes(packet, world_.now_);
    world_.results_.emplace_back(server_id, result);
    if (auto* fwd = std::get_if<ForwardedApproval>(&result)) {
      world_.forward(role, *fwd);
      return DeliveryStatus::Delivered;
    }
    const auto& rej = std::get<SubmissionRejected>(result);
    // An unreachable MA is a transient outage from the camera's point of view.
    return rej.reason == ServerRejection::AuthorityUnreachable ? DeliveryStatus::Unreachable
                                                               : DeliveryStatus::Rejected;
  }

 private:
  World& world_;
};

World::World(WorldConfig config)
    : config_(std::move(config)),
      bus_(taint_),
      consortium_(config_.chain),
      now_(config_.start_time) {
  ma_ = std::make_unique<ManufacturerAuthority>(config_.validator_id, config_.authority, mix(config_.seed, 1));
  transport_ = std::make_unique<Transport>(*this);
  for (std::size_t i = 0; i < config_.servers.size(); ++i) {
    const auto& spec = config_.servers[i];
    servers_.push_back(std::make_unique<SubmissionServer>(spec.id, spec.region, mix(config_.seed, 100 + i)));
    links_.push_back(std::make_unique<MaLink>(*this, spec.id));
    servers_.back()->trust_authority(ma_->validator_id(), ma_->public_key(), links_.back().get());
  }
  for (std::size_t i = 0; i < config_.validators; ++i) {
    consortium_.add_node("val-" + std::to_string(i), NodeRole::cold);
  }
  consortium_.trust_authority(ma_->public_key());
  for (const auto& s : servers_) consortium_.trust_server(s->id(), s->public_key());

  // Table keys are atoms so the ledger can show who ever held one.
  for (const auto& [slot, keys] : ma_->compromise().keys) {
    for (const auto& k : keys) taint_.add_atom(Atom::TableKey, k.view());
  }
  for (std::size_t i = 0; i < config_.devices; ++i) add_device();
  if (config_.seal_bootstrap) ma_->seal_bootstrap();
  publish_registry();
}

World::~World() = default;

SubmissionTransport& World::transport() noexcept { return *transport_; }

SubmissionServer& World::server(std::string_view id) {
  for (auto& s : servers_) {
    if (s->id() == id) return *s;
  }
  throw Error(Errc::NotFound, "unknown server " + std::string(id));
}

SensorIdentity World::make_identity(std::uint64_t salt) const {
  Hash256 key_seed = sha256(concat(as_bytes("BM-sim-device-key:"), as_bytes(std::to_string(mix(config_.seed, 1000 + salt)))));
  return calibrated_identity(NucMap::synthetic(8, 8, mix(config_.seed, 5000 + salt)), key_seed);
}

std::size_t World::add_device() { return add_device(make_identity(devices_.size())); }

std::size_t World::add_device(SensorIdentity identity) {
  const std::size_t i = devices_.size();
  Device d;
  d.serial = "SN-" + std::to_string(100000 + i);
  d.nuc_hash = identity.nuc_hash;
  AgentConfig ac;
  ac.owner = "owner-" + std::to_string(i);
  ac.latitude = 40.0 + static_cast<double>(i % 97) * 0.01;
  ac.longitude = -74.0 + static_cast<double>(i % 89) * 0.01;
  ac.seed = mix(config_.seed, 9000 + i);
  d.agent = std::make_unique<CameraAgent>(std::move(identity), config_.validator_id, ac);
  taint_.add_atom(Atom::NucHash, d.nuc_hash.view());
  taint_.add_atom(Atom::DeviceKey, d.agent->public_key().view());
  auto prov = ma_->provision_device(d.nuc_hash, d.agent->public_key());
  d.agent->install(prov);
  d.cert = prov.device_cert;
  d.slots = prov.slots;
  production_.emplace(d.nuc_hash, d.serial);
  devices_.push_back(std::move(d));
  if (!registry_.entries().empty()) devices_.back().agent->select_servers(registry_.entries(), now_);
  return i;
}

PixelImage World::next_image() {
  return random_image(config_.image_size, config_.image_size, mix(config_.seed, 1'000'000 + image_counter_++));
}

std::optional<std::size_t> World::true_device(const Hash256& image_hash) const {
  auto it = image_owner_.find(image_hash);
  if (it == image_owner_.end()) return std::nullopt;
  return it->second;
}

CaptureOutput World::build(std::size_t device, const PixelImage& image, const CaptureOptions& options) {
  auto& d = devices_.at(device);
  auto out = d.agent->capture_and_build(image, options, now_);
  taint_.add_atom(Atom::ImageHash, out.packet.record.image_hash.view());
  image_owner_.emplace(out.packet.record.image_hash, device);
  return out;
}

CaptureRecord World::capture(std::size_t device, const CaptureOptions& options) {
  return capture_image(device, next_image(), options);
}

CaptureRecord World::capture_image(std::size_t device, const PixelImage& image, const CaptureOptions& options) {
  CaptureRecord rec;
  rec.device = device;
  rec.at = now_;
  rec.output = build(device, image, options);
  rec.image_hash = rec.output.packet.record.image_hash;
  auto& agent = *devices_.at(device).agent;
  agent.select_servers(registry_.entries(), now_);
  rec.receipt = agent.submit(rec.output.packet, *transport_, now_);
  captures_.push_back(rec);
  return rec;
}

std::vector<AdmitResult> World::forward(const std::string& from_role, const ForwardedApproval& fwd) {
  auto bytes = encode(fwd);
  std::set<std::size_t> offline;
  for (std::size_t i = 0; i < consortium_.size(); ++i) {
    if (!bus_.send(from_role, validator_role(i), "forwarded-approval", bytes)) offline.insert(i);
  }
  return consortium_.deliver(fwd, now_, offline);
}

std::size_t World::drain_all() {
  std::size_t done = 0;
  for (auto& d : devices_) {
    if (d.agent->queue().empty()) continue;
    d.agent->select_servers(registry_.entries(), now_);
    done += d.agent->drain(*transport_, now_);
  }
  return done;
}

std::set<std::size_t> World::offline_validators() const {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < consortium_.size(); ++i) {
    if (bus_.is_down(validator_role(i))) out.insert(i);
  }
  return out;
}

std::string World::validator_role(std::size_t i) const { return "validator:" + consortium_.node(i).id(); }

const RecordStore& World::chain() const {
  for (std::size_t i = 0; i < consortium_.size(); ++i) {
    if (consortium_.honest(i)) return consortium_.node(i).store();
  }
  throw Error(Errc::NotFound, "no honest validator");
}

std::size_t World::settle() {
  std::size_t before = consortium_.size() ? chain().size() : 0;
  for (std::size_t i = 0; i < consortium_.size(); ++i) consortium_.node(i).expire_pending(now_);
  auto offline = offline_validators();
  for (int round = 0; round < 8 && consortium_.queued() > 0; ++round) {
    auto out = consortium_.finalize_pending(offline);
    bool progress = false;
    for (const auto& a : out.appended) progress = progress || !a.empty();
    if (!progress) break;
  }
  for (std::size_t i = 0; i < consortium_.size(); ++i) {
    if (consortium_.honest(i) && !offline.contains(i)) consortium_.catch_up(i);
  }
  if (consortium_.size() == 0) return 0;
  const auto& store = chain();
  for (auto i = static_cast<std::uint32_t>(observed_); i < store.size(); ++i) {
    bus_.send("chain", "observer", "chain-entry", store.entry_bytes(i));
  }
  observed_ = store.size();
  return store.size() - before;
}

void World::publish_registry() {
  std::vector<const SubmissionServer*> list;
  for (const auto& s : servers_) list.push_back(s.get());
  registry_.publish(list, now_);
}

}  // namespace birthmark::sim
