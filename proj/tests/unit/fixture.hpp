// Small in-process network shared by the role tests: one seeded MA, three
// servers, a four-node consortium and provisioned agents.
#pragma once

#include <map>
#include <memory>
#include <set>

#include "birthmark/camera.hpp"
#include "birthmark/chain.hpp"

namespace fixture {

using namespace birthmark;

inline constexpr std::int64_t kNow = 1767225600;  // 2026-01-01T00:00:00Z

class DirectLink : public AuthorityLink {
 public:
  DirectLink(ManufacturerAuthority& ma, std::string peer) : ma_(ma), peer_(std::move(peer)) {}
  std::optional<ValidationResponse> validate(const ValidationRequest& request) override {
    if (down) return std::nullopt;
    ++calls;
    return decode_validation_response(ma_.handle(encode(request), peer_, *now));
  }
  bool down = false;
  std::size_t calls = 0;
  const std::int64_t* now = nullptr;

 private:
  ManufacturerAuthority& ma_;
  std::string peer_;
};

inline AuthorityConfig small_tables() {
  AuthorityConfig c;
  c.tables = 2;
  c.keys_per_table = 2;
  c.k_min = 1;
  c.k_warn = 1;
  return c;
}

struct Network : SubmissionTransport {
  explicit Network(std::uint64_t seed = 1, AuthorityConfig cfg = small_tables())
      : ma("CANON_001", cfg, seed) {
    const std::pair<const char*, const char*> specs[] = {{"node-eu-1", "eu"}, {"node-us-3", "us"}, {"node-ap-2", "ap"}};
    std::uint64_t s = seed * 100;
    for (auto [id, region] : specs) {
      servers.push_back(std::make_unique<SubmissionServer>(id, region, ++s));
      links.push_back(std::make_unique<DirectLink>(ma, id));
      links.back()->now = &now;
      servers.back()->trust_authority(ma.validator_id(), ma.public_key(), links.back().get());
    }
    for (int i = 0; i < 4; ++i) consortium.add_node("val-" + std::to_string(i));
    consortium.trust_authority(ma.public_key());
    for (auto& sv : servers) consortium.trust_server(sv->id(), sv->public_key());
    publish();
  }

  void publish() {
    std::vector<const SubmissionServer*> list;
    for (auto& sv : servers) list.push_back(sv.get());
    registry.publish(list, now);
  }

  SubmissionServer& server(std::string_view id) {
    for (auto& sv : servers) {
      if (sv->id() == id) return *sv;
    }
    throw Error(Errc::NotFound, "no server");
  }

  CameraAgent make_agent(std::uint64_t salt, AgentConfig cfg = {}) {
    auto identity = calibrated_identity(NucMap::synthetic(8, 6, salt), sha256(as_bytes("agent-" + std::to_string(salt))));
    auto prov = ma.provision_device(identity.nuc_hash, identity.secure_element->public_key());
    if (!cfg.seed) cfg.seed = salt;
    CameraAgent agent(std::move(identity), ma.validator_id(), cfg);
    agent.install(prov);
    agent.select_servers(registry.entries(), now);
    return agent;
  }

  DeliveryStatus deliver(const std::string& server_id, ByteView packet) override {
    if (down.contains(server_id)) return DeliveryStatus::Unreachable;
    auto result = server(server_id).handle_bytes(packet, now);
    if (auto* fwd = std::get_if<ForwardedApproval>(&result)) {
      consortium.deliver(*fwd, now);
      return DeliveryStatus::Delivered;
    }
    rejections.push_back(std::get<SubmissionRejected>(result));
    return DeliveryStatus::Rejected;
  }

  std::size_t settle() {
    std::size_t n = 0;
    while (consortium.queued() > 0) {
      auto before = consortium.queued();
      consortium.finalize_pending();
      n += before - consortium.queued();
      if (consortium.queued() == before) break;
    }
    return n;
  }

  ValidatorNode& node() { return consortium.node(0); }

  std::int64_t now = kNow;
  ManufacturerAuthority ma;
  std::vector<std::unique_ptr<SubmissionServer>> servers;
  std::vector<std::unique_ptr<DirectLink>> links;
  Consortium consortium;
  ServerRegistry registry;
  std::set<std::string> down;
  std::vector<SubmissionRejected> rejections;
};

}  // namespace fixture
