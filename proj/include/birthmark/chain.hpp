// SPDX-License-Identifier: Apache-2.0
//
// Consortium registry. Validators pair approvals for the same record hash
// from two different servers, vote on candidate records in rounds, and
// append finalized records to a hash-linked, append-only log indexed by
// image hash.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "birthmark/wire.hpp"

namespace birthmark {

struct ChainConfig {
  std::int64_t pairing_timeout = 600;
  std::uint32_t posting_granularity = 600;  // 600, 1200 or 1800
  std::int64_t prune_horizon = 180 * 86400;
};

enum class AdmitStatus : std::uint8_t { Pending, Finalizable, Rejected };
enum class AdmitRejection : std::uint8_t {
  SameServer,
  BadMASig,
  BadServerSig,
  Duplicate,
  BindingMismatch,
  UnknownServer,
  BadTimestamp,
};
std::string_view to_string(AdmitRejection r) noexcept;

struct Candidate {
  BirthmarkRecord record;
  Approval first;
  Approval second;
  std::uint32_t posting_timestamp = 0;

  ChainRecord chain_record() const;
  // Distinguishes candidates that pair different approvals for one record.
  Hash256 id() const;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct AdmitResult {
  AdmitStatus status = AdmitStatus::Pending;
  std::optional<AdmitRejection> reason;
  std::optional<Candidate> candidate;
};

// Public keys a validator trusts, with a memo of signatures already checked.
class TrustStore {
 public:
  void add_authority(const PublicKey& key) { authorities_.push_back(key); }
  void add_server(const std::string& id, const PublicKey& key) { servers_[id] = key; }
  void remove_server(const std::string& id) { servers_.erase(id); }
  bool knows_server(const std::string& id) const { return servers_.contains(id); }

  std::optional<AdmitRejection> check(const Approval& approval);

 private:
  bool verify_cached(ByteView message, const Signature64& sig, const PublicKey& key);
  std::vector<PublicKey> authorities_;
  std::map<std::string, PublicKey> servers_;
  std::unordered_set<Hash256> verified_;
};

// First approvals waiting for a partner from a different server.
class PendingPairStore {
 public:
  struct Entry {
    BirthmarkRecord record;
    Approval approval;
    std::int64_t arrival = 0;
  };

  explicit PendingPairStore(std::int64_t timeout) : timeout_(timeout) {}

  // Returns a partner from a different server if one is waiting, otherwise
  // stores the approval. Sets same_server when the only waiting approvals
  // come from the same server id.
  std::optional<Entry> pair(const BirthmarkRecord& record, const Approval& approval, std::int64_t now,
                            bool& same_server);
  void remove(const Hash256& record_hash) { pending_.erase(record_hash); }
  void expire(std::int64_t now);
  std::size_t size() const noexcept { return pending_.size(); }

 private:
  std::int64_t timeout_;
  std::unordered_map<Hash256, std::vector<Entry>> pending_;
};

enum class LookupStatus : std::uint8_t { Found, NotFound, PrunedSeeColdNode };
std::string_view to_string(LookupStatus s) noexcept;

struct LookupResult {
  LookupStatus status = LookupStatus::NotFound;
  std::optional<ChainRecord> record;
  std::optional<std::uint32_t> chain_index;
};

// Append-only log of envelope || payload entries. Optionally backed by a
// directory holding "records.log" (the raw entries) and "records.idx"
// (image_hash[32] || log offset u64 per entry), both append-only.
class RecordStore {
 public:
  RecordStore() = default;
  static RecordStore open(const std::filesystem::path& dir);

  // Throws Error(InvalidValue) if the image hash is already present.
  std::uint32_t append(const ChainRecord& record);
  LookupResult lookup(const Hash256& image_hash) const;
  bool contains(const Hash256& image_hash) const { return index_.contains(image_hash); }

  std::size_t size() const noexcept { return meta_.size(); }
  std::size_t retained() const noexcept { return size() - pruned_; }
  std::uint64_t log_bytes() const noexcept { return log_.size(); }
  const Hash256& head() const noexcept { return head_; }

  // Drops payloads with posting_timestamp < cutoff, keeping index stubs.
  std::size_t prune_before(std::uint32_t cutoff_posting_timestamp);
  // Recomputes every link from the retained entries.
  bool verify_links() const;

  // Raw envelope || payload of entry i; empty when pruned.
  ByteView entry_bytes(std::uint32_t i) const;
  std::optional<ChainRecord> record_at(std::uint32_t i) const;
  std::uint32_t posting_timestamp_at(std::uint32_t i) const { return meta_.at(i).posting_timestamp; }

 private:
  struct Meta {
    std::uint64_t offset = 0;  // kPruned once dropped
    std::uint32_t posting_timestamp = 0;
    std::uint16_t length = 0;
  };
  static constexpr std::uint64_t kPruned = ~std::uint64_t{0};

  void index_entry(const Hash256& image_hash, std::uint32_t i);

  Bytes log_;
  std::vector<Meta> meta_;
  std::vector<Hash256> links_;
  std::unordered_map<Hash256, std::uint32_t> index_;
  Hash256 head_{};
  std::size_t pruned_ = 0;
  std::optional<std::filesystem::path> dir_;
};

enum class NodeRole : std::uint8_t { hot, cold };

class ValidatorNode {
 public:
  ValidatorNode(std::string id, NodeRole role, ChainConfig config = {});

  const std::string& id() const noexcept { return id_; }
  NodeRole role() const noexcept { return role_; }
  TrustStore& trust() noexcept { return trust_; }
  RecordStore& store() noexcept { return store_; }
  const RecordStore& store() const noexcept { return store_; }
  // Replaces the in-memory store with one persisted under dir.
  void open_store(const std::filesystem::path& dir) { store_ = RecordStore::open(dir); }

  AdmitResult admit(const BirthmarkRecord& record, const Approval& approval, std::int64_t now);
  AdmitResult admit_bytes(ByteView forwarded, std::int64_t now);

  // Full admission check of a proposed candidate against local state.
  std::optional<AdmitRejection> check(const Candidate& candidate);
  void append(const Candidate& candidate);

  LookupResult lookup(const Hash256& image_hash) const { return store_.lookup(image_hash); }
  // Root-to-leaf list. Throws Error(BrokenChain) or Error(CorruptChain).
  std::vector<ChainRecord> custody_chain(const Hash256& image_hash) const;

  // Hot nodes only; cold nodes never prune.
  std::size_t prune(std::int64_t now);
  void expire_pending(std::int64_t now) { pending_.expire(now); }

 private:
  std::string id_;
  NodeRole role_;
  ChainConfig config_;
  TrustStore trust_;
  PendingPairStore pending_;
  RecordStore store_;
};

// One voting round. Delivery orders are per node (indices into the
// candidate list); malicious nodes send the listed votes to the listed
// recipients and nothing else.
struct RoundPlan {
  std::map<std::size_t, std::vector<std::size_t>> delivery_order;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> byzantine_votes;
  std::set<std::size_t> offline;
};

struct RoundOutcome {
  std::vector<std::vector<std::size_t>> appended;  // per node, candidate indices
  std::vector<std::size_t> stalled;                // valid candidates that missed quorum
  // An invalid candidate gathered quorum at some honest node.
  bool invalid_certified = false;
  // Two candidates for one image hash both gathered quorum.
  bool conflicting_certified = false;
};

class Consortium {
 public:
  explicit Consortium(ChainConfig config = {}) : config_(config) {}

  std::size_t add_node(const std::string& id, NodeRole role = NodeRole::cold, bool honest = true);
  void remove_node(const std::string& id);
  std::size_t size() const noexcept { return nodes_.size(); }
  ValidatorNode& node(std::size_t i) { return *nodes_.at(i).node; }
  const ValidatorNode& node(std::size_t i) const { return *nodes_.at(i).node; }
  bool honest(std::size_t i) const { return nodes_.at(i).honest; }
  void set_honest(std::size_t i, bool honest) { nodes_.at(i).honest = honest; }

  // ceil(0.67 * n)
  std::size_t quorum() const noexcept { return (67 * nodes_.size() + 99) / 100; }

  void trust_authority(const PublicKey& key);
  void trust_server(const std::string& id, const PublicKey& key);

  // Broadcast to every node; finalizable pairings join the next round.
  std::vector<AdmitResult> deliver(const ForwardedApproval& fwd, std::int64_t now,
                                   const std::set<std::size_t>& offline = {});

  RoundOutcome finalize_round(const std::vector<Candidate>& candidates, const RoundPlan& plan = {});
  // Runs a round over the candidates gathered by deliver(); stalled ones stay queued.
  RoundOutcome finalize_pending(const std::set<std::size_t>& offline = {});
  std::size_t queued() const noexcept { return queued_.size(); }

  // Copies records an honest node is missing from the longest honest store.
  void catch_up(std::size_t i);
  bool honest_stores_identical() const;

 private:
  struct Member {
    std::unique_ptr<ValidatorNode> node;
    bool honest = true;
  };
  ChainConfig config_;
  std::vector<Member> nodes_;
  std::vector<Candidate> queued_;
  std::unordered_set<Hash256> queued_ids_;
};

// Bytes per year for a given daily volume.
double storage_projection_bytes(double records_per_day, double bytes_per_record = 153.0, double days = 365.0);

// Records per posting bin.
std::map<std::uint32_t, std::size_t> posting_histogram(const RecordStore& store);

}  // namespace birthmark
