// SPDX-License-Identifier: Apache-2.0
#include "birthmark/chain.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

namespace birthmark {

std::string_view to_string(AdmitRejection r) noexcept {
  switch (r) {
    case AdmitRejection::SameServer: return "SameServer";
    case AdmitRejection::BadMASig: return "BadMASig";
    case AdmitRejection::BadServerSig: return "BadServerSig";
    case AdmitRejection::Duplicate: return "Duplicate";
    case AdmitRejection::BindingMismatch: return "BindingMismatch";
    case AdmitRejection::UnknownServer: return "UnknownServer";
    case AdmitRejection::BadTimestamp: return "BadTimestamp";
  }
  return "?";
}

std::string_view to_string(LookupStatus s) noexcept {
  switch (s) {
    case LookupStatus::Found: return "Found";
    case LookupStatus::NotFound: return "NotFound";
    case LookupStatus::PrunedSeeColdNode: return "PrunedSeeColdNode";
  }
  return "?";
}

ChainRecord Candidate::chain_record() const {
  return {record, join_server_ids(first.server_id, second.server_id), posting_timestamp};
}

Hash256 Candidate::id() const {
  Sha256 h;
  h.update(encode(chain_record()));
  std::array<Approval, 2> both{first, second};
  h.update(encode_bundle(both));
  return h.finish();
}

bool TrustStore::verify_cached(ByteView message, const Signature64& sig, const PublicKey& key) {
  Sha256 h;
  h.update(message);
  h.update(sig.view());
  h.update(key.view());
  auto memo = h.finish();
  if (verified_.contains(memo)) return true;
  if (!verify(message, sig, key)) return false;
  verified_.insert(memo);
  return true;
}

std::optional<AdmitRejection> TrustStore::check(const Approval& approval) {
  auto server = servers_.find(approval.server_id);
  if (server == servers_.end()) return AdmitRejection::UnknownServer;
  auto ma_msg = ma_approval_message(approval.record_hash, approval.server_id);
  bool ma_ok = std::any_of(authorities_.begin(), authorities_.end(), [&](const PublicKey& k) {
    return verify_cached(ma_msg, approval.ma_signature, k);
  });
  if (!ma_ok) return AdmitRejection::BadMASig;
  if (!verify_cached(approval.record_hash.view(), approval.server_signature, server->second)) {
    return AdmitRejection::BadServerSig;
  }
  return std::nullopt;
}

std::optional<PendingPairStore::Entry> PendingPairStore::pair(const BirthmarkRecord& record, const Approval& approval,
                                                              std::int64_t now, bool& same_server) {
  same_server = false;
  auto& waiting = pending_[approval.record_hash];
  std::erase_if(waiting, [&](const Entry& e) { return now - e.arrival > timeout_; });
  for (auto it = waiting.begin(); it != waiting.end(); ++it) {
    if (it->approval.server_id != approval.server_id) {
      Entry partner = *it;
      pending_.erase(approval.record_hash);
      return partner;
    }
  }
  if (!waiting.empty()) {
    same_server = true;
    return std::nullopt;
  }
  waiting.push_back({record, approval, now});
  return std::nullopt;
}

void PendingPairStore::expire(std::int64_t now) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    std::erase_if(it->second, [&](const Entry& e) { return now - e.arrival > timeout_; });
    it = it->second.empty() ? pending_.erase(it) : std::next(it);
  }
}

namespace {

const std::filesystem::path kLogName = "records.log";
const std::filesystem::path kIndexName = "records.idx";
constexpr std::size_t kIndexEntry = 40;

Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void append_file(const std::filesystem::path& p, ByteView bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::Io, "cannot append to " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "write failed on " + p.string());
}

Bytes index_entry_bytes(const Hash256& image_hash, std::uint64_t offset) {
  ByteWriter w;
  w.fixed(image_hash);
  w.u64(offset);
  return w.take();
}

}  // namespace

void RecordStore::index_entry(const Hash256& image_hash, std::uint32_t i) {
  if (!index_.emplace(image_hash, i).second) {
    throw Error(Errc::InvalidValue, "image hash already recorded: " + image_hash.hex());
  }
}

std::uint32_t RecordStore::append(const ChainRecord& record) {
  if (contains(record.record.image_hash)) {
    throw Error(Errc::InvalidValue, "image hash already recorded: " + record.record.image_hash.hex());
  }
  auto payload = encode(record);
  Envelope env;
  env.payload_length = static_cast<std::uint16_t>(payload.size());
  env.chain_index = static_cast<std::uint32_t>(meta_.size());
  env.prev_link = head_;
  auto env_bytes = encode(env);

  Meta m{log_.size(), record.posting_timestamp, static_cast<std::uint16_t>(env_bytes.size() + payload.size())};
  if (dir_) {
    Bytes entry = concat(env_bytes, payload);
    append_file(*dir_ / kLogName, entry);
    append_file(*dir_ / kIndexName, index_entry_bytes(record.record.image_hash, m.offset));
  }
  log_.insert(log_.end(), env_bytes.begin(), env_bytes.end());
  log_.insert(log_.end(), payload.begin(), payload.end());
  head_ = entry_link(env_bytes, payload);
  index_entry(record.record.image_hash, env.chain_index);
  meta_.push_back(m);
  links_.push_back(head_);
  return env.chain_index;
}

RecordStore RecordStore::open(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RecordStore store;
  auto log = read_file(dir / kLogName);
  auto idx = read_file(dir / kIndexName);
  std::size_t pos = 0;
  while (pos < log.size()) {
    if (log.size() - pos < Envelope::kSize) throw Error(Errc::CorruptChain, "truncated envelope in record log");
    ByteView env_bytes(log.data() + pos, Envelope::kSize);
    auto env = decode_envelope(env_bytes);
    if (log.size() - pos - Envelope::kSize < env.payload_length) {
      throw Error(Errc::CorruptChain, "truncated payload in record log");
    }
    ByteView payload(log.data() + pos + Envelope::kSize, env.payload_length);
    if (env.chain_index != store.meta_.size() || env.prev_link != store.head_) {
      throw Error(Errc::CorruptChain, "record log link mismatch at entry " + std::to_string(store.meta_.size()));
    }
    auto rec = decode_chain_record(payload);
    auto i = static_cast<std::uint32_t>(store.meta_.size());
    store.index_entry(rec.record.image_hash, i);
    store.meta_.push_back({pos, rec.posting_timestamp, static_cast<std::uint16_t>(Envelope::kSize + payload.size())});
    store.head_ = entry_link(env_bytes, payload);
    store.links_.push_back(store.head_);
    if (idx.size() >= (i + 1) * kIndexEntry) {
      auto expect = index_entry_bytes(rec.record.image_hash, pos);
      if (!std::equal(expect.begin(), expect.end(), idx.begin() + static_cast<std::ptrdiff_t>(i * kIndexEntry))) {
        throw Error(Errc::CorruptChain, "index sidecar disagrees with record log at entry " + std::to_string(i));
      }
    }
    pos += Envelope::kSize + payload.size();
  }
  store.log_ = std::move(log);
  if (idx.size() != store.meta_.size() * kIndexEntry) {
    // Rebuild a sidecar left short by an interrupted append.
    Bytes rebuilt;
    for (std::uint32_t i = 0; i < store.meta_.size(); ++i) {
      auto rec = store.record_at(i);
      auto e = index_entry_bytes(rec->record.image_hash, store.meta_[i].offset);
      rebuilt.insert(rebuilt.end(), e.begin(), e.end());
    }
    std::ofstream out(dir / kIndexName, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(rebuilt.data()), static_cast<std::streamsize>(rebuilt.size()));
  }
  store.dir_ = dir;
  return store;
}

ByteView RecordStore::entry_bytes(std::uint32_t i) const {
  const auto& m = meta_.at(i);
  if (m.offset == kPruned) return {};
  return {log_.data() + m.offset, m.length};
}

std::optional<ChainRecord> RecordStore::record_at(std::uint32_t i) const {
  auto bytes = entry_bytes(i);
  if (bytes.empty()) return std::nullopt;
  return decode_chain_record(bytes.subspan(Envelope::kSize));
}

LookupResult RecordStore::lookup(const Hash256& image_hash) const {
  auto it = index_.find(image_hash);
  if (it == index_.end()) return {LookupStatus::NotFound, std::nullopt, std::nullopt};
  auto rec = record_at(it->second);
  if (!rec) return {LookupStatus::PrunedSeeColdNode, std::nullopt, it->second};
  return {LookupStatus::Found, std::move(rec), it->second};
}

std::size_t RecordStore::prune_before(std::uint32_t cutoff) {
  std::size_t dropped = 0;
  Bytes kept;
  kept.reserve(log_.size());
  for (auto& m : meta_) {
    if (m.offset == kPruned) continue;
    if (m.posting_timestamp < cutoff) {
      m.offset = kPruned;
      ++dropped;
      continue;
    }
    auto start = log_.begin() + static_cast<std::ptrdiff_t>(m.offset);
    m.offset = kept.size();
    kept.insert(kept.end(), start, start + m.length);
  }
  if (dropped) {
    log_ = std::move(kept);
    pruned_ += dropped;
  }
  return dropped;
}

bool RecordStore::verify_links() const {
  Hash256 prev{};
  for (std::uint32_t i = 0; i < meta_.size(); ++i) {
    auto bytes = entry_bytes(i);
    if (!bytes.empty()) {
      auto env = decode_envelope(bytes.first(Envelope::kSize));
      if (env.chain_index != i || env.prev_link != prev) return false;
      if (entry_link(bytes.first(Envelope::kSize), bytes.subspan(Envelope::kSize)) != links_[i]) return false;
    }
    prev = links_[i];
  }
  return meta_.empty() || prev == head_;
}

ValidatorNode::ValidatorNode(std::string id, NodeRole role, ChainConfig config)
    : id_(std::move(id)), role_(role), config_(config), pending_(config.pairing_timeout) {}

AdmitResult ValidatorNode::admit(const BirthmarkRecord& record, const Approval& approval, std::int64_t now) {
  auto reject = [](AdmitRejection r) { return AdmitResult{AdmitStatus::Rejected, r, std::nullopt}; };
  if (record_hash(record) != approval.record_hash) return reject(AdmitRejection::BindingMismatch);
  if (auto bad = trust_.check(approval)) return reject(*bad);
  if (store_.contains(record.image_hash)) return reject(AdmitRejection::Duplicate);

  bool same_server = false;
  auto partner = pending_.pair(record, approval, now, same_server);
  if (same_server) return reject(AdmitRejection::SameServer);
  if (!partner) return {AdmitStatus::Pending, std::nullopt, std::nullopt};

  Candidate c{record, partner->approval, approval, posting_timestamp(now, config_.posting_granularity)};
  if (c.second.server_id < c.first.server_id) std::swap(c.first, c.second);
  return {AdmitStatus::Finalizable, std::nullopt, std::move(c)};
}

AdmitResult ValidatorNode::admit_bytes(ByteView forwarded, std::int64_t now) {
  auto fwd = decode_forwarded(forwarded);
  return admit(fwd.record, fwd.approval, now);
}

std::optional<AdmitRejection> ValidatorNode::check(const Candidate& c) {
  if (c.first.server_id == c.second.server_id) return AdmitRejection::SameServer;
  auto rh = record_hash(c.record);
  if (c.first.record_hash != rh || c.second.record_hash != rh) return AdmitRejection::BindingMismatch;
  if (c.posting_timestamp % (config_.posting_granularity / kPostingEpoch) != 0) return AdmitRejection::BadTimestamp;
  if (auto bad = trust_.check(c.first)) return bad;
  if (auto bad = trust_.check(c.second)) return bad;
  if (store_.contains(c.record.image_hash)) return AdmitRejection::Duplicate;
  return std::nullopt;
}

void ValidatorNode::append(const Candidate& c) {
  store_.append(c.chain_record());
  pending_.remove(record_hash(c.record));
}

std::vector<ChainRecord> ValidatorNode::custody_chain(const Hash256& image_hash) const {
  std::vector<ChainRecord> out;
  std::unordered_set<Hash256> seen;
  Hash256 cur = image_hash;
  for (;;) {
    if (!seen.insert(cur).second) throw Error(Errc::CorruptChain, "custody cycle at " + cur.hex());
    auto found = store_.lookup(cur);
    if (found.status == LookupStatus::PrunedSeeColdNode) {
      throw Error(Errc::NotFound, "record pruned on this node; query a cold node: " + cur.hex());
    }
    if (found.status == LookupStatus::NotFound) {
      if (out.empty()) throw Error(Errc::NotFound, "no record for " + cur.hex());
      throw Error(Errc::BrokenChain, "parent not registered: " + cur.hex());
    }
    out.push_back(*found.record);
    const auto& parent = found.record->record.parent_image_hash;
    if (!parent) break;
    cur = *parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t ValidatorNode::prune(std::int64_t now) {
  if (role_ != NodeRole::hot || now < config_.prune_horizon) return 0;
  return store_.prune_before(posting_timestamp(now - config_.prune_horizon));
}

std::size_t Consortium::add_node(const std::string& id, NodeRole role, bool honest) {
  nodes_.push_back({std::make_unique<ValidatorNode>(id, role, config_), honest});
  return nodes_.size() - 1;
}

void Consortium::remove_node(const std::string& id) {
  std::erase_if(nodes_, [&](const Member& m) { return m.node->id() == id; });
}

void Consortium::trust_authority(const PublicKey& key) {
  for (auto& m : nodes_) m.node->trust().add_authority(key);
}

void Consortium::trust_server(const std::string& id, const PublicKey& key) {
  for (auto& m : nodes_) m.node->trust().add_server(id, key);
}

std::vector<AdmitResult> Consortium::deliver(const ForwardedApproval& fwd, std::int64_t now,
                                             const std::set<std::size_t>& offline) {
  std::vector<AdmitResult> out(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (offline.contains(i)) continue;
    out[i] = nodes_[i].node->admit(fwd.record, fwd.approval, now);
    if (out[i].status == AdmitStatus::Finalizable && nodes_[i].honest) {
      auto id = out[i].candidate->id();
      if (queued_ids_.insert(id).second) queued_.push_back(*out[i].candidate);
    }
  }
  return out;
}

RoundOutcome Consortium::finalize_round(const std::vector<Candidate>& candidates, const RoundPlan& plan) {
  const std::size_t n = nodes_.size();
  const std::size_t m = candidates.size();
  const std::size_t q = quorum();
  RoundOutcome out;
  out.appended.resize(n);

  auto online_honest = [&](std::size_t i) { return nodes_[i].honest && !plan.offline.contains(i); };

  // Honest votes: at most one candidate per image hash, in delivery order.
  std::vector<std::size_t> honest_votes(m, 0);
  std::vector<char> ever_valid(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!online_honest(i)) continue;
    std::vector<std::size_t> order;
    if (auto it = plan.delivery_order.find(i); it != plan.delivery_order.end()) {
      order = it->second;
    } else {
      order.resize(m);
      std::iota(order.begin(), order.end(), 0);
    }
    std::unordered_set<Hash256> voted;
    for (auto c : order) {
      if (c >= m || voted.contains(candidates[c].record.image_hash)) continue;
      if (nodes_[i].node->check(candidates[c])) continue;
      ever_valid[c] = 1;
      voted.insert(candidates[c].record.image_hash);
      ++honest_votes[c];
    }
  }

  // Deterministic commit order shared by all honest nodes.
  std::vector<std::size_t> commit(m);
  std::iota(commit.begin(), commit.end(), 0);
  std::vector<Hash256> ids(m);
  for (std::size_t c = 0; c < m; ++c) ids[c] = candidates[c].id();
  std::sort(commit.begin(), commit.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = candidates[a];
    const auto& cb = candidates[b];
    return std::tie(ca.posting_timestamp, ca.record.image_hash, ca.first.server_id, ca.second.server_id, ids[a]) <
           std::tie(cb.posting_timestamp, cb.record.image_hash, cb.first.server_id, cb.second.server_id, ids[b]);
  });

  // Quorum seen locally by each honest node, counting the targeted
  // Byzantine votes that node received.
  std::vector<std::vector<char>> local(n, std::vector<char>(m, 0));
  std::vector<char> certified(m, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!online_honest(j)) continue;
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t votes = honest_votes[c];
      for (std::size_t mal = 0; mal < n; ++mal) {
        if (nodes_[mal].honest) continue;
        auto it = plan.byzantine_votes.find({mal, j});
        if (it != plan.byzantine_votes.end() && std::find(it->second.begin(), it->second.end(), c) != it->second.end()) {
          ++votes;
        }
      }
      if (votes >= q) local[j][c] = certified[c] = 1;
    }
  }

  // Certificates are gossiped, so every honest node learns every certified
  // candidate. Where two certified candidates conflict, a node keeps the one
  // it certified itself; that is the only way honest stores can diverge.
  std::vector<char> appended_anywhere(m, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!online_honest(j)) continue;
    std::unordered_set<Hash256> own;
    for (auto c : commit) {
      if (local[j][c]) own.insert(candidates[c].record.image_hash);
    }
    for (auto c : commit) {
      if (!certified[c] || (!local[j][c] && own.contains(candidates[c].record.image_hash))) continue;
      auto bad = nodes_[j].node->check(candidates[c]);
      if (!bad) {
        nodes_[j].node->append(candidates[c]);
        out.appended[j].push_back(c);
        appended_anywhere[c] = 1;
      } else if (*bad != AdmitRejection::Duplicate) {
        out.invalid_certified = true;
      }
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m && certified[a]; ++b) {
      if (certified[b] && candidates[a].record.image_hash == candidates[b].record.image_hash) {
        out.conflicting_certified = true;
      }
    }
  }

  for (std::size_t c = 0; c < m; ++c) {
    if (appended_anywhere[c] || !ever_valid[c]) continue;
    bool image_done = false;
    for (std::size_t j = 0; j < n && !image_done; ++j) {
      image_done = online_honest(j) && nodes_[j].node->store().contains(candidates[c].record.image_hash);
    }
    if (!image_done) out.stalled.push_back(c);
  }
  return out;
}

RoundOutcome Consortium::finalize_pending(const std::set<std::size_t>& offline) {
  RoundPlan plan;
  plan.offline = offline;
  auto batch = std::move(queued_);
  queued_.clear();
  queued_ids_.clear();
  auto out = finalize_round(batch, plan);
  for (auto c : out.stalled) {
    if (queued_ids_.insert(batch[c].id()).second) queued_.push_back(batch[c]);
  }
  return out;
}

void Consortium::catch_up(std::size_t i) {
  auto& target = nodes_.at(i).node->store();
  const RecordStore* best = nullptr;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (j == i || !nodes_[j].honest) continue;
    const auto& s = nodes_[j].node->store();
    bool usable = s.size() > target.size() && s.retained() == s.size();
    if (usable && (!best || s.size() > best->size())) best = &s;
  }
  if (!best) return;
  if (target.size() > 0) {
    auto last = static_cast<std::uint32_t>(target.size() - 1);
    auto mine = target.entry_bytes(last);
    auto theirs = best->entry_bytes(last);
    if (!std::equal(mine.begin(), mine.end(), theirs.begin(), theirs.end())) return;
  }
  for (auto k = static_cast<std::uint32_t>(target.size()); k < best->size(); ++k) target.append(*best->record_at(k));
}

bool Consortium::honest_stores_identical() const {
  const RecordStore* ref = nullptr;
  for (const auto& m : nodes_) {
    if (!m.honest) continue;
    const auto& s = m.node->store();
    if (!ref) {
      ref = &s;
    } else if (s.size() != ref->size() || s.head() != ref->head()) {
      return false;
    }
  }
  return true;
}

double storage_projection_bytes(double records_per_day, double bytes_per_record, double days) {
  return records_per_day * bytes_per_record * days;
}

std::map<std::uint32_t, std::size_t> posting_histogram(const RecordStore& store) {
  std::map<std::uint32_t, std::size_t> bins;
  for (std::uint32_t i = 0; i < store.size(); ++i) ++bins[store.posting_timestamp_at(i)];
  return bins;
}

}  // namespace birthmark
