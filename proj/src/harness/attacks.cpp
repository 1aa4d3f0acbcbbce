// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "birthmark/harness.hpp"

namespace birthmark::sim {

std::string CompromiseSet::label() const {
  std::vector<std::string> parts;
  if (ma) parts.emplace_back("MA");
  if (servers) parts.emplace_back("server-logs");
  if (production) parts.emplace_back("production");
  if (parts.empty()) return "none";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

LinkageResult correlation_attack(const World& world, const CompromiseSet& stores, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LinkageResult out;
  out.stores = stores;
  const std::size_t n = world.device_count();
  out.population = static_cast<double>(n);

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::size_t>> members;
  std::unordered_map<std::string, std::size_t> by_serial;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : world.device(i).slots) members[{s.key_table_id, s.key_index}].push_back(i);
    by_serial.emplace(world.device(i).serial, i);
  }
  double slot_sum = 0;
  for (const auto& [_, m] : members) slot_sum += static_cast<double>(m.size());
  out.k = members.empty() ? 0 : slot_sum / static_cast<double>(members.size());

  std::unordered_map<Hash256, const ServerLogEntry*> server_log;
  if (stores.servers) {
    for (std::size_t s = 0; s < world.server_count(); ++s) {
      for (const auto& e : world.server(s).log()) server_log.emplace(e.image_hash, &e);
    }
  }
  AuthoritySnapshot snap;
  if (stores.ma) snap = world.ma().compromise();

  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);

  const auto& chain = world.chain();
  double posterior_sum = 0;
  for (std::uint32_t i = 0; i < chain.size(); ++i) {
    auto rec = chain.record_at(i);
    if (!rec) continue;
    auto truth = world.true_device(rec->record.image_hash);
    if (!truth) continue;

    const ServerLogEntry* entry = nullptr;
    if (auto it = server_log.find(rec->record.image_hash); it != server_log.end()) entry = it->second;

    std::optional<std::size_t> determined;
    if (entry && stores.ma) {
      std::optional<Hash256> nuc;
      if (auto it = snap.keys.find({entry->key_table_id, entry->key_index}); it != snap.keys.end()) {
        for (const auto& key : it->second) {
          try {
            nuc = decrypt_token(entry->encrypted_token, key);
            break;
          } catch (const Error&) {
          }
        }
      }
      if (nuc && stores.production) {
        auto serial = world.production_records().find(*nuc);
        if (serial != world.production_records().end()) determined = by_serial.at(serial->second);
      }
    }

    std::size_t guess;
    if (determined) {
      guess = *determined;
      posterior_sum += 1.0;
    } else {
      const std::vector<std::size_t>* candidates = &everyone;
      if (entry) {
        auto it = members.find({entry->key_table_id, entry->key_index});
        if (it != members.end()) candidates = &it->second;
      }
      guess = (*candidates)[uniform_below(rng, candidates->size())];
      bool contains = std::find(candidates->begin(), candidates->end(), *truth) != candidates->end();
      posterior_sum += contains ? 1.0 / static_cast<double>(candidates->size()) : 0.0;
    }
    ++out.trials;
    if (guess == *truth) ++out.correct;
  }
  if (out.trials) {
    out.linkage = static_cast<double>(out.correct) / static_cast<double>(out.trials);
    out.expected = posterior_sum / static_cast<double>(out.trials);
  }
  if (out.k > 0 && out.trials) {
    double p = 1.0 / out.k;
    out.bound = p + 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(out.trials));
  }
  out.within_bound = out.linkage <= out.bound;
  return out;
}

TimingReport timing_anonymity(const RecordStore& store, std::size_t min_records) {
  TimingReport out;
  for (std::uint32_t i = 0; i < store.size(); ++i) {
    auto ts = store.posting_timestamp_at(i);
    ++out.histogram[ts];
    if ((static_cast<std::int64_t>(ts) * kPostingEpoch) % kPostingEpoch != 0) ++out.misaligned;
  }
  for (const auto& [bin, count] : out.histogram) {
    if (count < min_records) {
      out.low_bins.push_back(bin);
      out.warnings.push_back("posting bin " + std::to_string(static_cast<std::int64_t>(bin) * kPostingEpoch) +
                             " holds " + std::to_string(count) + " records (< " + std::to_string(min_records) +
                             "); anonymity set is small");
    }
  }
  return out;
}

namespace {

Candidate make_candidate(const BirthmarkRecord& record, Approval a, Approval b, std::uint32_t ts) {
  if (b.server_id < a.server_id) std::swap(a, b);
  return {record, std::move(a), std::move(b), ts};
}

struct ApprovalPool {
  std::vector<Candidate> candidates;
  std::vector<std::size_t> family_x;  // servers 0+1
  std::vector<std::size_t> family_y;  // servers 0+2
  std::vector<std::size_t> invalid;
  std::vector<Hash256> forged_hashes;
  PublicKey ma_key;
  std::vector<std::pair<std::string, PublicKey>> servers;
};

ApprovalPool build_pool(std::uint64_t seed, std::size_t records) {
  WorldConfig cfg;
  cfg.seed = seed;
  cfg.devices = records;
  cfg.validators = 0;
  cfg.servers = {{"node-eu-1", "eu"}, {"node-us-3", "us"}, {"node-ap-2", "ap"}};
  World w(cfg);
  ApprovalPool pool;
  pool.ma_key = w.ma().public_key();
  for (std::size_t s = 0; s < w.server_count(); ++s) pool.servers.emplace_back(w.server(s).id(), w.server(s).public_key());
  const auto ts = posting_timestamp(w.now());

  for (std::size_t r = 0; r < records; ++r) {
    auto out = w.build(r, w.next_image());
    std::vector<Approval> approvals;
    for (std::size_t s = 0; s < 3; ++s) {
      auto result = w.server(s).handle_submission(out.packet, w.now());
      approvals.push_back(std::get<ForwardedApproval>(result).approval);
    }
    const auto& rec = out.packet.record;
    pool.family_x.push_back(pool.candidates.size());
    pool.candidates.push_back(make_candidate(rec, approvals[0], approvals[1], ts));
    pool.family_y.push_back(pool.candidates.size());
    pool.candidates.push_back(make_candidate(rec, approvals[0], approvals[2], ts));
    pool.candidates.push_back(make_candidate(rec, approvals[1], approvals[2], ts));
  }
  // Records no MA ever approved: the MA signature is made with a server key.
  for (std::size_t r = 0; r < 2; ++r) {
    BirthmarkRecord fake;
    fake.image_hash = image_hash(random_image(8, 8, seed ^ (0xfa4e0000ULL + r)));
    auto rh = record_hash(fake);
    std::vector<Approval> approvals;
    for (std::size_t s = 0; s < 2; ++s) {
      auto& server = w.server(s);
      Approval a;
      a.server_id = server.id();
      a.record_hash = rh;
      a.ma_signature = server.sign_record_hash(sha256(ma_approval_message(rh, server.id())));
      a.server_signature = server.sign_record_hash(rh);
      approvals.push_back(a);
    }
    pool.invalid.push_back(pool.candidates.size());
    pool.candidates.push_back(make_candidate(fake, approvals[0], approvals[1], ts));
    pool.forged_hashes.push_back(fake.image_hash);
  }
  return pool;
}

std::vector<std::size_t> shuffled(std::size_t m, std::mt19937_64& rng) {
  std::vector<std::size_t> v(m);
  std::iota(v.begin(), v.end(), 0);
  for (std::size_t i = m; i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
  return v;
}

}  // namespace

std::vector<SweepCell> byzantine_sweep(std::span<const std::size_t> sizes, std::size_t runs, std::uint64_t seed) {
  auto pool = build_pool(seed, 4);
  const auto& cands = pool.candidates;
  const std::size_t m = cands.size();
  std::vector<SweepCell> cells;

  for (auto n : sizes) {
    Consortium cons;
    for (std::size_t i = 0; i < n; ++i) cons.add_node("val-" + std::to_string(i));
    cons.trust_authority(pool.ma_key);
    for (const auto& [id, key] : pool.servers) cons.trust_server(id, key);

    const std::size_t t = (n - 1) / 3;
    for (std::size_t f = 0; f <= t + 1; ++f) {
      SweepCell cell;
      cell.n = n;
      cell.f = f;
      for (std::size_t run = 0; run < runs; ++run) {
        std::mt19937_64 rng(seed ^ (n * 1'000'003ULL + f * 10'007ULL + run * 101ULL + 17));
        auto order = shuffled(n, rng);
        std::set<std::size_t> malicious(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(f));
        for (std::size_t i = 0; i < n; ++i) {
          cons.node(i).store() = RecordStore{};
          cons.set_honest(i, !malicious.contains(i));
        }
        std::vector<std::size_t> honest;
        for (std::size_t i = 0; i < n; ++i) {
          if (!malicious.contains(i)) honest.push_back(i);
        }

        RoundPlan plan;
        const int strategy = static_cast<int>(run % 3);
        if (strategy == 1) {
          // Equivocation: half of the honest nodes see (A,B) pairings first,
          // the other half (A,C); malicious votes follow the same split.
          auto split = shuffled(honest.size(), rng);
          for (std::size_t k = 0; k < honest.size(); ++k) {
            std::size_t j = honest[split[k]];
            bool first_half = k < (honest.size() + 1) / 2;
            const auto& lead = first_half ? pool.family_x : pool.family_y;
            std::vector<std::size_t> delivery(lead.begin(), lead.end());
            for (auto c : shuffled(m, rng)) {
              if (std::find(delivery.begin(), delivery.end(), c) == delivery.end()) delivery.push_back(c);
            }
            plan.delivery_order[j] = delivery;
            for (auto mal : malicious) {
              auto votes = lead;
              votes.insert(votes.end(), pool.invalid.begin(), pool.invalid.end());
              plan.byzantine_votes[{mal, j}] = votes;
            }
          }
        } else {
          for (auto j : honest) plan.delivery_order[j] = shuffled(m, rng);
          for (auto mal : malicious) {
            for (auto j : honest) {
              std::vector<std::size_t> votes;
              for (std::size_t c = 0; c < m; ++c) {
                bool pick = strategy == 2 ? (std::find(pool.invalid.begin(), pool.invalid.end(), c) != pool.invalid.end() ||
                                             rng() % 4 == 0)
                                          : rng() % 2 == 0;
                if (pick) votes.push_back(c);
              }
              plan.byzantine_votes[{mal, j}] = votes;
            }
          }
        }

        auto outcome = cons.finalize_round(cands, plan);
        for (auto j : honest) cons.catch_up(j);
        bool diverged = !cons.honest_stores_identical();
        bool invalid = outcome.invalid_certified;
        for (auto j : honest) {
          for (const auto& h : pool.forged_hashes) invalid = invalid || cons.node(j).store().contains(h);
        }
        ++cell.runs;
        cell.diverged += diverged;
        cell.invalid_finalized += invalid;
        cell.conflicting += outcome.conflicting_certified;
        if (!diverged && !invalid && !outcome.conflicting_certified) ++cell.safe_runs;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

AuditFixture clone_stamp_fixture(std::uint32_t size, double coverage, std::uint32_t dab, std::uint64_t seed) {
  constexpr std::uint32_t cell = 8;
  if (dab + cell >= size) throw Error(Errc::InvalidValue, "dab too large for fixture");
  AuditFixture fx;
  fx.parent = PixelImage(size, size);
  for (std::uint32_t y = 0; y < size; ++y) {
    for (std::uint32_t x = 0; x < size; ++x) {
      std::uint8_t v = ((x / cell + y / cell) % 2) ? 100 : 0;
      for (int c = 0; c < 3; ++c) fx.parent.at(x, y, c) = v;
    }
  }
  fx.ops = {Exposure{1.5f}};
  fx.honest = apply_ops(fx.parent, fx.ops);
  fx.tampered = fx.honest;

  std::mt19937_64 rng(seed);
  std::vector<char> mask(static_cast<std::size_t>(size) * size, 0);
  std::size_t covered = 0;
  const auto target = static_cast<std::size_t>(std::ceil(coverage * size * size));
  while (covered < target) {
    auto x0 = static_cast<std::uint32_t>(uniform_below(rng, size - dab - cell + 1));
    auto y0 = static_cast<std::uint32_t>(uniform_below(rng, size - dab + 1));
    fx.dabs.push_back({x0, y0, dab, dab});
    for (std::uint32_t y = y0; y < y0 + dab; ++y) {
      for (std::uint32_t x = x0; x < x0 + dab; ++x) {
        for (int c = 0; c < 3; ++c) fx.tampered.at(x, y, c) = fx.honest.at(x + cell, y, c);
        auto& mk = mask[static_cast<std::size_t>(y) * size + x];
        if (!mk) {
          mk = 1;
          ++covered;
        }
      }
    }
  }
  fx.covered = static_cast<double>(covered) / (static_cast<double>(size) * size);
  return fx;
}

double clone_miss_bound(const AuditFixture& fx, const AuditConfig& config) {
  const std::uint32_t w = fx.tampered.width, h = fx.tampered.height, p = config.patch_size;
  if (p > w || p > h) return 1.0;
  // Prefix sums over the dab mask, then the share of patch positions that
  // overlap at least one tampered pixel.
  std::vector<std::uint32_t> sum(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto at = [&](std::uint32_t x, std::uint32_t y) -> std::uint32_t& { return sum[static_cast<std::size_t>(y) * (w + 1) + x]; };
  std::vector<char> mask(static_cast<std::size_t>(w) * h, 0);
  for (const auto& d : fx.dabs) {
    for (std::uint32_t y = d.y; y < d.y + d.h; ++y) {
      for (std::uint32_t x = d.x; x < d.x + d.w; ++x) mask[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) + mask[static_cast<std::size_t>(y) * w + x];
    }
  }
  std::size_t positions = 0, hits = 0;
  for (std::uint32_t y = 0; y + p <= h; ++y) {
    for (std::uint32_t x = 0; x + p <= w; ++x) {
      ++positions;
      if (at(x + p, y + p) + at(x, y) - at(x, y + p) - at(x + p, y) > 0) ++hits;
    }
  }
  return patch_miss_bound(static_cast<double>(hits) / static_cast<double>(positions), config.patch_count);
}

}  // namespace birthmark::sim
