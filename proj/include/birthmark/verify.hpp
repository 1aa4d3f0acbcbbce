// SPDX-License-Identifier: Apache-2.0
//
// Public verification: hash the pixels, ask a validator, and optionally
// check metadata claims against the nonce sidecar.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "birthmark/chain.hpp"
#include "birthmark/image.hpp"

namespace birthmark {

enum class FieldCheck : std::uint8_t { Match, Mismatch, NotClaimed, CannotVerify };
std::string_view to_string(FieldCheck c) noexcept;

struct ClaimedMetadata {
  std::optional<std::string> month;        // "YYYY-MM"
  std::optional<std::string> geolocation;  // "lat,lon"
  std::optional<std::string> owner;
};

struct MetadataReport {
  FieldCheck timestamp = FieldCheck::NotClaimed;
  FieldCheck geolocation = FieldCheck::NotClaimed;
  FieldCheck owner = FieldCheck::NotClaimed;
  std::size_t matches() const noexcept;
};

// Without a nonce (or when the record carries no metadata hashes) every
// claimed field is CannotVerify, which is distinct from Mismatch.
MetadataReport verify_metadata(const BirthmarkRecord& record, const std::optional<Nonce>& nonce,
                               const ClaimedMetadata& claims);

// Anything that can answer lookups and custody queries: a local node or a
// JSON-RPC client.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual LookupResult lookup(const Hash256& image_hash) = 0;
  virtual std::vector<ChainRecord> custody_chain(const Hash256& image_hash) = 0;
};

class LocalSource : public RecordSource {
 public:
  explicit LocalSource(const ValidatorNode& node) : node_(node) {}
  LookupResult lookup(const Hash256& h) override { return node_.lookup(h); }
  std::vector<ChainRecord> custody_chain(const Hash256& h) override { return node_.custody_chain(h); }

 private:
  const ValidatorNode& node_;
};

struct VerificationReport {
  Hash256 image_hash{};
  LookupStatus status = LookupStatus::NotFound;
  std::optional<ChainRecord> record;
  std::vector<ChainRecord> chain;  // filled when requested
  std::optional<std::string> chain_error;
  std::optional<MetadataReport> metadata;
  bool authenticated() const noexcept { return status == LookupStatus::Found; }
};

VerificationReport verify_image(const PixelImage& image, RecordSource& source, bool with_chain = false);

}  // namespace birthmark
