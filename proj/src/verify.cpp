// SPDX-License-Identifier: Apache-2.0
#include "birthmark/verify.hpp"

namespace birthmark {

std::string_view to_string(FieldCheck c) noexcept {
  switch (c) {
    case FieldCheck::Match: return "match";
    case FieldCheck::Mismatch: return "mismatch";
    case FieldCheck::NotClaimed: return "not-claimed";
    case FieldCheck::CannotVerify: return "cannot-verify";
  }
  return "?";
}

std::size_t MetadataReport::matches() const noexcept {
  return (timestamp == FieldCheck::Match) + (geolocation == FieldCheck::Match) + (owner == FieldCheck::Match);
}

MetadataReport verify_metadata(const BirthmarkRecord& record, const std::optional<Nonce>& nonce,
                               const ClaimedMetadata& claims) {
  MetadataReport out;
  auto check = [&](const std::optional<std::string>& claim, MetadataDomain domain, const MetadataHash* stored) {
    if (!claim) return FieldCheck::NotClaimed;
    if (!nonce || !stored) return FieldCheck::CannotVerify;
    try {
      return metadata_hash(domain, *claim, *nonce) == *stored ? FieldCheck::Match : FieldCheck::Mismatch;
    } catch (const Error&) {
      return FieldCheck::Mismatch;  // malformed claim text cannot match
    }
  };
  const auto* m = record.metadata ? &*record.metadata : nullptr;
  out.timestamp = check(claims.month, MetadataDomain::timestamp, m ? &m->timestamp : nullptr);
  out.geolocation = check(claims.geolocation, MetadataDomain::geolocation, m ? &m->geolocation : nullptr);
  out.owner = check(claims.owner, MetadataDomain::owner, m ? &m->owner : nullptr);
  return out;
}

VerificationReport verify_image(const PixelImage& image, RecordSource& source, bool with_chain) {
  VerificationReport report;
  report.image_hash = image_hash(image);
  auto found = source.lookup(report.image_hash);
  report.status = found.status;
  report.record = found.record;
  if (with_chain && report.authenticated()) {
    try {
      report.chain = source.custody_chain(report.image_hash);
    } catch (const Error& e) {
      report.chain_error = std::string(errc_name(e.code())) + ": " + e.what();
    }
  }
  return report;
}

}  // namespace birthmark
