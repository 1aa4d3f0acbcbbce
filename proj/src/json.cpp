// SPDX-License-Identifier: Apache-2.0
#include "birthmark/json.hpp"

namespace birthmark {

using nlohmann::json;

json to_json(const BirthmarkRecord& r) {
  json j{{"image_hash", r.image_hash.hex()},
         {"modification_level", static_cast<int>(r.modification_level)},
         {"parent_image_hash", r.parent_image_hash ? json(r.parent_image_hash->hex()) : json(nullptr)}};
  if (r.metadata) {
    j["metadata"] = {{"timestamp", r.metadata->timestamp.hex()},
                     {"geolocation", r.metadata->geolocation.hex()},
                     {"owner", r.metadata->owner.hex()}};
  } else {
    j["metadata"] = nullptr;
  }
  return j;
}

json to_json(const ChainRecord& r) {
  json j = to_json(r.record);
  j["posting_server_ids"] = r.posting_server_ids;
  j["posting_timestamp"] = r.posting_timestamp;
  j["posting_time_unix"] = static_cast<std::int64_t>(r.posting_timestamp) * kPostingEpoch;
  j["encoded"] = to_hex(encode(r));
  return j;
}

ChainRecord chain_record_from_json(const json& j) {
  try {
    return decode_chain_record(from_hex(j.at("encoded").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(Errc::DecodeError, std::string("chain record JSON: ") + e.what());
  }
}

json to_json(const DeviationReport& r) {
  json ops = json::array();
  for (const auto& op : r.operations) ops.push_back(describe(op));
  return {{"operations", ops},
          {"proposed_level", static_cast<int>(r.proposed_level)},
          {"reported_score", r.reported_score},
          {"code_hash", r.code_hash.hex()}};
}

DeviationReport deviation_report_from_json(const json& j) {
  try {
    DeviationReport r;
    for (const auto& op : j.at("operations")) r.operations.push_back(parse_op(op.get<std::string>()));
    int level = j.value("proposed_level", static_cast<int>(level_for(r.operations)));
    if (level < 0 || level > 2) throw Error(Errc::InvalidValue, "proposed_level out of range");
    r.proposed_level = static_cast<ModificationLevel>(level);
    r.reported_score = j.value("reported_score", 0.0f);
    r.code_hash = j.contains("code_hash") ? Hash256::from_hex(j["code_hash"].get<std::string>()) : audit_code_hash();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::DecodeError, std::string("deviation report JSON: ") + e.what());
  }
}

json to_json(const AuditVerdict& v) {
  return {{"measured_score", v.measured_score},
          {"pass", v.pass},
          {"flags", v.flags},
          {"patches", v.patches.size()}};
}

json to_json(const MetadataReport& m) {
  return {{"timestamp", to_string(m.timestamp)},
          {"geolocation", to_string(m.geolocation)},
          {"owner", to_string(m.owner)},
          {"matches", m.matches()}};
}

json to_json(const VerificationReport& v) {
  json j{{"image_hash", v.image_hash.hex()},
         {"status", v.authenticated() ? "AUTHENTICATED" : std::string(to_string(v.status))}};
  if (v.record) j["record"] = to_json(*v.record);
  if (!v.chain.empty()) {
    json chain = json::array();
    for (const auto& r : v.chain) chain.push_back(to_json(r));
    j["custody_chain"] = chain;
  }
  if (v.chain_error) j["custody_error"] = *v.chain_error;
  if (v.metadata) j["metadata"] = to_json(*v.metadata);
  return j;
}

}  // namespace birthmark
