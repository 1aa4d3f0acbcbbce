// SPDX-License-Identifier: Apache-2.0
//
// JSON views of protocol values, used by the RPC API, the CLI and reports.
//
// Deviation report file:
//   {"operations": ["exposure +1.5", "crop 0,0,640,480", ...],
//    "proposed_level": 0|1|2, "reported_score": 0.0,
//    "code_hash": "<64 hex>"}            (code_hash optional; defaults to current)
#pragma once

#include <nlohmann/json.hpp>

#include "birthmark/chain.hpp"
#include "birthmark/deviation.hpp"
#include "birthmark/verify.hpp"

namespace birthmark {

nlohmann::json to_json(const BirthmarkRecord& record);
nlohmann::json to_json(const ChainRecord& record);
ChainRecord chain_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DeviationReport& report);
DeviationReport deviation_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AuditVerdict& verdict);
nlohmann::json to_json(const MetadataReport& report);
nlohmann::json to_json(const VerificationReport& report);

}  // namespace birthmark
