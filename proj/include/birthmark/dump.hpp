// SPDX-License-Identifier: Apache-2.0
//
// Annotated hex dump of wire objects: every field with its byte offset,
// length and decoded value.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "birthmark/bytes.hpp"

namespace birthmark {

enum class WireKind : std::uint8_t {
  record,
  chain_record,
  log,  // one or more envelope || chain record entries
  packet,
  certificate,
  device_cert,
  approval,
  bundle,
  forwarded,
  validation_request,
  rotation_notice,
};

std::string_view to_string(WireKind k) noexcept;
// Throws Error(InvalidInput) for an unknown name.
WireKind wire_kind_from_string(std::string_view name);

struct DumpField {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::string name;
  std::string value;
};

// First kind that decodes the whole buffer, trying the log layout first.
std::optional<WireKind> detect_kind(ByteView bytes);
// Throws the decoder's Error when bytes are not a valid object of that kind.
std::vector<DumpField> annotate(ByteView bytes, WireKind kind);
std::string format_dump(ByteView bytes, WireKind kind);

}  // namespace birthmark
