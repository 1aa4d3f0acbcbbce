// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace birthmark {

enum class Errc {
  InvalidInput,
  InvalidDomain,
  AuthenticationFailed,
  DecodeError,
  InvalidValue,
  InsufficientFrames,
  NotProvisioned,
  Rejected,
  NotFound,
  InvalidOp,
  BrokenChain,
  CorruptChain,
  Unreachable,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// Thrown for contract violations and malformed input. Protocol outcomes
// (approvals, rejections, admission results) are returned as values instead.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Error(Errc code, const std::string& what, std::size_t offset)
      : std::runtime_error(what), code_(code), offset_(offset) {}

  Errc code() const noexcept { return code_; }
  // Byte offset for DecodeError.
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

}  // namespace birthmark
