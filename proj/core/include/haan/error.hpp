// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace haan {

enum class ErrorCode {
  kUsage,
  kConfig,
  kFormat,
  kDimensionMismatch,
  kZeroVariance,
  kInvalidIsd,
  kDomain,
  kDegenerateInput,
  kNoValidRange,
  kOutOfRange,
};

const char* to_string(ErrorCode code);

// All library failures are reported as haan::Error; the code lets callers
// (notably the CLI exit-code contract) classify them without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace haan
