// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tfmd {

// Error classes. The CLI maps each to a distinct process exit code.
enum class ErrorCode {
  kParameter,  // hyperparameter outside its legal domain
  kIndex,      // class index out of range
  kShape,      // dimension mismatch
  kNumeric,    // non-finite input or result
  kConstruction,
  kInput,      // malformed metric inputs
  kSpec,       // infeasible dataset spec
  kParse,      // malformed file line
  kSchema,     // well-formed line with inconsistent widths
  kIo,
  kContract,   // API misuse, e.g. stale forward cache
  kConfig,
  kUsage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

// Process exit code for an error class; 0 is reserved for success.
int exit_code(ErrorCode code) noexcept;

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace tfmd
