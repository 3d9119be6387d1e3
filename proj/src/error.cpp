// SPDX-License-Identifier: Apache-2.0
#include "tfmd/error.hpp"

namespace tfmd {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParameter: return "parameter error";
    case ErrorCode::kIndex: return "index error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kConstruction: return "construction error";
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kSpec: return "spec error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSchema: return "schema error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kContract: return "contract error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kUsage: return "usage error";
  }
  return "error";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage: return 2;
    case ErrorCode::kConfig: return 3;
    case ErrorCode::kSpec: return 4;
    case ErrorCode::kParameter: return 5;
    case ErrorCode::kIo: return 6;
    case ErrorCode::kParse: return 7;
    case ErrorCode::kSchema: return 8;
    case ErrorCode::kNumeric: return 9;
    case ErrorCode::kShape: return 10;
    case ErrorCode::kIndex: return 11;
    case ErrorCode::kInput: return 12;
    case ErrorCode::kConstruction: return 13;
    case ErrorCode::kContract: return 14;
  }
  return 1;
}

}  // namespace tfmd
