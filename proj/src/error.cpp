// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/error.hpp"

namespace burstpar {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kInfeasible: return "infeasible instance";
    case ErrorKind::kUnsupportedTopology: return "unsupported topology";
    case ErrorKind::kDeadlock: return "simulation deadlock";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kUsage: return "usage error";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kParse: return 3;
    case ErrorKind::kValidation: return 4;
    case ErrorKind::kInfeasible: return 5;
    case ErrorKind::kUnsupportedTopology: return 6;
    case ErrorKind::kDeadlock: return 7;
    case ErrorKind::kIo: return 8;
  }
  return 1;
}

}  // namespace burstpar
