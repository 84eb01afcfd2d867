// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace burstpar {

enum class ErrorKind {
  kParse,                // malformed input document
  kValidation,           // well-formed but violates a model invariant
  kInfeasible,           // no admissible plan / instance too large / bad limits
  kUnsupportedTopology,  // graph is not reducible to branch/join blocks
  kDeadlock,             // simulator found queued work that can never run
  kIo,
  kUsage,
};

/// Error raised by every burstpar module. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

/// Process exit status used by the CLI for each error kind.
int exit_code_for(ErrorKind kind);

}  // namespace burstpar
