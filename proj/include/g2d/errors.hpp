#pragma once

#include <stdexcept>
#include <string>

namespace g2d {

// Bad user configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stage/runtime failure (CLI exit code 2).
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (CLI exit code 3). Carries the offending line.
struct IngestError : std::runtime_error {
  IngestError(const std::string& msg, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_number(line) {}
  explicit IngestError(const std::string& msg) : std::runtime_error(msg), line_number(-1) {}
  long line_number;
};

// make_pair() called on an all-correct or all-wrong group.
struct NotPairable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace g2d
