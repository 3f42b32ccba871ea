#pragma once

#include <stdexcept>
#include <string>

namespace meshspec {

// Error taxonomy shared with the CLI exit codes: parse/input problems,
// numerical failures, and plain I/O failures are distinguishable so the
// driver can report a meaningful status.

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the path and 1-based line when known.
struct ParseError : MeshError {
  ParseError(const std::string& path, long line, const std::string& what)
      : MeshError(path + ":" + std::to_string(line) + ": " + what),
        path(path),
        line(line) {}
  std::string path;
  long line = 0;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace meshspec
