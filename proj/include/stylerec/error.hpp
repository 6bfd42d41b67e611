#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stylerec {

// Error taxonomy shared by the library, the CLI (exit codes) and the
// HTTP service (status codes).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file content. Carries the 1-based line number and the
// offending field when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t line = 0,
             std::string field = {})
      : Error(compose(what, line, field)), line_(line),
        field_(std::move(field)) {}

  std::uint64_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string compose(const std::string& what, std::uint64_t line,
                             const std::string& field) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::uint64_t line_;
  std::string field_;
};

// File header does not identify the expected format or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File ends before the length implied by its header.
class TruncatedError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::uint64_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

// A required artifact or id is absent.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// A query that cannot be answered against the loaded artifacts
// (undefined hue, feature dimension mismatch, ...).
class QueryError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an incompatible strategy/payload combination.
class UsageError : public Error {
 public:
  using Error::Error;
};

// CLI exit codes. Closed set; keep README in sync.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitMissingArtifact = 4,
  kExitQuery = 5,
};

}  // namespace stylerec
