#pragma once

#include <stdexcept>
#include <string>

namespace drl {

/// Base class for all library errors. `category()` is a stable,
/// machine-parsable token; the CLI prints it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message),
        category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Incompatible tensor/matrix shapes. Messages name both shapes.
struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

/// Input outside an operation's mathematical domain (empty data, too few rows, ...).
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

/// Invalid configuration value.
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

/// Non-finite values or failed numeric factorizations.
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

/// API contract violation (e.g. backward on a non-scalar root, mismatched grids).
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

/// Malformed file content (CSV, checkpoint, report, config).
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

/// A requested dataset split cannot be formed.
struct SplitError : Error {
  explicit SplitError(const std::string& m) : Error("split", m) {}
};

/// Grid search exhausted its space without a usable candidate.
struct SearchError : Error {
  explicit SearchError(const std::string& m) : Error("search", m) {}
};

/// Filesystem failure (open/rename/write).
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace drl
