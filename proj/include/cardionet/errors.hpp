#pragma once

#include <stdexcept>
#include <string>

namespace cardionet {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError/DimensionError/DataError/FormatError -> 2, NumericError -> 3.

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedKernelError : DimensionError {
  using DimensionError::DimensionError;
};

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a forward op produces NaN/Inf, or an optimizer step sees a
/// non-finite gradient. `op()` names the offending operation.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string op, const std::string& detail)
      : std::runtime_error("non-finite value produced by '" + op + "': " + detail), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

}  // namespace cardionet
