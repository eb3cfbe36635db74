#pragma once

#include <stdexcept>
#include <string>

namespace mstd {

/// Precondition or invariant violation by a caller (bad bounds, bad state,
/// mismatched shapes, insufficient data).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration or input file. Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact-enumeration request beyond the supported problem size.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iterative solver exhausted its iteration budget.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual;
};

}  // namespace mstd
