#pragma once

#include <stdexcept>
#include <string>

namespace exemplar {

/// Violated precondition (bad shapes, empty regions, stale caches).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed or truncated file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values during optimization.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

}  // namespace exemplar
