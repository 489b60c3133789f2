#pragma once

#include <stdexcept>
#include <string>

namespace blmol {

/// Violated precondition or type invariant (caller bug, not input data).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file (dataset, CSV artifact). Message names file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training or fitting failed numerically (non-finite steps, singular kernel).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blmol
