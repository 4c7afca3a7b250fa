#pragma once

#include <stdexcept>
#include <string>

namespace nsgc {

/// Precondition or shape violation at an API boundary.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structured operator that would need to invert a zero gain.
class SingularOperatorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// K*N subcarriers requested out of fewer than that.
class InfeasiblePlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents (PGM, checkpoint, config, operator record).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

}  // namespace nsgc
