#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace teql {

/// Raised when a caller violates an operation's precondition (bad index,
/// invalid configuration, NaN input, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a factor update produces a non-finite Q-value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<int> entry, double value)
      : std::runtime_error(what), entry_(std::move(entry)), value_(value) {}

  /// 1-based index tuple of the offending entry.
  const std::vector<int>& entry() const noexcept { return entry_; }
  double value() const noexcept { return value_; }

 private:
  std::vector<int> entry_;
  double value_;
};

}  // namespace teql
