#pragma once

#include <stdexcept>
#include <string>

namespace stdt {

/// Data outside the domain of the chosen family, or malformed input files.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix expected to have full column rank does not.
class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver breakdown that cannot be recovered from.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stdt
