#pragma once

#include <stdexcept>

namespace postmimic {

/// Inputs violate an operation's shape or domain contract.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A loss or gradient became NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus or archive content is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adversarial training stalled with a saturated generator loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation was asked to score frames from training cineloops.
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace postmimic
