#pragma once

#include <stdexcept>
#include <string>

namespace pp {

// Argument and range errors use std::invalid_argument and std::out_of_range.

/// A computation would exceed a configured memory or time budget.
class resource_limit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exact coefficient does not fit the 128-bit value contract.
class coefficient_overflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Two exact computation paths disagree; always a bug.
class consistency_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested quantity is undefined for this input (e.g. log of zero).
class undefined_input_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace pp
