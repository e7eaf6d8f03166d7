#pragma once

#include <stdexcept>
#include <string>

namespace freqalloc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected parameters or inconsistent inputs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The update loop exhausted its update budget without settling.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search would exceed its search-space guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SchedulingError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

}  // namespace freqalloc
