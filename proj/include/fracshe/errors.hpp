#pragma once

#include <stdexcept>
#include <string>

namespace fracshe {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical grid cannot represent every retained Fourier mode.
class ResolutionTooLow : public Error {
 public:
  using Error::Error;
};

/// A kernel query below the time where the truncated series is trustworthy.
class TimeTooSmall : public Error {
 public:
  using Error::Error;
};

/// The solver's sup-norm crossed the divergence guard.
class Diverged : public Error {
 public:
  Diverged(double time, double sup)
      : Error("solution diverged at t=" + std::to_string(time) +
              " (sup|u|=" + std::to_string(sup) + ")"),
        time_(time),
        sup_(sup) {}

  double time() const noexcept { return time_; }
  double sup() const noexcept { return sup_; }

 private:
  double time_;
  double sup_;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// A Monte Carlo proportion sits at 0 or 1 where a log transform is needed.
class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracshe
