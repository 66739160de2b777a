#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace extwm {

/// Invalid input or configuration detected before any numerical work.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a trustworthy result
/// (non-finite values, step-size underflow, missing root bracket, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the time stepper when a field becomes non-finite.
class NumericalAbort : public NumericalError {
 public:
  NumericalAbort(const std::string& what, std::size_t node, double t)
      : NumericalError(what), node_(node), time_(t) {}

  std::size_t node() const noexcept { return node_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t node_;
  double time_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace extwm
