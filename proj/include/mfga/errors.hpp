#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mfga {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class D4Violation : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

class UnsupportedFamily : public Error {
public:
  using Error::Error;
};

class StrictConvexityViolation : public Error {
public:
  using Error::Error;
};

class Theta1NotLessThanOne : public Error {
public:
  explicit Theta1NotLessThanOne(double theta1)
      : Error("theta1 = " + std::to_string(theta1) + " is not < 1"), value(theta1) {}
  double value;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class SingularMatrix : public Error {
public:
  using Error::Error;
};

class BlowUp : public Error {
public:
  explicit BlowUp(double t)
      : Error("Riccati solution blows up near t = " + std::to_string(t)), time(t) {}
  double time;
};

class NoConvergence : public Error {
  static std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }

public:
  NoConvergence(int iterations, double residual)
      : Error("Picard iteration did not converge after " + std::to_string(iterations) +
              " iterations (last residual " + sci(residual) + ")"),
        iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

class GridEscape : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace mfga
