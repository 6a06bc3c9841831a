#pragma once

#include <stdexcept>
#include <string>

namespace heartlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument's value or sign violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A root bracket does not straddle a sign change.
///
/// Carries the endpoint values (rendered as decimal strings) so that callers
/// reporting a counterexample candidate keep the evidence.
class BracketError : public Error {
 public:
  BracketError(const std::string& what, std::string f_lo, std::string f_hi)
      : Error(what + " (f(lo)=" + f_lo + ", f(hi)=" + f_hi + ")"),
        f_lo_(std::move(f_lo)),
        f_hi_(std::move(f_hi)) {}

  const std::string& f_lo() const { return f_lo_; }
  const std::string& f_hi() const { return f_hi_; }

 private:
  std::string f_lo_;
  std::string f_hi_;
};

/// Turn budget or precision budget exhausted.
class DepthError : public Error {
 public:
  using Error::Error;
};

/// Family coefficients violate a standing inequality.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// Two connection parameters coincide within the tie tolerance.
class ResonanceError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace heartlab
