#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nevlab {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain where an operation is defined.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to converge or lost accuracy.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition on user-supplied data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at the pole of a Green function.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// All homogeneous coordinates vanish at a point.
class NonReducedError : public Error {
 public:
  using Error::Error;
};

/// An integrand hits a singularity at a quadrature node.
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Zero finder could not certify its count against the argument principle.
class CountingError : public Error {
 public:
  using Error::Error;
};

/// Monotone or otherwise structured input data is malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in the expression grammar, carrying the byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace nevlab
