#pragma once

#include <stdexcept>
#include <string>

namespace dcrab {

/// Argument outside the mathematical domain of an operation (bad excitation
/// number, weight mismatch, time outside the pulse window, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A size guard was hit (too many qubits, too many dressing layers, Lie
/// algebra larger than the configured cap).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Eigensolver failure, non-finite field samples, norm drift.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FieldError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed document. `where` is a JSON pointer, a TOML source position or a
/// byte offset, whatever locates the problem best.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace dcrab
