#pragma once

#include <stdexcept>
#include <string>

namespace evtrack {

// Base of every error raised by the library. Each subclass names one
// failure category so callers (and the CLI exit-code mapping) can branch on
// it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OrderingError : public Error {
 public:
  OrderingError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BoundsError : public Error {
  using Error::Error;
};

class FormatError : public Error {
  using Error::Error;
};

class SizeError : public Error {
  using Error::Error;
};

class DomainError : public Error {
  using Error::Error;
};

class ContractError : public Error {
  using Error::Error;
};

// Raised when a patch is too close to zero to be normalized, i.e. the
// registration is unobservable.
class DegeneratePatchError : public Error {
  using Error::Error;
};

class PlacementError : public Error {
  using Error::Error;
};

class AlignmentError : public Error {
  using Error::Error;
};

class EmptyOverlapError : public Error {
  using Error::Error;
};

class PairingError : public Error {
  using Error::Error;
};

class LookupError : public Error {
  using Error::Error;
};

class ConfigError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

}  // namespace evtrack
