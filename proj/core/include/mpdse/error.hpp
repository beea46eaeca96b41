#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpdse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (workload, calibration or constraint files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}

  /// 1-based line of the offending token, 0 when unknown.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value that parses fine but breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Calibration table lookups that have no entry.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The search found no design point satisfying the hardware constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A simulated accumulator left its two's-complement range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpdse
