#pragma once

#include <stdexcept>
#include <string>

namespace tvhsd {

// Error categories. The numeric values double as CLI exit codes and as the
// C API status codes (see tvhsd.h).
enum class ErrorKind : int {
  usage = 2,
  data = 3,
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Mismatched tensor / embedding dimensions.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(ErrorKind::usage, "shape error: " + what) {}
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::numerical, "domain error: " + what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ErrorKind::usage, "argument error: " + what) {}
};

// Malformed files on disk.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::data, "format error: " + what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what)
      : Error(ErrorKind::data, "version error: " + what) {}
};

// Well-formed data that violates a semantic constraint.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::data, "validation error: " + what) {}
};

// Non-finite values during evaluation or training.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, "numerical error: " + what) {}
};

}  // namespace tvhsd
