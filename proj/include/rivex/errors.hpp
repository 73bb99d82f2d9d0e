#pragma once

#include <stdexcept>
#include <string>

namespace rivex {

/// Error categories; the CLI maps each to its own exit code.
enum class ErrorKind {
  Input = 5,       // malformed or out-of-range user input
  Io = 3,          // file could not be opened / written
  Parse = 4,       // file opened but its content is not in the expected format
  Domain = 7,      // mathematically invalid request (non-PSD covariance, boundary point, ...)
  Estimation = 6,  // fitting failed or is impossible with the given data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

/// Dependence kernel produced a covariance that is not positive semi-definite.
class KernelValidityError : public DomainError {
 public:
  explicit KernelValidityError(const std::string& what) : DomainError(what) {}
};

/// Threshold too low for the asymptotic model: V(u) >= 1 or levels below the fitted thresholds.
class ModelRangeError : public DomainError {
 public:
  explicit ModelRangeError(const std::string& what) : DomainError(what) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error(ErrorKind::Estimation, what) {}
};

}  // namespace rivex
