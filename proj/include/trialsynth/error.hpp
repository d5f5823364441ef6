#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace trialsynth {

// Error categories map onto CLI exit codes and HTTP status codes.
enum class ErrorKind {
  Usage,       // exit 1, HTTP 400
  Validation,  // exit 2, HTTP 422
  NotFound,    // exit 2, HTTP 404
  Numerical,   // exit 3, HTTP 500
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string path = {})
      : std::runtime_error(std::move(message)), kind_(kind), path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Field path (e.g. "selection.items[0].subgroups") when the error refers to
  // a request field; empty otherwise.
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

class UsageError : public Error {
 public:
  explicit UsageError(std::string message, std::string path = {})
      : Error(ErrorKind::Usage, std::move(message), std::move(path)) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message, std::string path = {})
      : Error(ErrorKind::Validation, std::move(message), std::move(path)) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(std::string message, std::string path = {})
      : Error(ErrorKind::NotFound, std::move(message), std::move(path)) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string message, double last_value = 0.0)
      : Error(ErrorKind::Numerical, std::move(message)), last_value_(last_value) {}

  // Last iterate or achieved error estimate at the point of failure.
  double last_value() const noexcept { return last_value_; }

 private:
  double last_value_;
};

// Raised while reading the corpus file; carries the 1-based line number.
class LoadError : public ValidationError {
 public:
  LoadError(std::size_t line, const std::string& field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " +
                            (field.empty() ? std::string{} : field + ": ") + what,
                        field),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace trialsynth
