#pragma once

#include <stdexcept>
#include <string>

namespace effect_engine {

/// Broad failure class; the CLI maps it onto its exit status.
enum class ErrorKind {
  validation,  // bad input or violated precondition
  numeric,     // the data are valid but the computation cannot proceed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

}  // namespace effect_engine
