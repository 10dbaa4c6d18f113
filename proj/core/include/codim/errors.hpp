#pragma once

#include <stdexcept>
#include <string>

namespace codim {

/// Thrown when module inputs violate a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical method cannot deliver a trustworthy result.
/// `code()` is a short stable identifier such as "cfl-violation".
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace codim
