#pragma once

#include <stdexcept>
#include <string>

namespace nullctrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define NULLCTRL_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    using Error::Error;                                               \
    const char* kind() const noexcept override { return #Name; }      \
  };

NULLCTRL_DEFINE_ERROR(AdmissibilityError)
NULLCTRL_DEFINE_ERROR(OverflowError)
NULLCTRL_DEFINE_ERROR(PoissonNoConverge)
NULLCTRL_DEFINE_ERROR(LinearSolveError)
NULLCTRL_DEFINE_ERROR(StructureError)
NULLCTRL_DEFINE_ERROR(CflViolation)
NULLCTRL_DEFINE_ERROR(ValidationError)

#undef NULLCTRL_DEFINE_ERROR

/// Malformed configuration text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "ParseError"; }

 private:
  int line_;
};

}  // namespace nullctrl
