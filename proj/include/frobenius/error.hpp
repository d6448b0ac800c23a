#pragma once

#include <stdexcept>
#include <string>

namespace frob {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { precondition, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define FROB_DEFINE_ERROR(Name, Category)                                    \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(ErrorCategory::Category, what) {} \
  }

FROB_DEFINE_ERROR(DomainError, precondition);
FROB_DEFINE_ERROR(StencilError, precondition);
FROB_DEFINE_ERROR(DimensionError, precondition);
FROB_DEFINE_ERROR(PreconditionError, precondition);
FROB_DEFINE_ERROR(InputError, precondition);
FROB_DEFINE_ERROR(UnsupportedError, precondition);
FROB_DEFINE_ERROR(ClassificationError, precondition);
FROB_DEFINE_ERROR(NotHessianError, precondition);
FROB_DEFINE_ERROR(SchemaError, precondition);
FROB_DEFINE_ERROR(SolverError, numerical);
FROB_DEFINE_ERROR(IntegrabilityError, numerical);
FROB_DEFINE_ERROR(NotCurvedFrobeniusError, numerical);

#undef FROB_DEFINE_ERROR

/// Raised when a path integration leaves the blow-up envelope.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double arc_length)
      : Error(ErrorCategory::numerical, what), arc_length_(arc_length) {}
  double arc_length() const noexcept { return arc_length_; }

 private:
  double arc_length_;
};

}  // namespace frob
