#pragma once

#include <stdexcept>
#include <string>

namespace tobit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TOBIT_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

TOBIT_DEFINE_ERROR(InvalidArgument);
TOBIT_DEFINE_ERROR(CorrelationOutOfRange);
TOBIT_DEFINE_ERROR(DegenerateRegion);
TOBIT_DEFINE_ERROR(SingularInnovation);
TOBIT_DEFINE_ERROR(SingularCensoredCovariance);
TOBIT_DEFINE_ERROR(InvalidWindow);
TOBIT_DEFINE_ERROR(NoInteriorMaximum);
TOBIT_DEFINE_ERROR(IndexOutOfRange);
TOBIT_DEFINE_ERROR(SchemaMismatch);
TOBIT_DEFINE_ERROR(EmptyFile);
TOBIT_DEFINE_ERROR(NonMonotoneTimestamps);
TOBIT_DEFINE_ERROR(NoOverlap);

#undef TOBIT_DEFINE_ERROR

}  // namespace tobit
