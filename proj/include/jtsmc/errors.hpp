#pragma once

#include <stdexcept>
#include <string>

namespace jtsmc {

// Base of every library error. Validation errors are the caller's fault
// (bad input or configuration); the rest are runtime failures.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const { return false; }
};

class ValidationError : public Error {
public:
  using Error::Error;
  bool is_validation() const override { return true; }
};

#define JTSMC_DEFINE_ERROR(Name, Base) \
  class Name : public Base {           \
  public:                              \
    using Base::Base;                  \
  };

JTSMC_DEFINE_ERROR(NotDecomposable, ValidationError)
JTSMC_DEFINE_ERROR(UnknownSeparator, ValidationError)
JTSMC_DEFINE_ERROR(InconsistentExpansion, ValidationError)
JTSMC_DEFINE_ERROR(DimensionMismatch, ValidationError)
JTSMC_DEFINE_ERROR(TooLarge, ValidationError)
JTSMC_DEFINE_ERROR(ParseError, ValidationError)
JTSMC_DEFINE_ERROR(NotPositiveDefinite, ValidationError)
JTSMC_DEFINE_ERROR(InvalidReference, ValidationError)
JTSMC_DEFINE_ERROR(EmptySupport, Error)
JTSMC_DEFINE_ERROR(AllWeightsZero, Error)

#undef JTSMC_DEFINE_ERROR

}  // namespace jtsmc
