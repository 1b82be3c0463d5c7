#pragma once

#include <stdexcept>
#include <string>

namespace colt {

// Error taxonomy. Each class maps to a distinct process exit code in the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const { return 1; }
};

#define COLT_DEFINE_ERROR(NAME, CODE)                     \
  class NAME : public Error {                             \
   public:                                                \
    explicit NAME(const std::string& msg) : Error(msg) {} \
    int exit_code() const override { return CODE; }       \
  }

COLT_DEFINE_ERROR(UsageError, 2);       // CLI misuse, non-scalar backward root
COLT_DEFINE_ERROR(IoError, 3);          // filesystem failures, overwrite refusal
COLT_DEFINE_ERROR(ShapeError, 10);      // tensor dimension mismatch
COLT_DEFINE_ERROR(ConfigError, 11);     // invalid configuration value
COLT_DEFINE_ERROR(DataError, 12);       // bad labels or dataset contents
COLT_DEFINE_ERROR(ParseError, 13);      // unreadable or corrupt file
COLT_DEFINE_ERROR(AlignmentError, 14);  // mask/parameter structure mismatch
COLT_DEFINE_ERROR(StateError, 15);      // operation needs state that is missing
COLT_DEFINE_ERROR(TransferError, 16);   // ticket/model incompatibility
COLT_DEFINE_ERROR(NumericFault, 17);    // NaN or Inf in an optimizer update

#undef COLT_DEFINE_ERROR

}  // namespace colt
