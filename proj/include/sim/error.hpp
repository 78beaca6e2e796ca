#pragma once

#include <stdexcept>
#include <string>

namespace sim {

enum class Err {
  PendingInvocation,
  UndefinedTransition,
  ReturnNotEnabled,
  ForeignMessage,
  MalformedHistory,
  IllegalAtomicStep,
  DoublePropose,
  Crashed,
  NoEnabledStatement,
  SingleWriterViolation,
  UnreachableShape,
  RefinementViolation,
  DigestMismatch,
  ConfigError,
  ParseError,
  Internal,
};

const char* err_name(Err e);

class SimError : public std::runtime_error {
 public:
  SimError(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
  throw SimError(code, what);
}

}  // namespace sim
