#pragma once

#include <stdexcept>
#include <string>

namespace ggpfr {

enum class ErrorClass {
  io,
  schema,
  consistency,
  validation,
  parse,
  version,
  dimension,
  invalid_argument,
  conditioning,
  convergence,
};

const char* error_class_name(ErrorClass cls);

// Process exit code contract of the CLI: 2 I/O, 3 validation, 4 numerical.
int exit_code_for(ErrorClass cls);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_gradient_norm)
      : Error(ErrorClass::convergence, what), last_gradient_norm_(last_gradient_norm) {}
  double last_gradient_norm() const { return last_gradient_norm_; }

 private:
  double last_gradient_norm_;
};

[[noreturn]] inline void fail(ErrorClass cls, const std::string& what) { throw Error(cls, what); }

}  // namespace ggpfr
