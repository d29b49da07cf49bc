#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlflow {

enum class ErrorCategory {
  input_range,   // sample outside its declared range
  parameter,     // FlowParams / option invariant violated
  dimension,     // mismatched or invalid field shapes
  degenerate,    // e.g. zero-norm reference
  contract,      // caller broke a documented precondition
  format,        // malformed file header or payload
  solver,        // iterative solve did not converge
  io,            // filesystem failure
};

const char* category_name(ErrorCategory c) noexcept;

/// Library-wide exception; the category maps onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Thrown by the linear solver; carries the residual it stopped at.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : Error(ErrorCategory::solver, what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace nlflow
