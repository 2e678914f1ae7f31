#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <utility>

namespace hdfe {

enum class ErrorKind {
  InvalidInput,
  DegenerateWeight,
  NonConvergence,
  ApNonConvergence,
  Collinearity,
  Singular,
  SizeGuard,
  Io,
};

// Base of every error thrown by the library. Context (iteration number,
// column name) is prepended as the error travels up the call stack, so the
// dynamic type survives a catch-annotate-rethrow.
class Error : public std::exception {
 public:
  Error(ErrorKind kind, std::string message)
      : kind_(kind), message_(std::move(message)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const char* what() const noexcept override { return message_.c_str(); }

  void add_context(const std::string& context) {
    message_ = context + ": " + message_;
  }

  std::optional<int> iteration;

 private:
  ErrorKind kind_;
  std::string message_;
};

struct InvalidInput : Error {
  explicit InvalidInput(std::string message)
      : Error(ErrorKind::InvalidInput, std::move(message)) {}
};

struct DegenerateWeight : Error {
  DegenerateWeight(std::size_t obs, double weight)
      : Error(ErrorKind::DegenerateWeight,
              "degenerate weight " + std::to_string(weight) +
                  " at observation " + std::to_string(obs)),
        observation(obs) {}
  std::size_t observation;
};

struct NonConvergence : Error {
  explicit NonConvergence(std::string message)
      : Error(ErrorKind::NonConvergence, std::move(message)) {}
};

struct ApNonConvergence : Error {
  ApNonConvergence(int sweeps, double delta)
      : Error(ErrorKind::ApNonConvergence,
              "alternating projections did not converge after " +
                  std::to_string(sweeps) + " sweeps (last delta " +
                  std::to_string(delta) + ")"),
        last_delta(delta) {}
  double last_delta;
};

struct Collinearity : Error {
  Collinearity(std::ptrdiff_t col, std::string message)
      : Error(ErrorKind::Collinearity, std::move(message)), column(col) {}
  std::ptrdiff_t column;
};

struct Singular : Error {
  explicit Singular(std::string message)
      : Error(ErrorKind::Singular, std::move(message)) {}
};

struct SizeGuard : Error {
  explicit SizeGuard(std::string message)
      : Error(ErrorKind::SizeGuard, std::move(message)) {}
};

struct IoError : Error {
  explicit IoError(std::string message)
      : Error(ErrorKind::Io, std::move(message)) {}
};

}  // namespace hdfe
