#pragma once

#include <stdexcept>
#include <string>

namespace nsmt {

// Exit-code classes used by the CLI: 2 config, 3 solver, 4 budget not reached.
enum class ErrorKind { config = 2, solver = 3, not_reached = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Argument outside its admissible range (bad y, k=0, mismatched lengths, ...).
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

// Numerical failure: singular factorization, blow-up, invalid initial datum.
class SolverError : public Error {
public:
  explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

// The epsilon schedule ended with the terminal residual above tolerance.
class NotReachedError : public Error {
public:
  NotReachedError(const std::string& what, double best_residual)
      : Error(ErrorKind::not_reached, what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

// Zero initial datum: the per-mode problem is degenerate.
class DegenerateInputError : public Error {
public:
  explicit DegenerateInputError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

}  // namespace nsmt
