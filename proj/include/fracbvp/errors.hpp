#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fracbvp {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Grid or array shape incompatible with an operation.
struct SizeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line(line),
        column(column) {}
  int line;
  int column;
};

struct EvaluationError : Error {
  EvaluationError(const std::string& what, double t, Eigen::VectorXd u)
      : Error(what), t(t), u(std::move(u)) {}
  double t;
  Eigen::VectorXd u;
};

/// An iterate left the domain D by more than the admissible slack.
struct DomainEscapeError : Error {
  DomainEscapeError(const std::string& what, double t, int component, double value)
      : Error(what), t(t), component(component), value(value) {}
  double t;
  int component;
  double value;
};

/// r(Q) >= 1: the error bounds of the scheme do not exist.
struct BoundUndefinedError : Error {
  using Error::Error;
};

struct NoBracketError : Error {
  using Error::Error;
};

struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& what,
                      std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> trace)
      : Error(what), trace(std::move(trace)) {}
  /// (chi1, Delta_m) probes evaluated before giving up.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> trace;
};

struct UnsupportedError : Error {
  using Error::Error;
};

}  // namespace fracbvp
