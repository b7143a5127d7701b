#pragma once

// A small arithmetic language for right-hand sides f(t, u).
//
//   system  = expr { ";" expr }
//   expr    = term { ("+" | "-") term }
//   term    = unary { ("*" | "/") unary }
//   unary   = ("-" | "+") unary | power
//   power   = primary [ "^" unary ]            (right-associative)
//   primary = number | "t" | "u" digits | constant
//           | function "(" expr { "," expr } ")" | "(" expr ")"
//   function = exp | log | sin | cos | sqrt | abs | pow
//
// Components are 1-based (u1..un). Whitespace, including newlines, is
// insignificant. `a ^ b` is std::pow(a, b), so 0^0 == 1.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fracbvp/errors.hpp"

namespace fracbvp::expr {

using Constants = std::map<std::string, double, std::less<>>;

struct UnknownIdentifierError : ParseError {
  UnknownIdentifierError(const std::string& name, int line, int column)
      : ParseError("unknown identifier '" + name + "'", line, column), name(name) {}
  std::string name;
};

struct ComponentCountError : ParseError {
  ComponentCountError(int expected, int found)
      : ParseError("expected " + std::to_string(expected) + " component(s) separated by ';', found " +
                       std::to_string(found),
                   1, 1),
        expected(expected),
        found(found) {}
  int expected;
  int found;
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Function { Exp, Log, Sin, Cos, Sqrt, Abs, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};
struct Time {};
/// u_{index+1}
struct State {
  int index;
};
struct Constant {
  std::string name;
  double value;
};
struct Negate {
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Call {
  Function fn;
  std::vector<NodePtr> args;
};

struct Node {
  std::variant<Number, Time, State, Constant, Negate, Binary, Call> data;
};

/// Structural equality (numbers compared bitwise-equal as doubles).
bool operator==(const Node& a, const Node& b);

/// Immutable expression tree for one component of f.
class Expr {
 public:
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  double eval(double t, const Eigen::VectorXd& u) const;
  /// Fully parenthesized source that parses back to the same tree.
  std::string to_string() const;
  const Node& root() const { return *root_; }

  friend bool operator==(const Expr& a, const Expr& b) { return *a.root_ == *b.root_; }

 private:
  NodePtr root_;
};

/// Parses `n` ';'-separated components. Identifiers other than t, u1..un,
/// the function names and the keys of `constants` are rejected.
std::vector<Expr> parse(std::string_view source, int n, const Constants& constants = {});

/// Componentwise evaluation; throws EvaluationError (carrying t, u) on a
/// non-finite result.
Eigen::VectorXd eval(const std::vector<Expr>& system, double t, const Eigen::VectorXd& u);

/// Components joined by "; ".
std::string to_string(const std::vector<Expr>& system);

const char* function_name(Function fn);

}  // namespace fracbvp::expr
