#include "fracbvp/expr.hpp"

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

namespace fracbvp::expr {

namespace {

constexpr int kMaxDepth = 256;

constexpr std::array<std::pair<const char*, Function>, 7> kFunctions{{
    {"exp", Function::Exp},
    {"log", Function::Log},
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},
    {"pow", Function::Pow},
}};

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& [text, fn] : kFunctions)
    if (name == text) return fn;
  return std::nullopt;
}

int arity(Function fn) { return fn == Function::Pow ? 2 : 1; }

// u followed by digits only, e.g. "u12".
std::optional<int> state_index(std::string_view name) {
  if (name.size() < 2 || name[0] != 'u') return std::nullopt;
  int value = 0;
  const auto* first = name.data() + 1;
  const auto* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || name[1] == '0') return std::nullopt;
  return value;
}

NodePtr make(auto&& data) { return std::make_shared<const Node>(Node{std::forward<decltype(data)>(data)}); }

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, Semicolon, End };

struct Token {
  Tok kind;
  std::string_view text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token tok{Tok::End, {}, 0.0, line_, col_};
    if (pos_ >= src_.size()) return tok;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(tok);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
      tok.kind = Tok::Ident;
      tok.text = src_.substr(start, pos_ - start);
      return tok;
    }
    tok.text = src_.substr(pos_, 1);
    switch (c) {
      case '+': tok.kind = Tok::Plus; break;
      case '-': tok.kind = Tok::Minus; break;
      case '*': tok.kind = Tok::Star; break;
      case '/': tok.kind = Tok::Slash; break;
      case '^': tok.kind = Tok::Caret; break;
      case '(': tok.kind = Tok::LParen; break;
      case ')': tok.kind = Tok::RParen; break;
      case ',': tok.kind = Tok::Comma; break;
      case ';': tok.kind = Tok::Semicolon; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }
    advance();
    return tok;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  Token number(Token tok) {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        while (pos_ < look) advance();
        digits();
      }
    }
    tok.kind = Tok::Number;
    tok.text = src_.substr(start, pos_ - start);
    const auto* first = tok.text.data();
    const auto* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, tok.number);
    if (ec == std::errc::result_out_of_range)
      throw ParseError("number '" + std::string(tok.text) + "' out of range", tok.line, tok.column);
    if (ec != std::errc{} || ptr != last)
      throw ParseError("malformed number '" + std::string(tok.text) + "'", tok.line, tok.column);
    return tok;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::string_view src, int n, const Constants& constants)
      : lexer_(src), n_(n), constants_(constants) {
    cur_ = lexer_.next();
  }

  std::vector<Expr> system() {
    std::vector<Expr> out;
    out.emplace_back(component());
    while (cur_.kind == Tok::Semicolon) {
      shift();
      out.emplace_back(component());
    }
    if (cur_.kind != Tok::End) fail("expected operator or end of input");
    if (static_cast<int>(out.size()) != n_) throw ComponentCountError(n_, static_cast<int>(out.size()));
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::string near = cur_.kind == Tok::End ? "end of input" : "'" + std::string(cur_.text) + "'";
    throw ParseError(what + " near " + near, cur_.line, cur_.column);
  }

  void shift() { cur_ = lexer_.next(); }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    shift();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  NodePtr component() {
    if (cur_.kind == Tok::Semicolon || cur_.kind == Tok::End) fail("empty component");
    return expression();
  }

  NodePtr expression() {
    DepthGuard guard(*this);
    NodePtr lhs = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const BinaryOp op = cur_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      shift();
      lhs = make(Binary{op, lhs, term()});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const BinaryOp op = cur_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      shift();
      lhs = make(Binary{op, lhs, unary()});
    }
    return lhs;
  }

  NodePtr unary() {
    DepthGuard guard(*this);
    if (cur_.kind == Tok::Minus) {
      shift();
      return make(Negate{unary()});
    }
    if (cur_.kind == Tok::Plus) {
      shift();
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (cur_.kind == Tok::Caret) {
      shift();
      return make(Binary{BinaryOp::Pow, base, unary()});
    }
    return base;
  }

  NodePtr primary() {
    const Token tok = cur_;
    switch (tok.kind) {
      case Tok::Number:
        shift();
        return make(Number{tok.number});
      case Tok::LParen: {
        shift();
        NodePtr inner = expression();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident:
        shift();
        return identifier(tok);
      default:
        fail("expected a number, identifier or '('");
    }
  }

  NodePtr identifier(const Token& tok) {
    const std::string_view name = tok.text;
    if (auto fn = lookup_function(name)) {
      if (cur_.kind != Tok::LParen)
        throw ParseError("function '" + std::string(name) + "' must be called", tok.line, tok.column);
      shift();
      std::vector<NodePtr> args;
      args.push_back(expression());
      while (cur_.kind == Tok::Comma) {
        shift();
        args.push_back(expression());
      }
      expect(Tok::RParen, "')'");
      if (static_cast<int>(args.size()) != arity(*fn))
        throw ParseError("function '" + std::string(name) + "' takes " + std::to_string(arity(*fn)) +
                             " argument(s)",
                         tok.line, tok.column);
      return make(Call{*fn, std::move(args)});
    }
    if (name == "t") return make(Time{});
    if (auto it = constants_.find(name); it != constants_.end()) return make(Constant{it->first, it->second});
    if (auto idx = state_index(name); idx && *idx >= 1 && *idx <= n_) return make(State{*idx - 1});
    throw UnknownIdentifierError(std::string(name), tok.line, tok.column);
  }

  Lexer lexer_;
  Token cur_;
  int n_;
  const Constants& constants_;
  int depth_ = 0;
};

double apply(Function fn, double a, double b) {
  switch (fn) {
    case Function::Exp: return std::exp(a);
    case Function::Log: return std::log(a);
    case Function::Sin: return std::sin(a);
    case Function::Cos: return std::cos(a);
    case Function::Sqrt: return std::sqrt(a);
    case Function::Abs: return std::abs(a);
    case Function::Pow: return std::pow(a, b);
  }
  return std::nan("");
}

double evaluate(const Node& node, double t, const Eigen::VectorXd& u) {
  return std::visit(
      [&](const auto& n) -> double {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Number>) {
          return n.value;
        } else if constexpr (std::is_same_v<N, Time>) {
          return t;
        } else if constexpr (std::is_same_v<N, State>) {
          return u[n.index];
        } else if constexpr (std::is_same_v<N, Constant>) {
          return n.value;
        } else if constexpr (std::is_same_v<N, Negate>) {
          return -evaluate(*n.operand, t, u);
        } else if constexpr (std::is_same_v<N, Binary>) {
          const double a = evaluate(*n.lhs, t, u);
          const double b = evaluate(*n.rhs, t, u);
          switch (n.op) {
            case BinaryOp::Add: return a + b;
            case BinaryOp::Sub: return a - b;
            case BinaryOp::Mul: return a * b;
            case BinaryOp::Div: return a / b;
            case BinaryOp::Pow: return std::pow(a, b);
          }
          return std::nan("");
        } else {
          const double a = evaluate(*n.args[0], t, u);
          const double b = n.args.size() > 1 ? evaluate(*n.args[1], t, u) : 0.0;
          return apply(n.fn, a, b);
        }
      },
      node.data);
}

void print(const Node& node, std::ostream& os) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Number>) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", n.value);
          os << buf;
        } else if constexpr (std::is_same_v<N, Time>) {
          os << 't';
        } else if constexpr (std::is_same_v<N, State>) {
          os << 'u' << n.index + 1;
        } else if constexpr (std::is_same_v<N, Constant>) {
          os << n.name;
        } else if constexpr (std::is_same_v<N, Negate>) {
          os << "(-";
          print(*n.operand, os);
          os << ')';
        } else if constexpr (std::is_same_v<N, Binary>) {
          static constexpr char ops[] = {'+', '-', '*', '/', '^'};
          os << '(';
          print(*n.lhs, os);
          os << ' ' << ops[static_cast<int>(n.op)] << ' ';
          print(*n.rhs, os);
          os << ')';
        } else {
          os << function_name(n.fn) << '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) os << ", ";
            print(*n.args[i], os);
          }
          os << ')';
        }
      },
      node.data);
}

}  // namespace

const char* function_name(Function fn) {
  for (const auto& [text, f] : kFunctions)
    if (f == fn) return text;
  return "?";
}

bool operator==(const Node& a, const Node& b) {
  if (a.data.index() != b.data.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using N = std::decay_t<decltype(x)>;
        const auto& y = std::get<N>(b.data);
        if constexpr (std::is_same_v<N, Number>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<N, Time>) {
          return true;
        } else if constexpr (std::is_same_v<N, State>) {
          return x.index == y.index;
        } else if constexpr (std::is_same_v<N, Constant>) {
          return x.name == y.name && x.value == y.value;
        } else if constexpr (std::is_same_v<N, Negate>) {
          return *x.operand == *y.operand;
        } else if constexpr (std::is_same_v<N, Binary>) {
          return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
        } else {
          if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i)
            if (!(*x.args[i] == *y.args[i])) return false;
          return true;
        }
      },
      a.data);
}

double Expr::eval(double t, const Eigen::VectorXd& u) const { return evaluate(*root_, t, u); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print(*root_, os);
  return os.str();
}

std::vector<Expr> parse(std::string_view source, int n, const Constants& constants) {
  if (n < 1) throw Error("component count must be >= 1");
  for (const auto& [name, value] : constants) {
    if (name == "t" || lookup_function(name) || state_index(name))
      throw Error("constant name '" + name + "' is reserved");
    if (!std::isfinite(value)) throw Error("constant '" + name + "' is not finite");
  }
  Parser parser(source, n, constants);
  return parser.system();
}

Eigen::VectorXd eval(const std::vector<Expr>& system, double t, const Eigen::VectorXd& u) {
  if (u.size() != static_cast<Eigen::Index>(system.size()))
    throw SizeError("state has " + std::to_string(u.size()) + " components, system has " +
                    std::to_string(system.size()));
  Eigen::VectorXd out(static_cast<Eigen::Index>(system.size()));
  for (std::size_t i = 0; i < system.size(); ++i) {
    const double v = system[i].eval(t, u);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "f component " << i + 1 << " is not finite at t=" << t << ", u=(";
      for (Eigen::Index k = 0; k < u.size(); ++k) os << (k ? ", " : "") << u[k];
      os << ')';
      throw EvaluationError(os.str(), t, u);
    }
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

std::string to_string(const std::vector<Expr>& system) {
  std::string out;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (i) out += "; ";
    out += system[i].to_string();
  }
  return out;
}

}  // namespace fracbvp::expr
