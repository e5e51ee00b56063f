#pragma once

// Parser and evaluator for math expressions of (x, y, t) with named constants.
// All PDE coefficients, boundary data, and exact solutions are written as
// expression strings in input files, so verification problems can be changed
// without recompiling.
//
// Grammar (tightest first): ^ (right-assoc), unary -, * /, + -, comparisons.
// Calls: exp, sin, cos, log, abs, sqrt, and if(cond, a, b) which evaluates
// only the selected branch.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "meltsim/common.hpp"

namespace meltsim {

class ParseError : public Error {
public:
  ParseError(const std::string &msg, std::size_t offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

class EvalError : public Error {
public:
  using Error::Error;
};

// Named constants available during evaluation. x, y and t are reserved.
class Bindings {
public:
  Bindings() = default;

  void set(const std::string &name, double value) {
    if (!valid_identifier(name)) throw Error("invalid constant name: '" + name + "'");
    if (name == "x" || name == "y" || name == "t")
      throw Error("'" + name + "' is a reserved variable and cannot be a constant");
    values_[name] = value;
  }

  const double *find(const std::string &name) const {
    auto it = values_.find(name);
    return it == values_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, double> &all() const { return values_; }

  static bool valid_identifier(const std::string &s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
  }

private:
  std::map<std::string, double> values_;
};

namespace detail {

enum class NodeOp {
  kLiteral,
  kVarX,
  kVarY,
  kVarT,
  kConst,
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kLt,
  kLe,
  kGt,
  kGe,
  kEq,
  kExp,
  kSin,
  kCos,
  kLog,
  kAbs,
  kSqrt,
  kIf,
};

struct Node {
  NodeOp op;
  double value = 0.0;  // kLiteral
  int sym = -1;        // kConst: index into symbol table
  int a = -1, b = -1, c = -1;
  std::size_t offset = 0;  // source byte offset, for diagnostics
};

}  // namespace detail

// Immutable expression tree; safe to evaluate concurrently.
class Expr {
public:
  Expr() = default;

  static Expr parse(const std::string &source);
  static std::vector<Expr> parse_vector(const std::string &source);

  bool empty() const { return nodes_.empty(); }

  double eval(const Bindings &b, double x, double y, double t) const {
    return eval_resolved(resolve(b), x, y, t);
  }

  // Pre-resolves constants once, for hot loops: keep the vector and call
  // eval_resolved per point.
  std::vector<double> resolve(const Bindings &b) const {
    std::vector<double> resolved(symbols_.size());
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      const double *v = b.find(symbols_[i]);
      if (!v) throw EvalError("unbound constant '" + symbols_[i] + "' in expression '" + source_ + "'");
      resolved[i] = *v;
    }
    return resolved;
  }

  double eval_resolved(const std::vector<double> &resolved, double x, double y, double t) const {
    return eval_node(root_, resolved.data(), x, y, t);
  }

  const std::vector<std::string> &symbols() const { return symbols_; }
  const std::string &source() const { return source_; }

  // Structurally zero (a literal 0, possibly negated); used for solver selection.
  bool is_literal_zero() const {
    int n = root_;
    while (n >= 0 && nodes_[n].op == detail::NodeOp::kNeg) n = nodes_[n].a;
    return n >= 0 && nodes_[n].op == detail::NodeOp::kLiteral && nodes_[n].value == 0.0;
  }

  std::string print() const {
    std::ostringstream os;
    print_node(os, root_, 0);
    return os.str();
  }

private:
  friend class ExprParser;

  double eval_node(int n, const double *resolved, double x, double y, double t) const;
  void print_node(std::ostream &os, int n, int parent_prec) const;

  std::vector<detail::Node> nodes_;
  std::vector<std::string> symbols_;
  int root_ = -1;
  std::string source_;
};

inline double eval(const Expr &e, const Bindings &b, double x, double y, double t) {
  return e.eval(b, x, y, t);
}

inline std::vector<double> vector_eval(const std::vector<Expr> &exprs, const Bindings &b,
                                       double x, double y, double t) {
  std::vector<double> out;
  out.reserve(exprs.size());
  for (const Expr &e : exprs) out.push_back(e.eval(b, x, y, t));
  return out;
}

// ---------------------------------------------------------------------------

class ExprParser {
public:
  explicit ExprParser(const std::string &src) : src_(src) {}

  Expr run() {
    if (src_.find_first_not_of(" \t\r\n") == std::string::npos)
      throw ParseError("empty expression", 0);
    Expr e;
    e.source_ = src_;
    out_ = &e;
    pos_ = 0;
    e.root_ = parse_comparison();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

private:
  using NodeOp = detail::NodeOp;

  int add(detail::Node n) {
    out_->nodes_.push_back(n);
    return static_cast<int>(out_->nodes_.size()) - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  int parse_comparison() {
    int lhs = parse_additive();
    skip_ws();
    std::size_t at = pos_;
    NodeOp op;
    if (match("<=")) op = NodeOp::kLe;
    else if (match(">=")) op = NodeOp::kGe;
    else if (match("==")) op = NodeOp::kEq;
    else if (match("<")) op = NodeOp::kLt;
    else if (match(">")) op = NodeOp::kGt;
    else return lhs;
    int rhs = parse_additive();
    return add({op, 0.0, -1, lhs, rhs, -1, at});
  }

  int parse_additive() {
    int lhs = parse_multiplicative();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (eat('+')) lhs = add({NodeOp::kAdd, 0.0, -1, lhs, parse_multiplicative(), -1, at});
      else if (eat('-')) lhs = add({NodeOp::kSub, 0.0, -1, lhs, parse_multiplicative(), -1, at});
      else return lhs;
    }
  }

  int parse_multiplicative() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (eat('*')) lhs = add({NodeOp::kMul, 0.0, -1, lhs, parse_unary(), -1, at});
      else if (eat('/')) lhs = add({NodeOp::kDiv, 0.0, -1, lhs, parse_unary(), -1, at});
      else return lhs;
    }
  }

  int parse_unary() {
    skip_ws();
    std::size_t at = pos_;
    if (eat('-')) return add({NodeOp::kNeg, 0.0, -1, parse_unary(), -1, -1, at});
    return parse_power();
  }

  // '^' binds tighter than unary minus on its base: -x^2 is -(x^2).
  // The exponent itself may carry a unary minus: x^-2.
  int parse_power() {
    int base = parse_primary();
    skip_ws();
    std::size_t at = pos_;
    if (eat('^')) return add({NodeOp::kPow, 0.0, -1, base, parse_unary(), -1, at});
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    std::size_t at = pos_;
    char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      int inner = parse_comparison();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char *start = src_.c_str() + pos_;
      char *end = nullptr;
      double v = std::strtod(start, &end);
      if (end == start) throw ParseError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(end - start);
      return add({NodeOp::kLiteral, v, -1, -1, -1, -1, at});
    }

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = pos_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      std::string name = src_.substr(pos_, j - pos_);
      pos_ = j;
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') return parse_call(name, at);
      if (name == "x") return add({NodeOp::kVarX, 0.0, -1, -1, -1, -1, at});
      if (name == "y") return add({NodeOp::kVarY, 0.0, -1, -1, -1, -1, at});
      if (name == "t") return add({NodeOp::kVarT, 0.0, -1, -1, -1, -1, at});
      return add({NodeOp::kConst, 0.0, intern(name), -1, -1, -1, at});
    }

    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_call(const std::string &name, std::size_t at) {
    eat('(');
    std::vector<int> args;
    if (peek() != ')') {
      args.push_back(parse_comparison());
      while (eat(',')) args.push_back(parse_comparison());
    }
    if (!eat(')')) throw ParseError("expected ')' in call to '" + name + "'", pos_);

    static const std::map<std::string, NodeOp> kUnary = {
        {"exp", NodeOp::kExp}, {"sin", NodeOp::kSin},   {"cos", NodeOp::kCos},
        {"log", NodeOp::kLog}, {"abs", NodeOp::kAbs},   {"sqrt", NodeOp::kSqrt}};
    auto it = kUnary.find(name);
    if (it != kUnary.end()) {
      if (args.size() != 1)
        throw ParseError("'" + name + "' takes 1 argument, got " + std::to_string(args.size()), at);
      return add({it->second, 0.0, -1, args[0], -1, -1, at});
    }
    if (name == "if") {
      if (args.size() != 3)
        throw ParseError("'if' takes 3 arguments, got " + std::to_string(args.size()), at);
      return add({NodeOp::kIf, 0.0, -1, args[0], args[1], args[2], at});
    }
    throw ParseError("unknown function '" + name + "'", at);
  }

  bool match(const char *s) {
    std::size_t n = std::strlen(s);
    if (src_.compare(pos_, n, s) == 0) {
      pos_ += n;
      return true;
    }
    return false;
  }

  int intern(const std::string &name) {
    for (std::size_t i = 0; i < out_->symbols_.size(); ++i)
      if (out_->symbols_[i] == name) return static_cast<int>(i);
    out_->symbols_.push_back(name);
    return static_cast<int>(out_->symbols_.size()) - 1;
  }

  const std::string &src_;
  std::size_t pos_ = 0;
  Expr *out_ = nullptr;
};

inline Expr Expr::parse(const std::string &source) { return ExprParser(source).run(); }

// Semicolon-separated components, e.g. "vmax*y; 0".
inline std::vector<Expr> Expr::parse_vector(const std::string &source) {
  std::vector<Expr> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t semi = source.find(';', start);
    std::string part = source.substr(start, semi == std::string::npos ? semi : semi - start);
    out.push_back(parse(part));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  if (out.size() > 2) throw Error("vector expression has more than 2 components: '" + source + "'");
  return out;
}

inline double Expr::eval_node(int n, const double *resolved, double x, double y, double t) const {
  using detail::NodeOp;
  const detail::Node &nd = nodes_[static_cast<std::size_t>(n)];
  auto check = [&](double v) {
    if (!std::isfinite(v))
      throw EvalError("non-finite value at byte " + std::to_string(nd.offset) +
                      " of expression '" + source_ + "'");
    return v;
  };
  switch (nd.op) {
    case NodeOp::kLiteral: return nd.value;
    case NodeOp::kVarX: return x;
    case NodeOp::kVarY: return y;
    case NodeOp::kVarT: return t;
    case NodeOp::kConst: return resolved[nd.sym];
    case NodeOp::kNeg: return -eval_node(nd.a, resolved, x, y, t);
    case NodeOp::kAdd:
      return check(eval_node(nd.a, resolved, x, y, t) + eval_node(nd.b, resolved, x, y, t));
    case NodeOp::kSub:
      return check(eval_node(nd.a, resolved, x, y, t) - eval_node(nd.b, resolved, x, y, t));
    case NodeOp::kMul:
      return check(eval_node(nd.a, resolved, x, y, t) * eval_node(nd.b, resolved, x, y, t));
    case NodeOp::kDiv:
      return check(eval_node(nd.a, resolved, x, y, t) / eval_node(nd.b, resolved, x, y, t));
    case NodeOp::kPow:
      return check(std::pow(eval_node(nd.a, resolved, x, y, t), eval_node(nd.b, resolved, x, y, t)));
    case NodeOp::kLt:
      return eval_node(nd.a, resolved, x, y, t) < eval_node(nd.b, resolved, x, y, t) ? 1.0 : 0.0;
    case NodeOp::kLe:
      return eval_node(nd.a, resolved, x, y, t) <= eval_node(nd.b, resolved, x, y, t) ? 1.0 : 0.0;
    case NodeOp::kGt:
      return eval_node(nd.a, resolved, x, y, t) > eval_node(nd.b, resolved, x, y, t) ? 1.0 : 0.0;
    case NodeOp::kGe:
      return eval_node(nd.a, resolved, x, y, t) >= eval_node(nd.b, resolved, x, y, t) ? 1.0 : 0.0;
    case NodeOp::kEq:
      return eval_node(nd.a, resolved, x, y, t) == eval_node(nd.b, resolved, x, y, t) ? 1.0 : 0.0;
    case NodeOp::kExp: return check(std::exp(eval_node(nd.a, resolved, x, y, t)));
    case NodeOp::kSin: return std::sin(eval_node(nd.a, resolved, x, y, t));
    case NodeOp::kCos: return std::cos(eval_node(nd.a, resolved, x, y, t));
    case NodeOp::kLog: return check(std::log(eval_node(nd.a, resolved, x, y, t)));
    case NodeOp::kAbs: return std::abs(eval_node(nd.a, resolved, x, y, t));
    case NodeOp::kSqrt: return check(std::sqrt(eval_node(nd.a, resolved, x, y, t)));
    case NodeOp::kIf:
      // Only the selected branch is evaluated, so a guard like
      // if(y < epsilon, <limit form>, <general form>) never trips 0/0.
      return eval_node(nd.a, resolved, x, y, t) != 0.0 ? eval_node(nd.b, resolved, x, y, t)
                                                       : eval_node(nd.c, resolved, x, y, t);
  }
  throw EvalError("corrupt expression node");
}

inline void Expr::print_node(std::ostream &os, int n, int parent_prec) const {
  using detail::NodeOp;
  const detail::Node &nd = nodes_[static_cast<std::size_t>(n)];
  // Precedence levels: 0 comparison, 1 additive, 2 multiplicative, 3 unary, 4 power, 5 atom.
  auto binop = [&](const char *sym, int prec, int lhs_prec, int rhs_prec) {
    bool parens = prec < parent_prec;
    if (parens) os << '(';
    print_node(os, nd.a, lhs_prec);
    os << ' ' << sym << ' ';
    print_node(os, nd.b, rhs_prec);
    if (parens) os << ')';
  };
  auto call = [&](const char *name) {
    os << name << '(';
    print_node(os, nd.a, 0);
    os << ')';
  };
  switch (nd.op) {
    case NodeOp::kLiteral: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << nd.value;
      os << tmp.str();
      break;
    }
    case NodeOp::kVarX: os << 'x'; break;
    case NodeOp::kVarY: os << 'y'; break;
    case NodeOp::kVarT: os << 't'; break;
    case NodeOp::kConst: os << symbols_[static_cast<std::size_t>(nd.sym)]; break;
    case NodeOp::kNeg:
      if (parent_prec > 3) os << '(';
      os << '-';
      print_node(os, nd.a, 3);
      if (parent_prec > 3) os << ')';
      break;
    case NodeOp::kAdd: binop("+", 1, 1, 1); break;
    case NodeOp::kSub: binop("-", 1, 1, 2); break;
    case NodeOp::kMul: binop("*", 2, 2, 2); break;
    case NodeOp::kDiv: binop("/", 2, 2, 3); break;
    case NodeOp::kPow: {
      bool parens = 4 < parent_prec;
      if (parens) os << '(';
      print_node(os, nd.a, 5);
      os << '^';
      print_node(os, nd.b, 3);  // exponent may be unary
      if (parens) os << ')';
      break;
    }
    case NodeOp::kLt: binop("<", 0, 1, 1); break;
    case NodeOp::kLe: binop("<=", 0, 1, 1); break;
    case NodeOp::kGt: binop(">", 0, 1, 1); break;
    case NodeOp::kGe: binop(">=", 0, 1, 1); break;
    case NodeOp::kEq: binop("==", 0, 1, 1); break;
    case NodeOp::kExp: call("exp"); break;
    case NodeOp::kSin: call("sin"); break;
    case NodeOp::kCos: call("cos"); break;
    case NodeOp::kLog: call("log"); break;
    case NodeOp::kAbs: call("abs"); break;
    case NodeOp::kSqrt: call("sqrt"); break;
    case NodeOp::kIf:
      os << "if(";
      print_node(os, nd.a, 0);
      os << ", ";
      print_node(os, nd.b, 0);
      os << ", ";
      print_node(os, nd.c, 0);
      os << ')';
      break;
  }
}

}  // namespace meltsim
