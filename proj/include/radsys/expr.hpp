#pragma once

// Expression language for radial coefficients h(r), a(r) and for the
// nonlinearities f(u1, ..., ud).
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary  := '-'? atom
//   atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//
// func is one of exp, log, sqrt, abs (one argument) or min, max (two or more).
// Note that unary minus binds tighter than '^', so "-r^2" is (-r)^2.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radsys/error.hpp"

namespace radsys {

enum class Role { radial, nonlinearity };

enum class Op { constant, variable, neg, exp, log, sqrt, abs, add, sub, mul, div, pow, min, max };

struct Node {
  Op op = Op::constant;
  double value = 0.0;     // constant
  std::size_t index = 0;  // variable
  std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

namespace detail {

inline std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, end);
  // "1e+20" is fine for the grammar, but "inf"/"nan" never occur: constants are finite.
  return out;
}

inline const char* op_name(Op op) {
  switch (op) {
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::abs: return "abs";
    case Op::min: return "min";
    case Op::max: return "max";
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::pow: return "^";
    default: return "?";
  }
}

inline std::string variable_name(Role role, std::size_t index) {
  return role == Role::radial ? std::string("r") : "u" + std::to_string(index + 1);
}

inline void print_node(const Node& n, Role role, std::string& out) {
  switch (n.op) {
    case Op::constant: out += format_number(n.value); return;
    case Op::variable: out += variable_name(role, n.index); return;
    case Op::neg:
      out += "-(";
      print_node(*n.args[0], role, out);
      out += ')';
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      out += '(';
      print_node(*n.args[0], role, out);
      out += ' ';
      out += op_name(n.op);
      out += ' ';
      print_node(*n.args[1], role, out);
      out += ')';
      return;
    default:
      out += op_name(n.op);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*n.args[i], role, out);
      }
      out += ')';
      return;
  }
}

inline bool same_tree(const Node& a, const Node& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  if (a.op == Op::constant && a.value != b.value) return false;
  if (a.op == Op::variable && a.index != b.index) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_tree(*a.args[i], *b.args[i])) return false;
  return true;
}

}  // namespace detail

// Immutable parsed expression. Copies share the tree.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, Role role, std::size_t variables)
      : root_(std::move(root)), role_(role), variables_(variables) {}

  Role role() const noexcept { return role_; }
  // Number of variables in the environment: 1 for radial, d for nonlinearity.
  std::size_t variables() const noexcept { return variables_; }
  const Node& root() const { return *root_; }
  bool empty() const noexcept { return !root_; }

  double eval(std::span<const double> env) const {
    if (env.size() != variables_)
      throw DomainError("expression expects " + std::to_string(variables_) + " variable(s), got " +
                        std::to_string(env.size()));
    for (double v : env)
      if (!std::isfinite(v)) throw DomainError("non-finite input to '" + to_string() + "'" + where(env));
    return eval_node(*root_, env);
  }

  // Radial convenience.
  double operator()(double r) const { return eval(std::span<const double>(&r, 1)); }

  // Nonlinearity on the diagonal (s, ..., s).
  double diagonal(double s) const {
    std::vector<double> env(variables_, s);
    return eval(env);
  }

  std::string to_string() const {
    std::string out;
    detail::print_node(*root_, role_, out);
    return out;
  }

  // Set of variable indices that occur in the expression.
  std::vector<std::size_t> used_variables() const {
    std::vector<std::size_t> out;
    collect(*root_, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool structurally_equal(const Expr& a, const Expr& b) {
    return a.role_ == b.role_ && a.variables_ == b.variables_ && detail::same_tree(*a.root_, *b.root_);
  }

 private:
  static void collect(const Node& n, std::vector<std::size_t>& out) {
    if (n.op == Op::variable) out.push_back(n.index);
    for (const auto& a : n.args) collect(*a, out);
  }

  std::string where(std::span<const double> env) const {
    std::ostringstream os;
    os.precision(17);
    os << " at ";
    for (std::size_t i = 0; i < env.size(); ++i) {
      if (i) os << ", ";
      os << detail::variable_name(role_, i) << "=" << env[i];
    }
    return os.str();
  }

  [[noreturn]] void fail(const Node& n, const std::string& what, std::span<const double> env) const {
    std::string sub;
    detail::print_node(n, role_, sub);
    throw DomainError(what + " in '" + sub + "'" + where(env));
  }

  double checked(const Node& n, double v, std::span<const double> env) const {
    if (!std::isfinite(v)) fail(n, "non-finite result", env);
    return v;
  }

  double eval_node(const Node& n, std::span<const double> env) const {
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::variable: return env[n.index];
      case Op::neg: return -eval_node(*n.args[0], env);
      case Op::exp: return checked(n, std::exp(eval_node(*n.args[0], env)), env);
      case Op::log: {
        double x = eval_node(*n.args[0], env);
        if (!(x > 0.0)) fail(n, "log of nonpositive argument", env);
        return std::log(x);
      }
      case Op::sqrt: {
        double x = eval_node(*n.args[0], env);
        if (x < 0.0) fail(n, "sqrt of negative argument", env);
        return std::sqrt(x);
      }
      case Op::abs: return std::fabs(eval_node(*n.args[0], env));
      case Op::add: return checked(n, eval_node(*n.args[0], env) + eval_node(*n.args[1], env), env);
      case Op::sub: return checked(n, eval_node(*n.args[0], env) - eval_node(*n.args[1], env), env);
      case Op::mul: return checked(n, eval_node(*n.args[0], env) * eval_node(*n.args[1], env), env);
      case Op::div: {
        double num = eval_node(*n.args[0], env);
        double den = eval_node(*n.args[1], env);
        if (den == 0.0) fail(n, "division by zero", env);
        return checked(n, num / den, env);
      }
      case Op::pow: {
        double base = eval_node(*n.args[0], env);
        double ex = eval_node(*n.args[1], env);
        bool integral = std::nearbyint(ex) == ex;
        if (base < 0.0 && !integral) fail(n, "negative base with non-integer exponent", env);
        if (base == 0.0 && ex < 0.0) fail(n, "division by zero", env);
        return checked(n, std::pow(base, ex), env);
      }
      case Op::min: {
        double v = eval_node(*n.args[0], env);
        for (std::size_t i = 1; i < n.args.size(); ++i) v = std::min(v, eval_node(*n.args[i], env));
        return v;
      }
      case Op::max: {
        double v = eval_node(*n.args[0], env);
        for (std::size_t i = 1; i < n.args.size(); ++i) v = std::max(v, eval_node(*n.args[i], env));
        return v;
      }
    }
    return 0.0;
  }

  NodePtr root_;
  Role role_ = Role::radial;
  std::size_t variables_ = 1;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, Role role, std::size_t d) : text_(text), role_(role), d_(d) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_, {"expression"});
    NodePtr n = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_,
                       {"operator", "')'", "end of input"});
    return n;
  }

 private:
  static NodePtr make(Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::add, {lhs, term()});
      else if (accept('-')) lhs = make(Op::sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Op::mul, {lhs, factor()});
      else if (accept('/')) lhs = make(Op::div, {lhs, factor()});
      else return lhs;
    }
  }

  NodePtr factor() {
    NodePtr base = unary();
    if (accept('^')) return make(Op::pow, {base, factor()});
    return base;
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, {atom()});
    return atom();
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of input", pos_, {"number", "identifier", "'('"});
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!accept(')')) throw ParseError("missing ')'", pos_, {"')'"});
      return inner;
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_, {"number", "identifier", "'('"});
  }

  NodePtr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start, {"digit"});
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) throw ParseError("malformed exponent", pos_, {"digit"});
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || !std::isfinite(v)) throw ParseError("number out of range", start);
    auto node = std::make_shared<Node>();
    node->op = Op::constant;
    node->value = v;
    return node;
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));

    static constexpr std::pair<std::string_view, Op> funcs[] = {
        {"exp", Op::exp}, {"log", Op::log}, {"sqrt", Op::sqrt},
        {"abs", Op::abs}, {"min", Op::min}, {"max", Op::max}};
    for (auto [fname, op] : funcs) {
      if (name != fname) continue;
      if (!accept('(')) throw ParseError("function '" + name + "' needs arguments", pos_, {"'('"});
      std::vector<NodePtr> args{expr()};
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) throw ParseError("missing ')'", pos_, {"','", "')'"});
      bool variadic = op == Op::min || op == Op::max;
      if (variadic && args.size() < 2)
        throw ArityError(name + " takes at least two arguments", start);
      if (!variadic && args.size() != 1) throw ArityError(name + " takes exactly one argument", start);
      return make(op, std::move(args));
    }

    auto var = std::make_shared<Node>();
    var->op = Op::variable;
    if (role_ == Role::radial) {
      if (name != "r") throw UnknownVariableError(name, start);
      var->index = 0;
      return var;
    }
    if (name.size() >= 2 && name[0] == 'u' && name[1] != '0') {
      std::size_t k = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (res.ec == std::errc() && res.ptr == name.data() + name.size() && k >= 1 && k <= d_) {
        var->index = k - 1;
        return var;
      }
    }
    throw UnknownVariableError(name, start);
  }

  std::string_view text_;
  Role role_;
  std::size_t d_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses `text` for the given role. For Role::radial `d` is ignored and the
// only variable is r; for Role::nonlinearity the variables are u1..ud.
inline Expr parse(std::string_view text, Role role, std::size_t d = 1) {
  if (role == Role::nonlinearity && d == 0) throw ParseError("component count must be >= 1", 0);
  detail::Parser p(text, role, d);
  NodePtr root = p.parse();
  return Expr(std::move(root), role, role == Role::radial ? 1 : d);
}

inline Expr parse_radial(std::string_view text) { return parse(text, Role::radial, 1); }
inline Expr parse_nonlinearity(std::string_view text, std::size_t d) {
  return parse(text, Role::nonlinearity, d);
}

// ---------------------------------------------------------------------------
// Sampled hypothesis checks

enum class Property { nonnegativity, monotone };

inline const char* to_string(Property p) {
  return p == Property::nonnegativity ? "nonnegativity" : "monotone-nondecreasing";
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct ValidationReport {
  Property property = Property::nonnegativity;
  std::string grid;  // human-readable description of the sample grid
  bool passed = true;
  std::size_t points = 0;
  // On failure: the violating sample. For monotonicity `witness` is the
  // upper point of the pair and `witness_pair` the lower one; `violation` is
  // f(lower) - f(upper) > 0. For nonnegativity `violation` is -f(witness) > 0.
  std::vector<double> witness;
  std::vector<double> witness_pair;
  double witness_value = 0.0;
  double violation = 0.0;
};

// Checks `property` on a deterministic tensor grid with `samples` equally
// spaced points per axis (endpoints included). The result is evidence, not
// a proof. Evaluation errors propagate as DomainError.
inline ValidationReport validate_sampled(const Expr& e, Property property, std::span<const Interval> box,
                                         std::size_t samples) {
  if (box.size() != e.variables())
    throw std::invalid_argument("validate_sampled: box dimension does not match expression");
  if (samples < 2) throw std::invalid_argument("validate_sampled: need at least 2 samples per axis");
  for (const auto& iv : box)
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi))
      throw std::invalid_argument("validate_sampled: box must be finite and nondegenerate");

  const std::size_t dims = box.size();
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims; ++k) total *= samples;

  auto coord = [&](std::size_t axis, std::size_t i) {
    const auto& iv = box[axis];
    return i + 1 == samples ? iv.hi : iv.lo + (iv.hi - iv.lo) * double(i) / double(samples - 1);
  };
  auto point_of = [&](std::size_t flat) {
    std::vector<double> x(dims);
    for (std::size_t k = 0; k < dims; ++k) {
      x[k] = coord(k, flat % samples);
      flat /= samples;
    }
    return x;
  };

  std::vector<double> values(total);
  for (std::size_t flat = 0; flat < total; ++flat) values[flat] = e.eval(point_of(flat));

  ValidationReport rep;
  rep.property = property;
  rep.points = total;
  {
    std::ostringstream os;
    os.precision(17);
    os << "tensor grid " << samples << "^" << dims << " on ";
    for (std::size_t k = 0; k < dims; ++k) {
      if (k) os << " x ";
      os << "[" << box[k].lo << ", " << box[k].hi << "]";
    }
    rep.grid = os.str();
  }

  if (property == Property::nonnegativity) {
    for (std::size_t flat = 0; flat < total; ++flat) {
      if (values[flat] < 0.0 && -values[flat] > rep.violation) {
        rep.passed = false;
        rep.violation = -values[flat];
        rep.witness = point_of(flat);
        rep.witness_value = values[flat];
      }
    }
    return rep;
  }

  std::size_t stride = 1;
  for (std::size_t axis = 0; axis < dims; ++axis, stride *= samples) {
    for (std::size_t flat = 0; flat < total; ++flat) {
      if ((flat / stride) % samples + 1 == samples) continue;
      double drop = values[flat] - values[flat + stride];
      if (drop > 0.0 && drop > rep.violation) {
        rep.passed = false;
        rep.violation = drop;
        rep.witness = point_of(flat + stride);
        rep.witness_pair = point_of(flat);
        rep.witness_value = values[flat + stride];
      }
    }
  }
  return rep;
}

}  // namespace radsys
