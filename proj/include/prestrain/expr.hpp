#ifndef PRESTRAIN_EXPR_HPP_
#define PRESTRAIN_EXPR_HPP_

// Scalar expressions in x1, x2, x3 and t: parsing, printing, evaluation and
// symbolic differentiation. Expr is an immutable shared tree; copies are cheap.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prestrain/errors.hpp"

namespace prestrain {

enum class Var : std::uint8_t { x1 = 0, x2 = 1, x3 = 2, t = 3 };
enum class Func : std::uint8_t { sin, cos, exp, log, sqrt, tanh };
enum class Op : std::uint8_t { add, sub, mul, div, pow };
enum class Constant : std::uint8_t { pi, e };

inline constexpr std::array<Var, 4> kAllVars{Var::x1, Var::x2, Var::x3, Var::t};

inline std::string_view var_name(Var v) {
  static constexpr std::array<std::string_view, 4> names{"x1", "x2", "x3", "t"};
  return names[static_cast<std::size_t>(v)];
}

inline std::string_view func_name(Func f) {
  static constexpr std::array<std::string_view, 6> names{"sin", "cos", "exp", "log", "sqrt", "tanh"};
  return names[static_cast<std::size_t>(f)];
}

class Expr {
 public:
  enum class Kind : std::uint8_t { number, constant, variable, negate, binary, call };

  Expr() : Expr(number(0.0)) {}

  static Expr number(double v) { return Expr(std::make_shared<Node>(Kind::number, v)); }
  static Expr constant(Constant c) {
    Node n(Kind::constant, c == Constant::pi ? std::numbers::pi : std::numbers::e);
    n.constant = c;
    return Expr(std::make_shared<Node>(std::move(n)));
  }
  static Expr variable(Var v) {
    Node n(Kind::variable);
    n.var = v;
    return Expr(std::make_shared<Node>(std::move(n)));
  }
  // Raw constructors keep the tree exactly as given; the free functions
  // below (operator+, pow, ...) fold and simplify.
  static Expr raw_negate(Expr a) {
    Node n(Kind::negate);
    n.lhs = std::make_shared<Expr>(std::move(a));
    return Expr(std::make_shared<Node>(std::move(n)));
  }
  static Expr raw_binary(Op op, Expr a, Expr b) {
    Node n(Kind::binary);
    n.op = op;
    n.lhs = std::make_shared<Expr>(std::move(a));
    n.rhs = std::make_shared<Expr>(std::move(b));
    return Expr(std::make_shared<Node>(std::move(n)));
  }
  static Expr raw_call(Func f, Expr a) {
    Node n(Kind::call);
    n.func = f;
    n.lhs = std::make_shared<Expr>(std::move(a));
    return Expr(std::make_shared<Node>(std::move(n)));
  }

  Kind kind() const { return node_->kind; }
  double value() const { return node_->value; }
  Constant constant_id() const { return node_->constant; }
  Var var() const { return node_->var; }
  Op op() const { return node_->op; }
  Func func() const { return node_->func; }
  const Expr& lhs() const { return *node_->lhs; }
  const Expr& rhs() const { return *node_->rhs; }
  const Expr& arg() const { return *node_->lhs; }

  bool is_number() const { return kind() == Kind::number; }
  bool is_number(double v) const { return is_number() && value() == v; }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case Kind::number: return a.value() == b.value();
      case Kind::constant: return a.constant_id() == b.constant_id();
      case Kind::variable: return a.var() == b.var();
      case Kind::negate: return a.arg() == b.arg();
      case Kind::binary: return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
      case Kind::call: return a.func() == b.func() && a.arg() == b.arg();
    }
    return false;
  }

 private:
  struct Node {
    Node(Kind k, double v = 0.0) : kind(k), value(v) {}
    Kind kind;
    double value;
    Constant constant = Constant::pi;
    Var var = Var::x1;
    Op op = Op::add;
    Func func = Func::sin;
    std::shared_ptr<const Expr> lhs;
    std::shared_ptr<const Expr> rhs;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// ---- simplifying constructors -------------------------------------------

inline Expr operator-(const Expr& a) {
  if (a.is_number()) return Expr::number(-a.value());
  return Expr::raw_negate(a);
}

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() + b.value());
  if (a.is_number(0.0)) return b;
  if (b.is_number(0.0)) return a;
  return Expr::raw_binary(Op::add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() - b.value());
  if (b.is_number(0.0)) return a;
  if (a.is_number(0.0)) return -b;
  return Expr::raw_binary(Op::sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() * b.value());
  if (a.is_number(0.0) || b.is_number(0.0)) return Expr::number(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  if (a.is_number(-1.0)) return -b;
  if (b.is_number(-1.0)) return -a;
  return Expr::raw_binary(Op::mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number() && b.value() != 0.0) return Expr::number(a.value() / b.value());
  if (a.is_number(0.0)) return Expr::number(0.0);
  if (b.is_number(1.0)) return a;
  return Expr::raw_binary(Op::div, a, b);
}

inline Expr pow(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) {
    const double v = std::pow(a.value(), b.value());
    if (std::isfinite(v)) return Expr::number(v);
  }
  if (b.is_number(1.0)) return a;
  if (b.is_number(0.0)) return Expr::number(1.0);
  return Expr::raw_binary(Op::pow, a, b);
}

inline Expr apply(Func f, const Expr& a) { return Expr::raw_call(f, a); }

inline Expr operator*(double a, const Expr& b) { return Expr::number(a) * b; }
inline Expr operator+(const Expr& a, double b) { return a + Expr::number(b); }

// ---- queries --------------------------------------------------------------

inline bool depends_on(const Expr& e, Var v) {
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return false;
    case Expr::Kind::variable: return e.var() == v;
    case Expr::Kind::negate:
    case Expr::Kind::call: return depends_on(e.arg(), v);
    case Expr::Kind::binary: return depends_on(e.lhs(), v) || depends_on(e.rhs(), v);
  }
  return false;
}

inline bool is_constant_expr(const Expr& e) {
  for (Var v : kAllVars)
    if (depends_on(e, v)) return false;
  return true;
}

// ---- printing -------------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Binding strength used for minimal parenthesisation.
inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::number: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    case Expr::Kind::constant:
    case Expr::Kind::variable:
    case Expr::Kind::call: return 5;
    case Expr::Kind::negate: return 3;
    case Expr::Kind::binary:
      switch (e.op()) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::pow: return 4;
      }
  }
  return 5;
}

inline void print(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

inline void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::number: out += format_number(e.value()); return;
    case Expr::Kind::constant: out += e.constant_id() == Constant::pi ? "pi" : "e"; return;
    case Expr::Kind::variable: out += var_name(e.var()); return;
    case Expr::Kind::negate:
      out += '-';
      print_wrapped(e.arg(), precedence(e.arg()) < 3, out);
      return;
    case Expr::Kind::call:
      out += func_name(e.func());
      out += '(';
      print(e.arg(), out);
      out += ')';
      return;
    case Expr::Kind::binary: {
      const int p = precedence(e);
      static constexpr std::array<std::string_view, 5> symbols{" + ", " - ", "*", "/", "^"};
      if (e.op() == Op::pow) {
        // Right-associative: the base needs parens at equal precedence, the exponent does not.
        print_wrapped(e.lhs(), precedence(e.lhs()) <= p, out);
        out += '^';
        print_wrapped(e.rhs(), precedence(e.rhs()) < 3, out);
        return;
      }
      print_wrapped(e.lhs(), precedence(e.lhs()) < p, out);
      out += symbols[static_cast<std::size_t>(e.op())];
      print_wrapped(e.rhs(), precedence(e.rhs()) <= p, out);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out);
  return out;
}

// ---- parsing --------------------------------------------------------------

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr run() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r'))
      ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::raw_binary(Op::add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Expr::raw_binary(Op::sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::raw_binary(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::raw_binary(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::raw_negate(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::raw_binary(Op::pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("expected operand, found end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError("expected operand, found '" + std::string(1, c) + "'", pos_);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && src_[look] >= '0' && src_[look] <= '9') {
        pos_ = look;
        digits();
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::number(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);
    for (Var v : kAllVars)
      if (id == var_name(v)) return Expr::variable(v);
    if (id == "pi") return Expr::constant(Constant::pi);
    if (id == "e") return Expr::constant(Constant::e);
    for (Func f : {Func::sin, Func::cos, Func::exp, Func::log, Func::sqrt, Func::tanh}) {
      if (id != func_name(f)) continue;
      if (!accept('(')) throw ParseError("expected '(' after function " + std::string(id), pos_);
      Expr arg = parse_sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return Expr::raw_call(f, arg);
    }
    throw ParseError("unknown identifier '" + std::string(id) + "'", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view src) { return detail::Parser(src).run(); }

// ---- evaluation -----------------------------------------------------------

/// Variable bindings; reading an unbound variable throws.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<std::pair<Var, double>> init) {
    for (auto [v, x] : init) set(v, x);
  }
  Env& set(Var v, double x) {
    values_[static_cast<std::size_t>(v)] = x;
    return *this;
  }
  std::optional<double> get(Var v) const { return values_[static_cast<std::size_t>(v)]; }

 private:
  std::array<std::optional<double>, 4> values_{};
};

namespace detail {

inline double apply_func(Func f, double a) {
  switch (f) {
    case Func::sin: return std::sin(a);
    case Func::cos: return std::cos(a);
    case Func::exp: return std::exp(a);
    case Func::tanh: return std::tanh(a);
    case Func::log:
      if (!(a > 0.0)) throw DomainError("log of non-positive argument " + format_number(a));
      return std::log(a);
    case Func::sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative argument " + format_number(a));
      return std::sqrt(a);
  }
  return 0.0;
}

inline double apply_op(Op op, double a, double b) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    case Op::pow: {
      const double v = std::pow(a, b);
      if (std::isnan(v)) throw DomainError("pow of negative base with non-integer exponent");
      return v;
    }
  }
  return 0.0;
}

}  // namespace detail

inline double eval(const Expr& e, const Env& env) {
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return e.value();
    case Expr::Kind::variable: {
      auto v = env.get(e.var());
      if (!v) throw UnboundVariable("unbound variable " + std::string(var_name(e.var())));
      return *v;
    }
    case Expr::Kind::negate: return -eval(e.arg(), env);
    case Expr::Kind::call: return detail::apply_func(e.func(), eval(e.arg(), env));
    case Expr::Kind::binary: return detail::apply_op(e.op(), eval(e.lhs(), env), eval(e.rhs(), env));
  }
  return 0.0;
}

/// Flattened postfix program for hot loops. All four variables are passed
/// positionally, so binding is checked by the caller.
class CompiledExpr {
 public:
  CompiledExpr() : CompiledExpr(Expr::number(0.0)) {}
  explicit CompiledExpr(const Expr& e) {
    emit(e);
    std::size_t depth = 0;
    for (const auto& in : code_) {
      depth += in.kind == Instr::Kind::push_const || in.kind == Instr::Kind::push_var ? 1 : 0;
      depth -= in.kind == Instr::Kind::binary ? 1 : 0;
      max_depth_ = std::max(max_depth_, depth);
    }
    if (code_.size() == 1 && code_[0].kind == Instr::Kind::push_const) constant_ = code_[0].value;
  }

  bool is_constant() const { return constant_.has_value(); }

  double operator()(const std::array<double, 4>& vars) const {
    if (constant_) return *constant_;
    double stack[64] = {};
    double* heap = nullptr;
    std::vector<double> big;
    if (max_depth_ > 64) {
      big.resize(max_depth_);
      heap = big.data();
    }
    double* s = heap ? heap : stack;
    std::size_t top = 0;
    for (const auto& in : code_) {
      switch (in.kind) {
        case Instr::Kind::push_const: s[top++] = in.value; break;
        case Instr::Kind::push_var: s[top++] = vars[in.index]; break;
        case Instr::Kind::negate: s[top - 1] = -s[top - 1]; break;
        case Instr::Kind::call: s[top - 1] = detail::apply_func(static_cast<Func>(in.index), s[top - 1]); break;
        case Instr::Kind::binary:
          --top;
          s[top - 1] = detail::apply_op(static_cast<Op>(in.index), s[top - 1], s[top]);
          break;
      }
    }
    return s[0];
  }

 private:
  struct Instr {
    enum class Kind : std::uint8_t { push_const, push_var, negate, call, binary } kind;
    std::uint8_t index = 0;
    double value = 0.0;
  };

  void emit(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::number:
      case Expr::Kind::constant: code_.push_back({Instr::Kind::push_const, 0, e.value()}); return;
      case Expr::Kind::variable:
        code_.push_back({Instr::Kind::push_var, static_cast<std::uint8_t>(e.var()), 0.0});
        return;
      case Expr::Kind::negate:
        emit(e.arg());
        code_.push_back({Instr::Kind::negate});
        return;
      case Expr::Kind::call:
        emit(e.arg());
        code_.push_back({Instr::Kind::call, static_cast<std::uint8_t>(e.func())});
        return;
      case Expr::Kind::binary:
        emit(e.lhs());
        emit(e.rhs());
        code_.push_back({Instr::Kind::binary, static_cast<std::uint8_t>(e.op())});
        return;
    }
  }

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
  std::optional<double> constant_;
};

// ---- differentiation ------------------------------------------------------

inline Expr diff(const Expr& e, Var v) {
  const Expr zero = Expr::number(0.0);
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return zero;
    case Expr::Kind::variable: return Expr::number(e.var() == v ? 1.0 : 0.0);
    case Expr::Kind::negate: return -diff(e.arg(), v);
    case Expr::Kind::call: {
      const Expr& u = e.arg();
      const Expr du = diff(u, v);
      if (du.is_number(0.0)) return zero;
      switch (e.func()) {
        case Func::sin: return du * apply(Func::cos, u);
        case Func::cos: return -(du * apply(Func::sin, u));
        case Func::exp: return du * e;
        case Func::log: return du / u;
        case Func::sqrt: return du / (Expr::number(2.0) * e);
        case Func::tanh: return du * (Expr::number(1.0) - pow(e, Expr::number(2.0)));
      }
      return zero;
    }
    case Expr::Kind::binary: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      switch (e.op()) {
        case Op::add: return diff(a, v) + diff(b, v);
        case Op::sub: return diff(a, v) - diff(b, v);
        case Op::mul: return diff(a, v) * b + a * diff(b, v);
        case Op::div: return (diff(a, v) * b - a * diff(b, v)) / pow(b, Expr::number(2.0));
        case Op::pow: {
          if (!depends_on(b, v)) return b * pow(a, b - Expr::number(1.0)) * diff(a, v);
          if (!depends_on(a, v)) return e * apply(Func::log, a) * diff(b, v);
          return e * (diff(b, v) * apply(Func::log, a) + b * diff(a, v) / a);
        }
      }
      return zero;
    }
  }
  return zero;
}

/// Replaces every occurrence of variable v by `with`, folding literal subtrees.
inline Expr substitute(const Expr& e, Var v, const Expr& with) {
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return e;
    case Expr::Kind::variable: return e.var() == v ? with : e;
    case Expr::Kind::negate: return -substitute(e.arg(), v, with);
    case Expr::Kind::call: {
      Expr a = substitute(e.arg(), v, with);
      if (a.is_number()) {
        try {
          return Expr::number(detail::apply_func(e.func(), a.value()));
        } catch (const DomainError&) {
        }
      }
      return apply(e.func(), a);
    }
    case Expr::Kind::binary: {
      Expr a = substitute(e.lhs(), v, with);
      Expr b = substitute(e.rhs(), v, with);
      switch (e.op()) {
        case Op::add: return a + b;
        case Op::sub: return a - b;
        case Op::mul: return a * b;
        case Op::div: return a / b;
        case Op::pow: return pow(a, b);
      }
    }
  }
  return e;
}

}  // namespace prestrain

#endif  // PRESTRAIN_EXPR_HPP_
