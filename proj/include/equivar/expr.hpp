#pragma once

// Immutable symbolic scalar expressions.
//
// Nodes are shared and never mutated, so an Expr is cheap to copy and safe to
// read from many threads. Construction goes through the smart constructors
// below, which apply a deliberately small set of simplifications: constant
// folding, 0/1 identities, double negation and flattening of sums/products.
// Nothing else is rewritten; identities are decided numerically (zero_test.hpp).

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "equivar/error.hpp"

namespace equivar {

enum class Op : std::uint8_t {
  Constant,
  Variable,
  Add,
  Mul,
  Neg,
  Div,
  Pow,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Atan,
};

/// Variable name -> value. Lookups of missing names raise UnboundVariable.
using Assignment = std::map<std::string, double, std::less<>>;

class Expr {
 public:
  struct Node;

  Expr();                      // the constant 0
  Expr(double value);          // NOLINT: implicit so that `2.0 * x` reads naturally
  Expr(int value) : Expr(static_cast<double>(value)) {}  // NOLINT

  static Expr variable(std::string name);

  Op op() const noexcept;
  double value() const noexcept;           // Constant only
  const std::string& name() const noexcept;  // Variable only
  std::span<const Expr> args() const noexcept;
  const Expr& arg(std::size_t i) const noexcept { return args()[i]; }

  std::size_t hash() const noexcept;
  /// Bloom mask of the variable names below this node. A clear bit proves absence.
  std::uint64_t var_mask() const noexcept;
  const Node* id() const noexcept { return node_.get(); }

  bool is_constant() const noexcept { return op() == Op::Constant; }
  bool is_constant(double c) const noexcept { return is_constant() && value() == c; }
  bool is_variable() const noexcept { return op() == Op::Variable; }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

  static Expr make(Op op, std::vector<Expr> args);  // raw node, no simplification

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op = Op::Constant;
  double value = 0.0;
  std::string name;
  std::vector<Expr> args;
  std::size_t hash = 0;
  std::uint64_t var_mask = 0;
};

namespace detail {

inline std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

inline std::uint64_t name_bit(std::string_view name) {
  return std::uint64_t{1} << (std::hash<std::string_view>{}(name) % 64);
}

inline const std::shared_ptr<const Expr::Node>& zero_node() {
  static const auto node = [] {
    auto n = std::make_shared<Expr::Node>();
    n->hash = hash_combine(static_cast<std::size_t>(Op::Constant), std::hash<double>{}(0.0));
    return std::shared_ptr<const Expr::Node>(std::move(n));
  }();
  return node;
}

}  // namespace detail

inline Expr::Expr() : node_(detail::zero_node()) {}

inline Expr::Expr(double value) {
  if (value == 0.0) {
    node_ = detail::zero_node();  // also folds -0.0
    return;
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = value;
  n->hash = detail::hash_combine(static_cast<std::size_t>(Op::Constant), std::hash<double>{}(value));
  node_ = std::move(n);
}

inline Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->hash = detail::hash_combine(static_cast<std::size_t>(Op::Variable), std::hash<std::string>{}(name));
  n->var_mask = detail::name_bit(name);
  n->name = std::move(name);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

inline Expr Expr::make(Op op, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  std::size_t h = static_cast<std::size_t>(op) * 0x100000001b3ULL;
  for (const auto& a : args) {
    h = detail::hash_combine(h, a.hash());
    n->var_mask |= a.var_mask();
  }
  n->hash = h;
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

inline Op Expr::op() const noexcept { return node_->op; }
inline double Expr::value() const noexcept { return node_->value; }
inline const std::string& Expr::name() const noexcept { return node_->name; }
inline std::span<const Expr> Expr::args() const noexcept { return node_->args; }
inline std::size_t Expr::hash() const noexcept { return node_->hash; }
inline std::uint64_t Expr::var_mask() const noexcept { return node_->var_mask; }

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.hash() != b.hash() || a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Constant:
      return a.value() == b.value();
    case Op::Variable:
      return a.name() == b.name();
    default:
      break;
  }
  auto aa = a.args();
  auto bb = b.args();
  return std::equal(aa.begin(), aa.end(), bb.begin(), bb.end());
}

struct ExprHash {
  std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

inline Expr var(std::string name) { return Expr::variable(std::move(name)); }

// ---------------------------------------------------------------------------
// Smart constructors

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr neg(const Expr& x);
Expr div(const Expr& num, const Expr& den);
Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& x);
Expr cos(const Expr& x);
Expr exp(const Expr& x);
Expr log(const Expr& x);
Expr sqrt(const Expr& x);
Expr atan(const Expr& x);

inline Expr add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  double constant = 0.0;
  auto push = [&](const Expr& t) {
    if (t.is_constant())
      constant += t.value();
    else
      flat.push_back(t);
  };
  for (const auto& t : terms) {
    if (t.op() == Op::Add) {
      for (const auto& s : t.args()) push(s);
    } else {
      push(t);
    }
  }
  if (constant != 0.0) flat.emplace_back(constant);
  if (flat.empty()) return Expr{};
  if (flat.size() == 1) return flat.front();
  return Expr::make(Op::Add, std::move(flat));
}

inline Expr mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  double constant = 1.0;
  auto push = [&](const Expr& f) {
    if (f.is_constant())
      constant *= f.value();
    else
      flat.push_back(f);
  };
  for (const auto& f : factors) {
    if (f.op() == Op::Mul) {
      for (const auto& s : f.args()) push(s);
    } else if (f.op() == Op::Neg) {
      constant = -constant;
      push(f.arg(0));
    } else {
      push(f);
    }
  }
  if (constant == 0.0) return Expr{};
  if (flat.empty()) return Expr(constant);
  if (constant == -1.0 && flat.size() == 1) return Expr::make(Op::Neg, {flat.front()});
  if (constant != 1.0) flat.insert(flat.begin(), Expr(constant));
  if (flat.size() == 1) return flat.front();
  return Expr::make(Op::Mul, std::move(flat));
}

inline Expr neg(const Expr& x) {
  switch (x.op()) {
    case Op::Constant:
      return Expr(-x.value());
    case Op::Neg:
      return x.arg(0);
    case Op::Mul:
      if (x.arg(0).is_constant()) {
        std::vector<Expr> f(x.args().begin(), x.args().end());
        f[0] = Expr(-f[0].value());
        return mul(std::move(f));
      }
      break;
    default:
      break;
  }
  return Expr::make(Op::Neg, {x});
}

inline Expr div(const Expr& num, const Expr& den) {
  if (den.is_constant(1.0)) return num;
  if (num.is_constant(0.0)) return Expr{};
  if (num.is_constant() && den.is_constant() && den.value() != 0.0)
    return Expr(num.value() / den.value());
  return Expr::make(Op::Div, {num, den});
}

namespace detail {

inline bool is_integer(double x) { return std::isfinite(x) && std::floor(x) == x; }

inline Expr fold_unary(Op op, const Expr& x, double (*f)(double), bool valid) {
  if (x.is_constant() && valid) {
    double r = f(x.value());
    if (std::isfinite(r)) return Expr(r);
  }
  return Expr::make(op, {x});
}

}  // namespace detail

inline Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_constant(0.0)) return Expr(1.0);
  if (exponent.is_constant(1.0)) return base;
  if (base.is_constant(1.0)) return Expr(1.0);
  if (base.is_constant() && exponent.is_constant()) {
    double b = base.value(), e = exponent.value();
    if ((detail::is_integer(e) && (b != 0.0 || e > 0)) || b > 0.0) {
      double r = std::pow(b, e);
      if (std::isfinite(r)) return Expr(r);
    }
  }
  return Expr::make(Op::Pow, {base, exponent});
}

inline Expr sin(const Expr& x) {
  return detail::fold_unary(Op::Sin, x, [](double v) { return std::sin(v); }, true);
}
inline Expr cos(const Expr& x) {
  return detail::fold_unary(Op::Cos, x, [](double v) { return std::cos(v); }, true);
}
inline Expr exp(const Expr& x) {
  return detail::fold_unary(Op::Exp, x, [](double v) { return std::exp(v); }, true);
}
inline Expr log(const Expr& x) {
  return detail::fold_unary(Op::Log, x, [](double v) { return std::log(v); },
                            x.is_constant() && x.value() > 0.0);
}
inline Expr sqrt(const Expr& x) {
  return detail::fold_unary(Op::Sqrt, x, [](double v) { return std::sqrt(v); },
                            x.is_constant() && x.value() >= 0.0);
}
inline Expr atan(const Expr& x) {
  return detail::fold_unary(Op::Atan, x, [](double v) { return std::atan(v); }, true);
}

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

/// Sum of a range of expressions; empty sums are 0.
inline Expr sum(std::span<const Expr> terms) { return add(std::vector<Expr>(terms.begin(), terms.end())); }

// ---------------------------------------------------------------------------
// Queries

inline bool contains_variable(const Expr& e, std::string_view name) {
  if ((e.var_mask() & detail::name_bit(name)) == 0) return false;
  if (e.is_variable()) return e.name() == name;
  for (const auto& a : e.args())
    if (contains_variable(a, name)) return true;
  return false;
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
  if (e.is_variable()) {
    out.insert(e.name());
    return;
  }
  for (const auto& a : e.args()) collect_variables(a, out);
}

/// Names of all variables occurring in `e`, sorted.
inline std::set<std::string> variables(const Expr& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args()) n += node_count(a);
  return n;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

class Differentiator {
 public:
  explicit Differentiator(std::string_view x) : x_(x), bit_(name_bit(x)) {}

  Expr operator()(const Expr& e) {
    if ((e.var_mask() & bit_) == 0) return Expr{};
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d = compute(e);
    memo_.emplace(e.id(), d);
    return d;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.op()) {
      case Op::Constant:
        return Expr{};
      case Op::Variable:
        return e.name() == x_ ? Expr(1.0) : Expr{};
      case Op::Add: {
        std::vector<Expr> terms;
        for (const auto& a : e.args()) terms.push_back((*this)(a));
        return add(std::move(terms));
      }
      case Op::Mul: {
        std::vector<Expr> terms;
        auto args = e.args();
        for (std::size_t i = 0; i < args.size(); ++i) {
          Expr di = (*this)(args[i]);
          if (di.is_constant(0.0)) continue;
          std::vector<Expr> f(args.begin(), args.end());
          f[i] = di;
          terms.push_back(mul(std::move(f)));
        }
        return add(std::move(terms));
      }
      case Op::Neg:
        return neg((*this)(e.arg(0)));
      case Op::Div: {
        const Expr& a = e.arg(0);
        const Expr& b = e.arg(1);
        Expr da = (*this)(a);
        Expr db = (*this)(b);
        if (db.is_constant(0.0)) return div(da, b);
        return div(da * b - a * db, pow(b, Expr(2.0)));
      }
      case Op::Pow: {
        const Expr& b = e.arg(0);
        const Expr& n = e.arg(1);
        Expr db = (*this)(b);
        Expr dn = (*this)(n);
        if (dn.is_constant(0.0)) return mul({n, pow(b, n - Expr(1.0)), db});
        return e * (dn * log(b) + div(n * db, b));
      }
      case Op::Sin:
        return cos(e.arg(0)) * (*this)(e.arg(0));
      case Op::Cos:
        return neg(sin(e.arg(0)) * (*this)(e.arg(0)));
      case Op::Exp:
        return e * (*this)(e.arg(0));
      case Op::Log:
        return div((*this)(e.arg(0)), e.arg(0));
      case Op::Sqrt:
        return div((*this)(e.arg(0)), Expr(2.0) * e);
      case Op::Atan:
        return div((*this)(e.arg(0)), Expr(1.0) + pow(e.arg(0), Expr(2.0)));
    }
    return Expr{};
  }

  std::string_view x_;
  std::uint64_t bit_;
  std::unordered_map<const Expr::Node*, Expr> memo_;
};

}  // namespace detail

/// Partial derivative of `e` with respect to the variable `x`.
inline Expr differentiate(const Expr& e, std::string_view x) { return detail::Differentiator(x)(e); }

// ---------------------------------------------------------------------------
// Substitution

using Bindings = std::map<std::string, Expr, std::less<>>;

namespace detail {

inline Expr rebuild(const Expr& e, std::vector<Expr> args) {
  switch (e.op()) {
    case Op::Add:
      return add(std::move(args));
    case Op::Mul:
      return mul(std::move(args));
    case Op::Neg:
      return neg(args[0]);
    case Op::Div:
      return div(args[0], args[1]);
    case Op::Pow:
      return pow(args[0], args[1]);
    case Op::Sin:
      return sin(args[0]);
    case Op::Cos:
      return cos(args[0]);
    case Op::Exp:
      return exp(args[0]);
    case Op::Log:
      return log(args[0]);
    case Op::Sqrt:
      return sqrt(args[0]);
    case Op::Atan:
      return atan(args[0]);
    default:
      return e;
  }
}

}  // namespace detail

/// Simultaneous substitution: replacements are never themselves rewritten.
inline Expr substitute(const Expr& e, const Bindings& bindings) {
  std::uint64_t mask = 0;
  for (const auto& [name, _] : bindings) mask |= detail::name_bit(name);
  std::unordered_map<const Expr::Node*, Expr> memo;
  std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
    if ((x.var_mask() & mask) == 0) return x;
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    Expr r;
    if (x.is_variable()) {
      auto it = bindings.find(x.name());
      r = it == bindings.end() ? x : it->second;
    } else {
      std::vector<Expr> args;
      args.reserve(x.args().size());
      for (const auto& a : x.args()) args.push_back(go(a));
      r = detail::rebuild(x, std::move(args));
    }
    memo.emplace(x.id(), r);
    return r;
  };
  return go(e);
}

/// Re-applies the smart constructors bottom-up (useful after Expr::make).
inline Expr simplify(const Expr& e) {
  if (e.args().empty()) return e;
  std::vector<Expr> args;
  for (const auto& a : e.args()) args.push_back(simplify(a));
  return detail::rebuild(e, std::move(args));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double checked(double r, const char* what) {
  if (!std::isfinite(r)) throw DomainError(std::string("non-finite result in ") + what);
  return r;
}

inline double apply_pow(double b, double n) {
  if (is_integer(n)) {
    if (b == 0.0 && n < 0) throw DomainError("division by zero in pow");
    return checked(std::pow(b, n), "pow");
  }
  // non-integer exponents mean exp(n*log(b))
  if (b < 0.0 || (b == 0.0 && n <= 0.0)) throw DomainError("pow with non-integer exponent of nonpositive base");
  return checked(std::pow(b, n), "pow");
}

inline double apply_unary(Op op, double x) {
  switch (op) {
    case Op::Neg:
      return -x;
    case Op::Sin:
      return std::sin(x);
    case Op::Cos:
      return std::cos(x);
    case Op::Exp:
      return checked(std::exp(x), "exp");
    case Op::Log:
      if (!(x > 0.0)) throw DomainError("log of nonpositive argument");
      return std::log(x);
    case Op::Sqrt:
      if (x < 0.0) throw DomainError("sqrt of negative argument");
      return std::sqrt(x);
    case Op::Atan:
      return std::atan(x);
    default:
      throw Error("not a unary op");
  }
}

inline double apply_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return checked(a / b, "division");
}

}  // namespace detail

/// Evaluates `e` at `a`. Throws UnboundVariable or DomainError.
inline double evaluate(const Expr& e, const Assignment& a) {
  std::unordered_map<const Expr::Node*, double> memo;
  std::function<double(const Expr&)> go = [&](const Expr& x) -> double {
    switch (x.op()) {
      case Op::Constant:
        return x.value();
      case Op::Variable: {
        auto it = a.find(x.name());
        if (it == a.end()) throw UnboundVariable(x.name());
        return it->second;
      }
      default:
        break;
    }
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    double r = 0.0;
    switch (x.op()) {
      case Op::Add:
        for (const auto& s : x.args()) r += go(s);
        r = detail::checked(r, "addition");
        break;
      case Op::Mul:
        r = 1.0;
        for (const auto& s : x.args()) r *= go(s);
        r = detail::checked(r, "multiplication");
        break;
      case Op::Div:
        r = detail::apply_div(go(x.arg(0)), go(x.arg(1)));
        break;
      case Op::Pow:
        r = detail::apply_pow(go(x.arg(0)), go(x.arg(1)));
        break;
      default:
        r = detail::apply_unary(x.op(), go(x.arg(0)));
        break;
    }
    memo.emplace(x.id(), r);
    return r;
  };
  return go(e);
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin:
      return "sin";
    case Op::Cos:
      return "cos";
    case Op::Exp:
      return "exp";
    case Op::Log:
      return "log";
    case Op::Sqrt:
      return "sqrt";
    case Op::Atan:
      return "atan";
    default:
      return nullptr;
  }
}

// Binding strength: sum 1, product 2, prefix minus 3, power 4, atom 5.
inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Constant:
      return e.value() < 0 ? 3 : 5;
    case Op::Variable:
      return 5;
    case Op::Add:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

inline void print(const Expr& e, int min_prec, std::string& out);

inline void print_mul_abs(const Expr& e, std::string& out) {
  // e is Mul with a negative leading constant; print |c|*rest
  std::vector<Expr> f(e.args().begin(), e.args().end());
  f[0] = Expr(-f[0].value());
  print(mul(std::move(f)), 2, out);
}

inline void print(const Expr& e, int min_prec, std::string& out) {
  const bool wrap = precedence(e) < min_prec;
  if (wrap) out += '(';
  switch (e.op()) {
    case Op::Constant:
      out += format_number(e.value());
      break;
    case Op::Variable:
      out += e.name();
      break;
    case Op::Add: {
      bool first = true;
      for (const auto& t : e.args()) {
        if (first) {
          print(t, 1, out);
          first = false;
        } else if (t.op() == Op::Neg) {
          out += " - ";
          print(t.arg(0), 2, out);
        } else if (t.is_constant() && t.value() < 0) {
          out += " - ";
          out += format_number(-t.value());
        } else if (t.op() == Op::Mul && t.arg(0).is_constant() && t.arg(0).value() < 0) {
          out += " - ";
          print_mul_abs(t, out);
        } else {
          out += " + ";
          print(t, 1, out);
        }
      }
      break;
    }
    case Op::Mul: {
      bool first = true;
      for (const auto& f : e.args()) {
        if (!first) out += '*';
        print(f, first ? 2 : 3, out);
        first = false;
      }
      break;
    }
    case Op::Div:
      print(e.arg(0), 2, out);
      out += '/';
      print(e.arg(1), 4, out);
      break;
    case Op::Neg:
      out += '-';
      print(e.arg(0), 4, out);
      break;
    case Op::Pow:
      print(e.arg(0), 5, out);
      out += '^';
      print(e.arg(1), 3, out);
      break;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.arg(0), 0, out);
      out += ')';
      break;
  }
  if (wrap) out += ')';
}

}  // namespace detail

/// Renders `e` in the grammar accepted by parse(); parse(to_string(e)) evaluates identically.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, 0, out);
  return out;
}

}  // namespace equivar
