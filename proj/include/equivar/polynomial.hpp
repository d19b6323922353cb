#pragma once

// Sparse multivariate polynomials with real coefficients, just enough to
// recognize polynomial expressions and integrate them along coordinate paths.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "equivar/expr.hpp"

namespace equivar {

class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static Polynomial constant(std::vector<std::string> vars, double c) {
    Polynomial p(std::move(vars));
    if (c != 0.0) p.terms_[Exponents(p.vars_.size(), 0)] = c;
    return p;
  }

  /// Converts e when it is a polynomial in `vars`; nullopt otherwise.
  static std::optional<Polynomial> from_expr(const Expr& e, const std::vector<std::string>& vars) {
    const std::size_t n = vars.size();
    switch (e.op()) {
      case Op::Constant:
        return constant(vars, e.value());
      case Op::Variable: {
        for (std::size_t i = 0; i < n; ++i) {
          if (vars[i] == e.name()) {
            Polynomial p(vars);
            Exponents x(n, 0);
            x[i] = 1;
            p.terms_[x] = 1.0;
            return p;
          }
        }
        return std::nullopt;
      }
      case Op::Add: {
        Polynomial acc(vars);
        for (const auto& a : e.args()) {
          auto p = from_expr(a, vars);
          if (!p) return std::nullopt;
          acc = acc + *p;
        }
        return acc;
      }
      case Op::Mul: {
        Polynomial acc = constant(vars, 1.0);
        for (const auto& a : e.args()) {
          auto p = from_expr(a, vars);
          if (!p) return std::nullopt;
          acc = acc * *p;
        }
        return acc;
      }
      case Op::Neg: {
        auto p = from_expr(e.arg(0), vars);
        if (!p) return std::nullopt;
        return p->scaled(-1.0);
      }
      case Op::Div: {
        if (!e.arg(1).is_constant() || e.arg(1).value() == 0.0) return std::nullopt;
        auto p = from_expr(e.arg(0), vars);
        if (!p) return std::nullopt;
        return p->scaled(1.0 / e.arg(1).value());
      }
      case Op::Pow: {
        const Expr& k = e.arg(1);
        if (!k.is_constant() || k.value() < 0 || k.value() != static_cast<int>(k.value())) return std::nullopt;
        auto base = from_expr(e.arg(0), vars);
        if (!base) return std::nullopt;
        Polynomial acc = constant(vars, 1.0);
        for (int i = 0; i < static_cast<int>(k.value()); ++i) acc = acc * *base;
        return acc;
      }
      default:
        return std::nullopt;
    }
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& [x, c] : o.terms_) r.add_term(x, c);
    return r;
  }

  Polynomial operator*(const Polynomial& o) const {
    Polynomial r(vars_);
    for (const auto& [x, c] : terms_) {
      for (const auto& [y, d] : o.terms_) {
        Exponents z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
        r.add_term(z, c * d);
      }
    }
    return r;
  }

  Polynomial scaled(double s) const {
    Polynomial r(vars_);
    for (const auto& [x, c] : terms_) r.add_term(x, c * s);
    return r;
  }

  /// Sets variable i to zero.
  Polynomial at_zero(std::size_t i) const {
    Polynomial r(vars_);
    for (const auto& [x, c] : terms_)
      if (x[i] == 0) r.add_term(x, c);
    return r;
  }

  /// Integral of the polynomial in variable i from 0 to that variable.
  Polynomial antiderivative(std::size_t i) const {
    Polynomial r(vars_);
    for (const auto& [x, c] : terms_) {
      Exponents y = x;
      ++y[i];
      r.add_term(y, c / y[i]);
    }
    return r;
  }

  Expr to_expr() const {
    std::vector<Expr> sum;
    for (const auto& [x, c] : terms_) {
      std::vector<Expr> f{Expr(c)};
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0) f.push_back(pow(var(vars_[i]), Expr(x[i])));
      sum.push_back(mul(std::move(f)));
    }
    return add(std::move(sum));
  }

  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t term_count() const noexcept { return terms_.size(); }

 private:
  void add_term(const Exponents& x, double c) {
    double& slot = terms_[x];
    slot += c;
    if (slot == 0.0) terms_.erase(x);
  }

  std::vector<std::string> vars_;
  std::map<Exponents, double> terms_;
};

}  // namespace equivar
