#pragma once

// Variation fields (tau, eta) on R x M, their canonical lift to R x TM, the
// total derivative D, invariance classification and Noether charges.
//
//   eps^i = eta^i - v^i tau
//   lift  = tau D + eps^i d/dq^i + (D eps^i) d/dv^i
//         = tau d/dt + eta^i d/dq^i + (D eta^i - v^i D tau) d/dv^i
//
// The a-terms of tau D and (D eps) d/dv cancel, which is asserted at lift time.

#include <optional>
#include <string>
#include <vector>

#include "equivar/dynamics.hpp"
#include "equivar/jets.hpp"
#include "equivar/names.hpp"
#include "equivar/polynomial.hpp"
#include "equivar/zero_test.hpp"

namespace equivar {

namespace detail {

inline void require_variables(const Expr& e, const std::vector<std::string>& allowed, const std::string& what) {
  for (const auto& v : variables(e))
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw PreconditionError(what + " uses variable '" + v + "' outside {" + [&] {
        std::string s;
        for (const auto& a : allowed) s += (s.empty() ? "" : ", ") + a;
        return s;
      }() + "}");
}

inline std::vector<std::string> tq(int n) {
  std::vector<std::string> out{names::t};
  for (int i = 0; i < n; ++i) out.push_back(names::q(i));
  return out;
}

}  // namespace detail

/// D = d/dt + v^i d/dq^i + a^i d/dv^i on expressions in (t, q, v).
inline Expr total_derivative(const Expr& f, int n) {
  detail::require_variables(f, names::tqv(n), "total_derivative argument");
  std::vector<Expr> terms{differentiate(f, names::t)};
  for (int i = 0; i < n; ++i) {
    terms.push_back(vv(i) * differentiate(f, names::q(i)));
    terms.push_back(av(i) * differentiate(f, names::v(i)));
  }
  return add(std::move(terms));
}

struct VariationField {
  int n = 0;
  Expr tau;
  std::vector<Expr> eta;

  VariationField(int n_, Expr tau_, std::vector<Expr> eta_) : n(n_), tau(std::move(tau_)), eta(std::move(eta_)) {
    if (n < 1) throw PreconditionError("VariationField: dimension must be positive");
    if (static_cast<int>(eta.size()) != n)
      throw PreconditionError("VariationField: expected " + std::to_string(n) + " eta components");
    auto allowed = detail::tq(n);
    detail::require_variables(tau, allowed, "tau");
    for (const auto& e : eta) detail::require_variables(e, allowed, "eta");
  }

  static VariationField parse(int n, std::string_view tau, const std::vector<std::string>& eta) {
    std::vector<Expr> e;
    for (const auto& s : eta) e.push_back(equivar::parse(s));
    return {n, equivar::parse(tau), std::move(e)};
  }

  Expr epsilon(int i) const { return eta[i] - vv(i) * tau; }
};

struct LiftedField {
  int n = 0;
  Expr ct;               // d/dt coefficient (tau)
  std::vector<Expr> cq;  // d/dq^i coefficients (eta^i)
  std::vector<Expr> cv;  // d/dv^i coefficients, a-free
  // horizontal part tau D and vertical part eps d/dq + (D eps) d/dv
  Expr tau;
  std::vector<Expr> eps;
  std::vector<Expr> deps;  // contains a when tau != 0
};

inline constexpr double kInvarianceTol = 1e-9;
inline constexpr int kInvariancePoints = 100;

inline ZeroTestOptions default_zero_options(std::uint64_t seed = 0) {
  ZeroTestOptions o;
  o.points = kInvariancePoints;
  o.tol = kInvarianceTol;
  o.seed = seed;
  return o;
}

inline LiftedField lift(const VariationField& f) {
  const int n = f.n;
  LiftedField X;
  X.n = n;
  X.ct = X.tau = f.tau;
  for (int i = 0; i < n; ++i) {
    X.cq.push_back(f.eta[i]);
    X.eps.push_back(f.epsilon(i));
    X.deps.push_back(total_derivative(X.eps[i], n));
  }
  for (int i = 0; i < n; ++i) {
    Expr full = f.tau * av(i) + X.deps[i];
    std::vector<Expr> da;
    for (int j = 0; j < n; ++j) da.push_back(differentiate(full, names::a(j)));
    auto r = zero_test(da, default_zero_options());
    if (!r) throw Error("lift: acceleration terms do not cancel in the d/dv" + std::to_string(i + 1) + " coefficient");
    Bindings zero_a;
    for (int j = 0; j < n; ++j) zero_a[names::a(j)] = Expr(0.0);
    X.cv.push_back(substitute(full, zero_a));
  }
  return X;
}

/// X(g) for g in (t, q, v).
inline Expr apply(const LiftedField& X, const Expr& g) {
  std::vector<Expr> terms{X.ct * differentiate(g, names::t)};
  for (int i = 0; i < X.n; ++i) {
    terms.push_back(X.cq[i] * differentiate(g, names::q(i)));
    terms.push_back(X.cv[i] * differentiate(g, names::v(i)));
  }
  return add(std::move(terms));
}

/// X_V(g) = eps^i dg/dq^i + (D eps^i) dg/dv^i; depends on a when tau != 0.
inline Expr apply_vertical(const LiftedField& X, const Expr& g) {
  std::vector<Expr> terms;
  for (int i = 0; i < X.n; ++i) {
    terms.push_back(X.eps[i] * differentiate(g, names::q(i)));
    terms.push_back(X.deps[i] * differentiate(g, names::v(i)));
  }
  return add(std::move(terms));
}

/// EL_i = dL/dq^i - D(dL/dv^i), in (t, q, v, a).
inline Expr euler_expr(const Lagrangian& L, int i) { return L.dq(i) - total_derivative(L.dv(i), L.dim()); }

inline void require_same_dim(const Lagrangian& L, const VariationField& f) {
  if (L.dim() != f.n) throw PreconditionError("Lagrangian and variation field dimensions differ");
}

/// eps^i EL_i + D(eps^i Lv_i + L tau) - X_V(L) - D(L tau), identically zero.
inline Expr noether_identity_residual(const Lagrangian& L, const VariationField& f) {
  require_same_dim(L, f);
  LiftedField X = lift(f);
  const int n = L.dim();
  std::vector<Expr> flux{L.body() * f.tau}, lhs;
  for (int i = 0; i < n; ++i) {
    flux.push_back(X.eps[i] * L.dv(i));
    lhs.push_back(X.eps[i] * euler_expr(L, i));
  }
  Expr left = add(std::move(lhs)) + total_derivative(add(std::move(flux)), n);
  return left - apply_vertical(X, L.body()) - total_derivative(L.body() * f.tau, n);
}

/// The dt coefficient of the Lie derivative of L dt: X(L) + L D tau, a-free.
inline Expr dt_coefficient_expr(const Lagrangian& L, const LiftedField& X) {
  return apply(X, L.body()) + L.body() * total_derivative(X.tau, X.n);
}

/// Pieces of the Lie derivative of L dt along the lifted field, evaluated at (t, X).
struct LieDecomposition {
  double dt_coefficient = 0.0;  // eps^i EL_i(X) + D(eps^i Lv_i + L tau)
  double via_vertical = 0.0;    // X_V(L) + D(L tau) at the same point
  OneForm extra;                // L dtau/dq^i, coefficients of (dq^i - v^i dt)
  double acceleration_sensitivity = 0.0;  // change of dt_coefficient when a is moved
};

/// Compiled form of the decomposition for repeated evaluation.
class LieDerivative {
 public:
  LieDerivative(const Lagrangian& L, const VariationField& f) : n_(L.dim()) {
    require_same_dim(L, f);
    LiftedField X = lift(f);
    std::vector<Expr> flux{L.body() * f.tau}, el;
    for (int i = 0; i < n_; ++i) {
      flux.push_back(X.eps[i] * L.dv(i));
      el.push_back(X.eps[i] * euler_expr(L, i));
    }
    Expr dt_coeff = add(std::move(el)) + total_derivative(add(std::move(flux)), n_);
    Expr vertical = apply_vertical(X, L.body()) + total_derivative(L.body() * f.tau, n_);
    std::vector<Expr> outs{dt_coeff, vertical};
    for (int i = 0; i < n_; ++i) outs.push_back(L.body() * differentiate(f.tau, names::q(i)));
    tape_ = Tape(outs, names::tqva(n_));
  }

  LieDecomposition operator()(double t, const EPoint& X) const {
    auto eval = [&](const Vec& a) {
      std::vector<double> in{t};
      for (const Vec* p : {&X.q, &X.v, &a}) in.insert(in.end(), p->data(), p->data() + n_);
      return tape_(in);
    };
    auto out = eval(X.a);
    Vec moved = X.a + Vec::Constant(n_, 1.0);
    auto shifted = eval(moved);
    LieDecomposition d{out[0], out[1], OneForm(X.q, Eigen::Map<const Vec>(out.data() + 2, n_)),
                       std::abs(shifted[0] - out[0])};
    return d;
  }

 private:
  int n_;
  Tape tape_;
};

inline LieDecomposition lie_derivative_decomposition(const Lagrangian& L, const VariationField& f, const EPoint& X,
                                                     double t) {
  return LieDerivative(L, f)(t, X);
}

enum class InvarianceKind { Invariant, QuasiInvariant, QuasiInvariantUndetermined, NotInvariant };

inline const char* to_string(InvarianceKind k) {
  switch (k) {
    case InvarianceKind::Invariant:
      return "Invariant";
    case InvarianceKind::QuasiInvariant:
      return "QuasiInvariant";
    case InvarianceKind::QuasiInvariantUndetermined:
      return "QuasiInvariantUndetermined";
    case InvarianceKind::NotInvariant:
      return "NotInvariant";
  }
  return "?";
}

struct InvarianceVerdict {
  InvarianceKind kind = InvarianceKind::NotInvariant;
  std::optional<Expr> phi;  // QuasiInvariant only
  Assignment witness;       // NotInvariant: a point where the dt coefficient is nonzero
  double residual = 0.0;    // max sampled |dt coefficient| (or |X(L) - D Phi| when quasi)
  std::string detail;
};

/// X(L) + L D tau - D Phi.
inline Expr quasi_residual_expr(const Lagrangian& L, const VariationField& f, const Expr& phi) {
  require_same_dim(L, f);
  detail::require_variables(phi, detail::tq(f.n), "Phi");
  return dt_coefficient_expr(L, lift(f)) - total_derivative(phi, f.n);
}

inline ZeroTestResult verify_quasi(const Lagrangian& L, const VariationField& f, const Expr& phi,
                                   const ZeroTestOptions& opt = default_zero_options()) {
  return zero_test(quasi_residual_expr(L, f, phi), opt);
}

namespace detail {

/// Phi with X(L) = D Phi, when X(L) is affine in v with polynomial, closed coefficients.
/// Returns the verdict kind it settles on and the potential when found.
inline std::pair<InvarianceKind, std::optional<Expr>> recover_potential(const Expr& F, int n, std::string& why) {
  Bindings zero_v;
  for (int i = 0; i < n; ++i) zero_v[names::v(i)] = Expr(0.0);
  Expr c0 = substitute(F, zero_v);
  std::vector<Expr> c;
  std::vector<Expr> affine{c0};
  for (int i = 0; i < n; ++i) {
    c.push_back(substitute(differentiate(F, names::v(i)), zero_v));
    affine.push_back(c[i] * vv(i));
  }
  if (!zero_test(F - add(std::move(affine)), default_zero_options())) {
    why = "X(L) is not affine in the velocities, so it is not a total derivative D Phi(t, q)";
    return {InvarianceKind::NotInvariant, std::nullopt};
  }
  std::vector<Expr> closed;
  for (int i = 0; i < n; ++i) {
    closed.push_back(differentiate(c[i], names::t) - differentiate(c0, names::q(i)));
    for (int j = i + 1; j < n; ++j)
      closed.push_back(differentiate(c[i], names::q(j)) - differentiate(c[j], names::q(i)));
  }
  if (!zero_test(closed, default_zero_options())) {
    why = "the coefficients of X(L) are not closed, so X(L) is not a total derivative";
    return {InvarianceKind::NotInvariant, std::nullopt};
  }
  const auto vars = tq(n);  // index 0 is t, index i+1 is q^i
  auto p0 = Polynomial::from_expr(c0, vars);
  std::vector<Polynomial> pc;
  for (int i = 0; i < n && p0; ++i) {
    auto p = Polynomial::from_expr(c[i], vars);
    if (!p) {
      p0.reset();
      break;
    }
    pc.push_back(*p);
  }
  if (!p0) {
    why = "X(L) looks like a total derivative but its coefficients are not polynomial; supply Phi to verify";
    return {InvarianceKind::QuasiInvariantUndetermined, std::nullopt};
  }
  // Phi(t, q) = int_0^t c0(s, 0) ds + sum_i int_0^{q^i} c_i(t, q^1..q^{i-1}, s, 0..0) ds
  Polynomial phi = *p0;
  for (int k = 1; k <= n; ++k) phi = phi.at_zero(k);
  phi = phi.antiderivative(0);
  for (int i = 0; i < n; ++i) {
    Polynomial term = pc[i];
    for (int k = i + 2; k <= n; ++k) term = term.at_zero(k);
    phi = phi + term.antiderivative(i + 1);
  }
  return {InvarianceKind::QuasiInvariant, phi.to_expr()};
}

}  // namespace detail

/// Invariant when the dt coefficient X(L) + L D tau and the form L dtau/dq both
/// vanish; otherwise, for tau = 0 and autonomous L, tries X(L) = D Phi.
inline InvarianceVerdict classify_invariance(const Lagrangian& L, const VariationField& f,
                                             const ZeroTestOptions& opt = default_zero_options()) {
  require_same_dim(L, f);
  const int n = L.dim();
  LiftedField X = lift(f);
  Expr coeff = dt_coefficient_expr(L, X);
  std::vector<Expr> extra;
  for (int i = 0; i < n; ++i) extra.push_back(L.body() * differentiate(f.tau, names::q(i)));

  InvarianceVerdict v;
  auto rc = zero_test(coeff, opt);
  auto re = zero_test(extra, opt);
  v.residual = std::max(rc.max_abs, re.max_abs);
  if (rc && re) {
    v.kind = InvarianceKind::Invariant;
    return v;
  }
  v.kind = InvarianceKind::NotInvariant;
  v.witness = rc ? re.witness : rc.witness;
  if (!re) {
    v.detail = "L dtau/dq does not vanish";
    return v;
  }
  if (!is_zero(f.tau, opt.points, opt.seed, opt.tol) || L.time_dependent()) {
    v.detail = "X(L) + L D tau does not vanish; quasi-invariance is only attempted for tau = 0 and autonomous L";
    return v;
  }
  auto [kind, phi] = detail::recover_potential(coeff, n, v.detail);
  v.kind = kind;
  if (kind == InvarianceKind::QuasiInvariant) {
    auto check = verify_quasi(L, f, *phi, opt);
    if (!check) {
      v.kind = InvarianceKind::NotInvariant;
      v.detail = "recovered Phi fails X(L) = D Phi";
      v.witness = check.witness;
      return v;
    }
    v.phi = phi;
    v.residual = check.max_abs;
    v.witness.clear();
  }
  return v;
}

/// Q = eps^i dL/dv^i + L tau - Phi.
inline Expr charge_expr(const Lagrangian& L, const VariationField& f, const Expr& phi = Expr(0.0)) {
  std::vector<Expr> terms{L.body() * f.tau, neg(phi)};
  for (int i = 0; i < L.dim(); ++i) terms.push_back(f.epsilon(i) * L.dv(i));
  return add(std::move(terms));
}

/// Noether charge of a verified symmetry. Without Phi the field must be
/// Invariant; with Phi, X(L) + L D tau = D Phi must pass the zero test.
inline Expr noether_charge(const Lagrangian& L, const VariationField& f, const std::optional<Expr>& phi = {}) {
  require_same_dim(L, f);
  if (!phi) {
    auto v = classify_invariance(L, f);
    if (v.kind != InvarianceKind::Invariant)
      throw PreconditionError(std::string("noether_charge: field is ") + to_string(v.kind) +
                              (v.phi ? " (supply Phi)" : "") + ", not Invariant");
    return charge_expr(L, f);
  }
  if (!verify_quasi(L, f, *phi))
    throw PreconditionError("noether_charge: X(L) + L D tau differs from D Phi for the supplied Phi");
  return charge_expr(L, f, *phi);
}

/// Zero test of D(Q) on solutions: a is solved numerically from Euler's
/// equations at each sampled (t, q, v). Singular samples are redrawn.
inline ZeroTestResult onshell_zero_test(const Lagrangian& L, const Expr& Q,
                                        const ZeroTestOptions& opt = default_zero_options()) {
  const int n = L.dim();
  Expr DQ = total_derivative(Q, n);
  Tape tape(DQ, names::tqva(n));
  std::vector<double> in(1 + 3 * n), out(1), scratch;
  return sample_test(names::tqv(n), opt, [&](std::span<const double> x) {
    Vec q = Eigen::Map<const Vec>(x.data() + 1, n), v = Eigen::Map<const Vec>(x.data() + 1 + n, n);
    Vec a;
    try {
      a = solve_acceleration(L, x[0], {q, v});
    } catch (const SingularMatrix& e) {
      throw DomainError(e.what());
    }
    std::copy(x.begin(), x.end(), in.begin());
    for (int i = 0; i < n; ++i) in[1 + 2 * n + i] = a[i];
    tape.run(in, out, scratch);
    return out[0];
  });
}

}  // namespace equivar
