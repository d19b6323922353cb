#pragma once

// The two enlargements of a Lagrangian system used to turn variational and
// quasi-invariance into plain invariance of the Lagrangian function.
//
// Autonomized: time becomes a coordinate t with velocity w, the q velocities
// become vhat, and a multiplier lam pins the gauge:
//   Lhat = L(t, q, vhat/w) w + lam (w - 1)
// Quasi-absorbed (autonomous L, tau = 0, Phi = Phi(q)):
//   Lhat = L + nu D Phi + lam (xi - 1),  nu the velocity of xi.
//
// Extended systems are singular (lam has no momentum). They are never handed
// to the generic integrator; their dynamics are checked on the gauge slice.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "equivar/dynamics.hpp"
#include "equivar/noether.hpp"

namespace equivar {

enum class ExtensionKind { Autonomized, QuasiAbsorbed };

/// A coordinate of the extended system with the names of its velocity and acceleration.
struct ExtendedCoordinate {
  std::string coord;
  std::string velocity;
  std::string acceleration;
};

class ExtendedLagrangian {
 public:
  ExtensionKind kind() const noexcept { return kind_; }
  const Lagrangian& base() const noexcept { return base_; }
  const Expr& body() const noexcept { return body_; }
  const std::optional<Expr>& phi() const noexcept { return phi_; }
  int dim() const noexcept { return base_.dim(); }

  /// q^1..q^n, then the time-like coordinate (t or xi), then lam.
  const std::vector<ExtendedCoordinate>& coordinates() const noexcept { return coords_; }
  const ExtendedCoordinate& coordinate(int i) const { return coords_[i]; }
  const ExtendedCoordinate& zeroth() const { return coords_[dim()]; }
  const ExtendedCoordinate& multiplier() const { return coords_[dim() + 1]; }

  /// Every variable that may appear in extended expressions, in a fixed order.
  std::vector<std::string> variables() const {
    std::vector<std::string> out;
    if (kind_ == ExtensionKind::QuasiAbsorbed) out.push_back(names::t);
    for (const auto& c : coords_) out.push_back(c.coord);
    for (const auto& c : coords_) out.push_back(c.velocity);
    for (const auto& c : coords_) out.push_back(c.acceleration);
    return out;
  }

  /// Total derivative along the extended curve. The autonomized system has no
  /// explicit s dependence; the absorbed one keeps t as its parameter.
  Expr total_derivative(const Expr& f) const {
    std::vector<Expr> terms;
    if (kind_ == ExtensionKind::QuasiAbsorbed) terms.push_back(differentiate(f, names::t));
    for (const auto& c : coords_) {
      terms.push_back(var(c.velocity) * differentiate(f, c.coord));
      terms.push_back(var(c.acceleration) * differentiate(f, c.velocity));
    }
    return add(std::move(terms));
  }

  /// dLhat/dc - Dhat(dLhat/dc').
  Expr euler(const ExtendedCoordinate& c) const {
    return differentiate(body_, c.coord) - total_derivative(differentiate(body_, c.velocity));
  }

  /// Sampling box for zero tests: w (or xi) kept in [0.5, 1.5] away from 0.
  SampleBox sample_box() const {
    SampleBox box;
    box.with(kind_ == ExtensionKind::Autonomized ? names::w : names::xi, 0.5, 1.5);
    return box;
  }

  friend ExtendedLagrangian autonomize(const Lagrangian& L);
  friend ExtendedLagrangian absorb_extension(const Lagrangian& L, const Expr& phi);

 private:
  ExtendedLagrangian(ExtensionKind k, Lagrangian base, Expr body, std::optional<Expr> phi,
                     std::vector<ExtendedCoordinate> coords)
      : kind_(k), base_(std::move(base)), body_(std::move(body)), phi_(std::move(phi)), coords_(std::move(coords)) {}

  ExtensionKind kind_;
  Lagrangian base_;
  Expr body_;
  std::optional<Expr> phi_;
  std::vector<ExtendedCoordinate> coords_;
};

namespace detail {

inline ZeroTestOptions extended_options(const ExtendedLagrangian& E, std::uint64_t seed = 0) {
  ZeroTestOptions o = default_zero_options(seed);
  o.box = E.sample_box();
  return o;
}

/// v^i -> vhat^i / w.
inline Bindings reparametrize(int n) {
  Bindings b;
  for (int i = 0; i < n; ++i) b[names::v(i)] = var(names::vhat(i)) / var(names::w);
  return b;
}

}  // namespace detail

/// Lhat(t, q, lam, vhat, w) = L(t, q, vhat/w) w + lam (w - 1).
inline ExtendedLagrangian autonomize(const Lagrangian& L) {
  const int n = L.dim();
  Expr w = var(names::w), lam = var(names::lam);
  Expr body = substitute(L.body(), detail::reparametrize(n)) * w + lam * (w - Expr(1.0));
  std::vector<ExtendedCoordinate> coords;
  for (int i = 0; i < n; ++i) coords.push_back({names::q(i), names::vhat(i), names::ahat(i)});
  coords.push_back({names::t, names::w, names::aw});
  coords.push_back({names::lam, names::vlam, names::alam});
  ExtendedLagrangian E(ExtensionKind::Autonomized, L, body, std::nullopt, std::move(coords));

  // gauge slice w = 1, lam = 0, vhat = v gives back L
  Bindings slice{{names::w, Expr(1.0)}, {names::lam, Expr(0.0)}};
  for (int i = 0; i < n; ++i) slice[names::vhat(i)] = vv(i);
  if (!zero_test(substitute(body, slice) - L.body(), default_zero_options()))
    throw Error("autonomize: the gauge slice does not reproduce L");
  return E;
}

/// Lhat = L + nu D Phi + lam (xi - 1), without precondition checks.
inline ExtendedLagrangian absorb_extension(const Lagrangian& L, const Expr& phi) {
  const int n = L.dim();
  Expr nu = var(names::nu), lam = var(names::lam), xi = var(names::xi);
  Expr body = L.body() + nu * total_derivative(phi, n) + lam * (xi - Expr(1.0));
  std::vector<ExtendedCoordinate> coords;
  for (int i = 0; i < n; ++i) coords.push_back({names::q(i), names::v(i), names::a(i)});
  coords.push_back({names::xi, names::nu, names::anu});
  coords.push_back({names::lam, names::vlam, names::alam});
  ExtendedLagrangian E(ExtensionKind::QuasiAbsorbed, L, body, phi, std::move(coords));

  Bindings slice{{names::nu, Expr(0.0)}, {names::xi, Expr(1.0)}};
  if (!zero_test(substitute(body, slice) - L.body(), default_zero_options()))
    throw Error("absorb_quasi_invariance: the slice nu = 0, xi = 1 does not reproduce L");
  return E;
}

struct ExtendedEulerExpressions {
  std::vector<Expr> Ei;
  Expr E0;
  Expr Einf;
};

inline ExtendedEulerExpressions extended_euler_expressions(const ExtendedLagrangian& E) {
  ExtendedEulerExpressions out;
  for (int i = 0; i < E.dim(); ++i) out.Ei.push_back(E.euler(E.coordinate(i)));
  out.E0 = E.euler(E.zeroth());
  out.Einf = E.euler(E.multiplier());
  return out;
}

struct ExtendedEulerValues {
  Vec Ei;
  double E0 = 0.0;
  double Einf = 0.0;
};

/// E_i, E_0, E_inf of an autonomized system at a point given as values of E.variables().
inline ExtendedEulerValues extended_euler_components(const ExtendedLagrangian& E, const Assignment& point) {
  if (E.kind() != ExtensionKind::Autonomized)
    throw PreconditionError("extended_euler_components: expected an autonomized Lagrangian");
  auto ex = extended_euler_expressions(E);
  ExtendedEulerValues v;
  v.Ei.resize(E.dim());
  for (int i = 0; i < E.dim(); ++i) v.Ei[i] = evaluate(ex.Ei[i], point);
  v.E0 = evaluate(ex.E0, point);
  v.Einf = evaluate(ex.Einf, point);
  return v;
}

/// The extended variation field as coefficients of d/d(variable).
struct LiftedSymmetry {
  ExtensionKind kind;
  std::vector<std::pair<std::string, Expr>> coefficients;
  Expr eta0;    // variation of the zeroth coordinate (tau for Autonomized)
  Expr etainf;  // variation of lam

  Expr apply(const Expr& g) const {
    std::vector<Expr> terms;
    for (const auto& [name, c] : coefficients) terms.push_back(c * differentiate(g, name));
    return add(std::move(terms));
  }
  const Expr& coefficient(std::string_view name) const {
    for (const auto& [n, c] : coefficients)
      if (n == name) return c;
    throw PreconditionError("LiftedSymmetry: no coefficient for " + std::string(name));
  }
};

/// tau d/dt + eta^i d/dq^i + eta_inf d/dlam + (Dhat tau) d/dw + (Dhat eta^i) d/dvhat^i
/// with eta_inf = -(D tau) lam and D tau evaluated at v = vhat/w.
inline LiftedSymmetry lift_symmetry_autonomized(const ExtendedLagrangian& E, const VariationField& f) {
  if (E.kind() != ExtensionKind::Autonomized)
    throw PreconditionError("lift_symmetry_autonomized: expected an autonomized Lagrangian");
  if (f.n != E.dim()) throw PreconditionError("lift_symmetry_autonomized: dimension mismatch");
  const int n = E.dim();
  LiftedSymmetry s{ExtensionKind::Autonomized, {}, f.tau, {}};
  Bindings to_hat = detail::reparametrize(n);
  Expr Dtau = substitute(total_derivative(f.tau, n), to_hat);
  s.etainf = neg(Dtau * var(names::lam));
  s.coefficients.emplace_back(names::t, f.tau);
  for (int i = 0; i < n; ++i) s.coefficients.emplace_back(names::q(i), f.eta[i]);
  s.coefficients.emplace_back(names::lam, s.etainf);
  s.coefficients.emplace_back(names::w, E.total_derivative(f.tau));
  for (int i = 0; i < n; ++i) s.coefficients.emplace_back(names::vhat(i), E.total_derivative(f.eta[i]));
  return s;
}

/// Outcome of comparing Xhat(Lhat) with w (X_V(L) + D(tau L)).
struct EquivalenceReport {
  Expr xhat_lhat;      // Xhat(Lhat)
  Expr original;       // X_V(L) + D(tau L) at v = vhat/w
  ZeroTestResult identity;   // Xhat(Lhat) - w (X_V(L) + D(tau L))
  ZeroTestResult leftover;   // the same minus lam D tau
  ZeroTestResult lhs_zero;   // Xhat(Lhat)
  ZeroTestResult rhs_zero;   // X_V(L) + D(tau L)

  /// Xhat(Lhat) = 0 exactly when the original condition holds.
  bool equivalent() const noexcept { return lhs_zero.zero == rhs_zero.zero; }
};

/// Checks Xhat(Lhat) = w (X_V(L) + D(tau L)) with eta_inf = -(D tau) lam.
/// `leftover` tests the same difference against lam D tau, which is what the
/// d/dlam term actually contributes: dLhat/dlam = w - 1, not w.
inline EquivalenceReport verify_invariance_equivalence(const ExtendedLagrangian& E, const VariationField& f,
                                                       std::uint64_t seed = 0) {
  if (E.kind() != ExtensionKind::Autonomized)
    throw PreconditionError("verify_invariance_equivalence: expected an autonomized Lagrangian");
  LiftedSymmetry s = lift_symmetry_autonomized(E, f);
  const int n = E.dim();
  Bindings to_hat = detail::reparametrize(n);
  EquivalenceReport r;
  r.xhat_lhat = s.apply(E.body());
  r.original = substitute(dt_coefficient_expr(E.base(), lift(f)), to_hat);
  Expr w = var(names::w);
  Expr Dtau = substitute(total_derivative(f.tau, n), to_hat);
  auto opt = detail::extended_options(E, seed);
  r.identity = zero_test(r.xhat_lhat - w * r.original, opt);
  r.leftover = zero_test(r.xhat_lhat - w * r.original - var(names::lam) * Dtau, opt);
  r.lhs_zero = zero_test(r.xhat_lhat, opt);
  r.rhs_zero = zero_test(r.original, opt);
  return r;
}

/// Named precondition failures of absorb_quasi_invariance.
inline void check_absorption_preconditions(const Lagrangian& L, const VariationField& f, const Expr& phi) {
  require_same_dim(L, f);
  if (L.time_dependent()) throw PreconditionError("absorb_quasi_invariance: L must be autonomous");
  if (!is_zero(f.tau)) throw PreconditionError("absorb_quasi_invariance: tau must vanish");
  auto qs = names::series(names::q, L.dim());
  for (const auto& v : variables(phi))
    if (std::find(qs.begin(), qs.end(), v) == qs.end())
      throw PreconditionError("absorb_quasi_invariance: Phi must depend only on q (found '" + v + "')");
  auto r = zero_test(apply(lift(f), L.body()) - total_derivative(phi, L.dim()), default_zero_options());
  if (!r) throw PreconditionError("absorb_quasi_invariance: X(L) differs from D Phi");
}

/// Lhat = L + nu D Phi + lam (xi - 1) with eta0 = 0 and
/// eta_inf = -(1/xi)(D Phi + nu X(D Phi)).
inline std::pair<ExtendedLagrangian, LiftedSymmetry> absorb_quasi_invariance(const Lagrangian& L,
                                                                            const VariationField& f,
                                                                            const Expr& phi) {
  check_absorption_preconditions(L, f, phi);
  const int n = L.dim();
  ExtendedLagrangian E = absorb_extension(L, phi);
  LiftedField X = lift(f);
  Expr DPhi = total_derivative(phi, n);
  Expr nu = var(names::nu), xi = var(names::xi);
  LiftedSymmetry s{ExtensionKind::QuasiAbsorbed, {}, Expr(0.0), {}};
  s.etainf = neg((DPhi + nu * apply(X, DPhi)) / xi);
  for (int i = 0; i < n; ++i) s.coefficients.emplace_back(names::q(i), X.cq[i]);
  for (int i = 0; i < n; ++i) s.coefficients.emplace_back(names::v(i), X.cv[i]);
  s.coefficients.emplace_back(names::xi, s.eta0);
  s.coefficients.emplace_back(names::nu, E.total_derivative(s.eta0));
  s.coefficients.emplace_back(names::lam, s.etainf);
  return {std::move(E), std::move(s)};
}

/// The checks that should hold after absorption.
struct AbsorptionReport {
  ZeroTestResult euler_unchanged;        // E_i(Lhat) - E_i(L), over all variables
  ZeroTestResult euler_unchanged_slice;  // the same with anu = 0 (implied by E_inf = 0)
  ZeroTestResult euler_shift;            // E_i(Lhat) - E_i(L) + anu dPhi/dq^i
  ZeroTestResult e0;                     // E_0 - (lam - D D Phi)
  ZeroTestResult einf;                   // E_inf - (xi - 1)
  ZeroTestResult invariance;             // Xhat(Lhat)
  ZeroTestResult leftover;               // Xhat(Lhat) - (D Phi + nu X(D Phi)) / xi
};

inline AbsorptionReport verify_absorption(const ExtendedLagrangian& E, const LiftedSymmetry& s,
                                          const VariationField& f, std::uint64_t seed = 0) {
  if (E.kind() != ExtensionKind::QuasiAbsorbed || !E.phi())
    throw PreconditionError("verify_absorption: expected a quasi-absorbed Lagrangian");
  const int n = E.dim();
  const Lagrangian& L = E.base();
  const Expr& phi = *E.phi();
  auto ex = extended_euler_expressions(E);
  auto opt = detail::extended_options(E, seed);
  std::vector<Expr> diff, shifted, sliced;
  Bindings still{{names::anu, Expr(0.0)}};
  for (int i = 0; i < n; ++i) {
    diff.push_back(ex.Ei[i] - euler_expr(L, i));
    shifted.push_back(diff.back() + var(names::anu) * differentiate(phi, names::q(i)));
    sliced.push_back(substitute(diff.back(), still));
  }
  Expr DPhi = total_derivative(phi, n);
  Expr xhat = s.apply(E.body());
  AbsorptionReport r;
  r.euler_unchanged = zero_test(diff, opt);
  r.euler_unchanged_slice = zero_test(sliced, opt);
  r.euler_shift = zero_test(shifted, opt);
  r.e0 = zero_test(ex.E0 - (var(names::lam) - E.total_derivative(DPhi)), opt);
  r.einf = zero_test(ex.Einf - (var(names::xi) - Expr(1.0)), opt);
  r.invariance = zero_test(xhat, opt);
  r.leftover = zero_test(xhat - (DPhi + var(names::nu) * apply(lift(f), DPhi)) / var(names::xi), opt);
  return r;
}

/// Extended trajectory on the gauge slice, sampled at the same s as the direct one.
struct SliceTrajectory {
  Trajectory q_part;           // t samples are the original time t = s + t0
  std::vector<double> lambda;  // multiplier along the slice
};

namespace detail {

/// Tape over `inputs` for an expression list, plus a helper to evaluate it at a named point.
struct NamedTape {
  std::vector<std::string> inputs;
  Tape tape;
  mutable std::vector<double> in, out, scratch;

  NamedTape(std::vector<Expr> outs, std::vector<std::string> vars)
      : inputs(std::move(vars)), tape(outs, inputs), in(inputs.size(), 0.0), out(outs.size()) {}

  std::size_t slot(std::string_view name) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i] == name) return i;
    throw PreconditionError("unknown variable " + std::string(name));
  }
  const std::vector<double>& run() const {
    tape.run(in, out, scratch);
    return out;
  }
};

/// E(acc) = E(0) + J acc for expressions linear in the accelerations `acc`.
inline std::vector<Expr> with_jacobian(const std::vector<Expr>& E, const std::vector<std::string>& acc) {
  Bindings zero;
  for (const auto& a : acc) zero[a] = Expr(0.0);
  std::vector<Expr> outs;
  for (const auto& e : E) outs.push_back(substitute(e, zero));
  for (const auto& e : E)
    for (const auto& a : acc) outs.push_back(differentiate(e, a));
  return outs;
}

}  // namespace detail

/// Integrates the autonomized system on w = 1, t = s + t0, lam(0) = lam0:
/// accelerations from E_i = 0 (linear in ahat) and lam' from E_0 = 0 (linear in vlam).
inline SliceTrajectory autonomized_slice_trajectory(const ExtendedLagrangian& E, const Vec& q0, const Vec& v0,
                                                    double t0, double t1, double h, double lam0 = 0.0) {
  if (E.kind() != ExtensionKind::Autonomized) throw PreconditionError("expected an autonomized Lagrangian");
  const int n = E.dim();
  auto ex = extended_euler_expressions(E);
  std::vector<std::string> acc = names::series(names::ahat, n);
  std::vector<Expr> outs = detail::with_jacobian(ex.Ei, acc);  // n + n*n
  auto e0 = detail::with_jacobian({ex.E0}, acc);                // E0|ahat=0, dE0/dahat
  outs.insert(outs.end(), e0.begin(), e0.end());
  outs.push_back(differentiate(ex.E0, names::vlam));
  detail::NamedTape tape(outs, E.variables());
  const std::size_t st = tape.slot(names::t), sw = tape.slot(names::w), sl = tape.slot(names::lam);
  std::vector<std::size_t> sq, sv;
  for (int i = 0; i < n; ++i) {
    sq.push_back(tape.slot(names::q(i)));
    sv.push_back(tape.slot(names::vhat(i)));
  }
  tape.in[sw] = 1.0;  // aw, vlam, alam stay 0: vlam enters E_0 linearly

  auto rhs = [&](double s, const Vec& y) {
    tape.in[st] = s + t0;
    for (int i = 0; i < n; ++i) {
      tape.in[sq[i]] = y[i];
      tape.in[sv[i]] = y[n + i];
    }
    tape.in[sl] = y[2 * n];
    const auto& o = tape.run();
    Vec E0 = Eigen::Map<const Vec>(o.data(), n);
    Mat J = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(o.data() + n, n, n);
    Vec a = solve_mass_matrix(J, -E0);
    const std::size_t k = n + n * n;
    double e0 = o[k];
    for (int i = 0; i < n; ++i) e0 += o[k + 1 + i] * a[i];
    const double dvlam = o[k + 1 + n];
    if (dvlam == 0.0) throw SingularMatrix("E_0 does not determine lam'");
    Vec dy(2 * n + 1);
    dy << y.segment(n, n), a, -e0 / dvlam;
    return dy;
  };
  Vec y0(2 * n + 1);
  y0 << q0, v0, lam0;
  SystemSolution sol = rk4_system(rhs, y0, 0.0, t1 - t0, h);
  SliceTrajectory out;
  out.q_part.t = sol.t;
  for (double& t : out.q_part.t) t += t0;
  out.q_part.q = sol.y.leftCols(n);
  out.q_part.v = sol.y.middleCols(n, n);
  out.q_part.step = sol.step;
  for (int k = 0; k < sol.y.rows(); ++k) out.lambda.push_back(sol.y(k, 2 * n));
  return out;
}

/// Integrates the absorbed system on xi = 1, nu = 0: accelerations from
/// E_i(Lhat) = 0 and lam = D D Phi from E_0 = 0.
inline SliceTrajectory absorbed_slice_trajectory(const ExtendedLagrangian& E, const Vec& q0, const Vec& v0, double t0,
                                                 double t1, double h) {
  if (E.kind() != ExtensionKind::QuasiAbsorbed) throw PreconditionError("expected a quasi-absorbed Lagrangian");
  const int n = E.dim();
  auto ex = extended_euler_expressions(E);
  std::vector<std::string> acc = names::series(names::a, n);
  std::vector<Expr> outs = detail::with_jacobian(ex.Ei, acc);
  auto e0 = detail::with_jacobian({ex.E0}, acc);
  outs.insert(outs.end(), e0.begin(), e0.end());
  detail::NamedTape tape(outs, E.variables());
  const std::size_t st = tape.slot(names::t), sxi = tape.slot(names::xi);
  std::vector<std::size_t> sq, sv;
  for (int i = 0; i < n; ++i) {
    sq.push_back(tape.slot(names::q(i)));
    sv.push_back(tape.slot(names::v(i)));
  }
  tape.in[sxi] = 1.0;

  auto solve = [&](double t, const Vec& q, const Vec& v, double* lam) {
    tape.in[st] = t;
    for (int i = 0; i < n; ++i) {
      tape.in[sq[i]] = q[i];
      tape.in[sv[i]] = v[i];
    }
    const auto& o = tape.run();
    Vec E0 = Eigen::Map<const Vec>(o.data(), n);
    Mat J = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(o.data() + n, n, n);
    Vec a = solve_mass_matrix(J, -E0);
    if (lam) {
      // E_0 = lam - D D Phi with lam = 0 in the tape
      const std::size_t k = n + n * n;
      double e0 = o[k];
      for (int i = 0; i < n; ++i) e0 += o[k + 1 + i] * a[i];
      *lam = -e0;
    }
    return a;
  };
  SliceTrajectory out;
  out.q_part = integrate_field([&](double t, const Vec& q, const Vec& v) { return solve(t, q, v, nullptr); }, q0,
                               v0, t0, t1, h);
  for (int k = 0; k < out.q_part.samples(); ++k) {
    double lam = 0.0;
    solve(out.q_part.t[k], out.q_part.q.row(k).transpose(), out.q_part.v.row(k).transpose(), &lam);
    out.lambda.push_back(lam);
  }
  return out;
}

}  // namespace equivar
