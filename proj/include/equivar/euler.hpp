#pragma once

// Conjugate momentum, the Euler one-form, and the equivariant one-forms
// built from the second jet of L and a point X = (q, v, a) of E(TM).
//
// The Euler one-form is available by two independent routes:
//   coordinate:  EL_k = dL/dq^k - (d2L/dq^i dv^k) v^i - (d2L/dv^j dv^k) a^j
//   geometric:   EL(X) = pi_flat(dL - lambda_inv(p_L* X))
// and the two must agree to rounding.

#include <functional>

#include "equivar/bundles.hpp"
#include "equivar/jets.hpp"

namespace equivar {

namespace detail {

inline void require_autonomous(const Lagrangian& L, const char* op) {
  if (L.time_dependent())
    throw PreconditionError(std::string(op) +
                            ": Lagrangian depends on t; promote time to a coordinate first (autonomize)");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Jet-level constructions (shared by the Lagrangian-level API and the sweeps)

inline Vec euler_components(const Jet2& j, const Vec& v, const Vec& a) {
  return j.Lq - j.Lqv.transpose() * v - j.Lvv.transpose() * a;
}

/// eta(L)_k = Lvv(i, k) v^i.
inline Vec eta_components(const Jet2& j, const Vec& v) { return j.Lvv.transpose() * v; }

/// dL as a point of T*(TM).
inline CotangentTMPoint differential(const Jet2& j, const TangentPoint& x) { return {x.q, x.v, j.Lq, j.Lv}; }

/// The differential of p_L: (q, v) -> (q, Lv) applied to X = (v, v, a).
inline TangentTstarMPoint momentum_pushforward(const Jet2& j, const EPoint& X) {
  Vec T = j.Lqv.transpose() * X.v + j.Lvv.transpose() * X.a;
  return {X.q, j.Lv, X.v, T};
}

// ---------------------------------------------------------------------------
// Lagrangian-level operations

inline OneForm conjugate_momentum(const Lagrangian& L, double t, const TangentPoint& x) {
  return {x.q, jet2_at(L, t, x).Lv};
}

/// p_L = pi o Lambda o dL.
inline OneForm conjugate_momentum_geometric(const Lagrangian& L, double t, const TangentPoint& x) {
  return project(lambda_iso(differential(jet2_at(L, t, x), x)));
}

inline OneForm euler_oneform(const Lagrangian& L, const EPoint& X) {
  detail::require_autonomous(L, "euler_oneform");
  Jet2 j = jet2_at(L, 0.0, X.tangent());
  return {X.q, euler_components(j, X.v, X.a)};
}

/// Intermediate values of the geometric route, kept for inspection.
struct GeometricEuler {
  CotangentTMPoint dL;
  TangentTstarMPoint pushforward;
  CotangentTMPoint zstar_point;  // dL - lambda_inv(p_L* X)
  OneForm form;
};

inline GeometricEuler euler_geometric_steps(const Lagrangian& L, const EPoint& X, double tol = kZStarTol) {
  detail::require_autonomous(L, "euler_oneform_geometric");
  Jet2 j = jet2_at(L, 0.0, X.tangent());
  CotangentTMPoint dL = differential(j, X.tangent());
  TangentTstarMPoint push = momentum_pushforward(j, X);
  CotangentTMPoint z = dL - lambda_inv(push);
  OneForm form = pi_flat(z, tol);  // throws off Z*(TM): that would be a bug here, not a math failure
  return {dL, push, z, form};
}

inline OneForm euler_oneform_geometric(const Lagrangian& L, const EPoint& X) {
  return euler_geometric_steps(L, X).form;
}

/// Lambda o dL - (p_L)_* X. The S slot vanishes identically and T carries EL.
inline TangentTstarMPoint euler_condition_vector(const Lagrangian& L, const EPoint& X) {
  detail::require_autonomous(L, "euler_condition_vector");
  Jet2 j = jet2_at(L, 0.0, X.tangent());
  return lambda_iso(differential(j, X.tangent())) - momentum_pushforward(j, X);
}

struct ScalarQuad {
  double s1 = 0.0;  // L
  double s2 = 0.0;  // <p_L, v>
  double s3 = 0.0;  // Lvv(v, v)
  double s4 = 0.0;  // <EL(X), v>

  double hamiltonian() const noexcept { return s2 - s1; }
};

inline ScalarQuad four_scalars(const Jet2& j, const EPoint& X) {
  return {j.L, j.Lv.dot(X.v), X.v.dot(j.Lvv * X.v), euler_components(j, X.v, X.a).dot(X.v)};
}

inline ScalarQuad four_scalars(const Lagrangian& L, const EPoint& X) {
  detail::require_autonomous(L, "four_scalars");
  return four_scalars(jet2_at(L, 0.0, X.tangent()), X);
}

/// A coefficient of the equivariant family: any function of the four scalars.
using ScalarFunction = std::function<double(const ScalarQuad&)>;

inline ScalarFunction constant_coefficient(double c) {
  return [c](const ScalarQuad&) { return c; };
}

struct FamilyCoefficients {
  ScalarFunction alpha = constant_coefficient(0.0);
  ScalarFunction beta = constant_coefficient(0.0);
  ScalarFunction gamma = constant_coefficient(1.0);

  static FamilyCoefficients constants(double a, double b, double g) {
    return {constant_coefficient(a), constant_coefficient(b), constant_coefficient(g)};
  }
};

/// alpha pi(L) + beta eta(L) + gamma EL(X), coefficients evaluated on the four scalars.
inline OneForm equivariant_family(const Jet2& j, const EPoint& X, const FamilyCoefficients& c) {
  ScalarQuad s = four_scalars(j, X);
  Vec w = c.alpha(s) * j.Lv + c.beta(s) * eta_components(j, X.v) + c.gamma(s) * euler_components(j, X.v, X.a);
  return {X.q, w};
}

inline OneForm equivariant_family(const Lagrangian& L, const EPoint& X, const FamilyCoefficients& c) {
  detail::require_autonomous(L, "equivariant_family");
  return equivariant_family(jet2_at(L, 0.0, X.tangent()), X, c);
}

struct GammaEstimate {
  double gamma = 0.0;
  double residual = 0.0;  // max |dOmega_k/da^j + gamma Lvv(j, k)|
};

inline constexpr double kGammaStep = 1e-5;

/// Recovers gamma from dOmega_k/da^j = -gamma Lvv(j, k) by central differences
/// in each acceleration slot and least squares over all (j, k).
inline GammaEstimate extract_gamma(const Lagrangian& L, const EPoint& X,
                                   const std::function<OneForm(const EPoint&)>& omega_fn) {
  detail::require_autonomous(L, "extract_gamma");
  const Mat Lvv = jet2_at(L, 0.0, X.tangent()).Lvv;
  if (max_abs(Lvv) <= 1e-6) throw PreconditionError("extract_gamma: Lvv vanishes at X, gamma not identifiable");
  const int n = X.dim();
  Mat D(n, n);  // D(j, k) = dOmega_k / da^j
  for (int jj = 0; jj < n; ++jj) {
    EPoint plus = X, minus = X;
    plus.a[jj] += kGammaStep;
    minus.a[jj] -= kGammaStep;
    D.row(jj) = ((omega_fn(plus).omega - omega_fn(minus).omega) / (2 * kGammaStep)).transpose();
  }
  GammaEstimate g;
  g.gamma = -(D.cwiseProduct(Lvv)).sum() / Lvv.squaredNorm();
  g.residual = max_abs(D + g.gamma * Lvv);
  return g;
}

/// The acceleration solving EL(X) = 0 for autonomous, regular L.
inline Vec regular_acceleration(const Jet2& j, const Vec& v) {
  Eigen::PartialPivLU<Mat> lu(j.Lvv.transpose());
  return lu.solve(j.Lq - j.Lqv.transpose() * v);
}

}  // namespace equivar
