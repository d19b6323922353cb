#pragma once

// Points of the iterated bundles over a chart of M, in coordinate bases.
//
//   TM          (q, v)
//   E(TM)       (q, v, a)       -- the element (v, v, a) of T(TM)
//   T*(TM)      (q, v; A, B)    -- A dq + B dv
//   T(T*M)      (q, p; S, T)    -- S d/dq + T d/dp
//   T*M         (q, omega)
//
// Only the chart expressions are implemented. The fiber components A, B, S, T
// do not transform as their index position suggests, so no transformation
// law is attached to them here; OneForm is the only covector type.

#include <cmath>
#include <string>

#include "equivar/error.hpp"
#include "equivar/linalg.hpp"

namespace equivar {

namespace detail {

inline void require_shape(const char* type, int n, std::initializer_list<const Vec*> parts) {
  for (const Vec* p : parts) {
    if (p->size() != n) throw PreconditionError(std::string(type) + ": component dimensions differ");
    if (!p->allFinite()) throw PreconditionError(std::string(type) + ": non-finite component");
  }
}

}  // namespace detail

struct TangentPoint {
  Vec q;
  Vec v;

  TangentPoint(Vec q_, Vec v_) : q(std::move(q_)), v(std::move(v_)) {
    detail::require_shape("TangentPoint", static_cast<int>(q.size()), {&v});
  }
  int dim() const noexcept { return static_cast<int>(q.size()); }
};

struct EPoint {
  Vec q;
  Vec v;
  Vec a;

  EPoint(Vec q_, Vec v_, Vec a_) : q(std::move(q_)), v(std::move(v_)), a(std::move(a_)) {
    detail::require_shape("EPoint", static_cast<int>(q.size()), {&v, &a});
  }
  int dim() const noexcept { return static_cast<int>(q.size()); }
  TangentPoint tangent() const { return {q, v}; }
};

struct CotangentTMPoint {
  Vec q;
  Vec v;
  Vec A;  // dq components
  Vec B;  // dv components

  CotangentTMPoint(Vec q_, Vec v_, Vec A_, Vec B_)
      : q(std::move(q_)), v(std::move(v_)), A(std::move(A_)), B(std::move(B_)) {
    detail::require_shape("CotangentTMPoint", static_cast<int>(q.size()), {&v, &A, &B});
  }
  int dim() const noexcept { return static_cast<int>(q.size()); }
};

struct TangentTstarMPoint {
  Vec q;
  Vec p;
  Vec S;  // d/dq components
  Vec T;  // d/dp components

  TangentTstarMPoint(Vec q_, Vec p_, Vec S_, Vec T_)
      : q(std::move(q_)), p(std::move(p_)), S(std::move(S_)), T(std::move(T_)) {
    detail::require_shape("TangentTstarMPoint", static_cast<int>(q.size()), {&p, &S, &T});
  }
  int dim() const noexcept { return static_cast<int>(q.size()); }
};

/// A covector omega_i dq^i at q. Under a coordinate change it transforms as
/// omega~_i = omega_a dq^a/dq~^i (see transform_oneform in jets.hpp).
struct OneForm {
  Vec q;
  Vec omega;

  OneForm(Vec q_, Vec omega_) : q(std::move(q_)), omega(std::move(omega_)) {
    detail::require_shape("OneForm", static_cast<int>(q.size()), {&omega});
  }
  int dim() const noexcept { return static_cast<int>(q.size()); }
  /// Pairing with a vector at the same base point.
  double operator()(const Vec& v) const { return omega.dot(v); }
};

inline constexpr double kZStarTol = 1e-9;

/// The canonical isomorphism T*(TM) -> T(T*M): (q, v; A, B) -> (q, B; v, A).
inline TangentTstarMPoint lambda_iso(const CotangentTMPoint& x) { return {x.q, x.B, x.v, x.A}; }

/// Inverse of lambda_iso: (q, p; S, T) -> (q, S; T, p).
inline CotangentTMPoint lambda_inv(const TangentTstarMPoint& y) { return {y.q, y.S, y.T, y.p}; }

/// Membership in Z*(TM): forms with vanishing dv part.
inline bool in_zstar(const CotangentTMPoint& x, double tol = kZStarTol) {
  if (tol < 0) throw PreconditionError("in_zstar: negative tolerance");
  return x.B.size() == 0 || x.B.cwiseAbs().maxCoeff() <= tol;
}

/// Z*(TM) -> T*M: (q, v; A, 0) -> (q, A). Points off Z*(TM) are rejected.
inline OneForm pi_flat(const CotangentTMPoint& x, double tol = kZStarTol) {
  if (!in_zstar(x, tol))
    throw Error("pi_flat: point is not in Z*(TM), max|B| = " + std::to_string(x.B.cwiseAbs().maxCoeff()));
  return {x.q, x.A};
}

/// Embeds a covector on M as the point (q, v; A, 0) of Z*(TM).
inline CotangentTMPoint embed_zstar(const OneForm& w, const Vec& v) {
  return {w.q, v, w.omega, Vec::Zero(w.dim())};
}

/// Canonical projection T(T*M) -> T*M.
inline OneForm project(const TangentTstarMPoint& y) { return {y.q, y.p}; }

/// Fiberwise difference of two points over the same base point of TM.
inline CotangentTMPoint operator-(const CotangentTMPoint& x, const CotangentTMPoint& y) {
  if ((x.q - y.q).cwiseAbs().maxCoeff() > 0 || (x.v - y.v).cwiseAbs().maxCoeff() > 0)
    throw PreconditionError("T*(TM) difference of points over different base points");
  return {x.q, x.v, x.A - y.A, x.B - y.B};
}

inline TangentTstarMPoint operator-(const TangentTstarMPoint& x, const TangentTstarMPoint& y) {
  if ((x.q - y.q).cwiseAbs().maxCoeff() > 0 || (x.p - y.p).cwiseAbs().maxCoeff() > 0)
    throw PreconditionError("T(T*M) difference of points over different base points");
  return {x.q, x.p, x.S - y.S, x.T - y.T};
}

}  // namespace equivar
