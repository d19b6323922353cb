#pragma once

// Fixed-step RK4 on q' = v, v' = a(t, q, v) for regular Lagrangians, plus
// drift measurement of conserved quantities along the result.

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "equivar/error.hpp"
#include "equivar/jets.hpp"
#include "equivar/tape.hpp"

namespace equivar {

inline constexpr double kMaxPivotRatio = 1e12;

/// Solves M a = rhs by row-pivoted elimination, rejecting M when the ratio of
/// largest to smallest pivot reaches kMaxPivotRatio.
inline Vec solve_mass_matrix(const Mat& M, const Vec& rhs) {
  Eigen::PartialPivLU<Mat> lu(M);
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double lo = pivots.minCoeff(), hi = pivots.maxCoeff();
  if (!(lo > 0.0) || hi / lo >= kMaxPivotRatio)
    throw SingularMatrix("mass matrix is singular or ill-conditioned (pivot ratio " +
                         std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");
  return lu.solve(rhs);
}

/// a = Lvv^-1 (Lq - Lqv^T v - Ltv). The Ltv term vanishes for autonomous L.
inline Vec solve_acceleration(const Lagrangian& L, double t, const TangentPoint& x) {
  JetWithTime jt = L.evaluate_jet(t, x);
  const Jet2& j = jt.jet;
  return solve_mass_matrix(j.Lvv.transpose(), j.Lq - j.Lqv.transpose() * x.v - jt.Ltv);
}

struct Trajectory {
  std::vector<double> t;
  Mat q;  // K x n
  Mat v;  // K x n
  double step = 0.0;
  std::string method = "rk4";

  int samples() const noexcept { return static_cast<int>(t.size()); }
  int dim() const noexcept { return static_cast<int>(q.cols()); }
  TangentPoint state(int k) const { return {q.row(k).transpose(), v.row(k).transpose()}; }
};

/// Acceleration field a(t, q, v).
using AccelerationField = std::function<Vec(double, const Vec&, const Vec&)>;

/// Number of RK4 steps covering [t0, t1] with step at most h.
inline int step_count(double t0, double t1, double h) {
  if (!(h > 0.0)) throw PreconditionError("integrate: step must be positive");
  if (!(t1 >= t0)) throw PreconditionError("integrate: t1 must not precede t0");
  // the 1e-9 slack keeps (t1 - t0)/h = 10000.000000000002 from adding a step
  return std::max(1, static_cast<int>(std::ceil((t1 - t0) / h - 1e-9)));
}

/// Right-hand side y' = f(t, y) of a first-order system.
using FirstOrderField = std::function<Vec(double, const Vec&)>;

struct SystemSolution {
  std::vector<double> t;
  Mat y;  // K x dim
  double step = 0.0;
};

/// Classical fixed-step RK4 for y' = f(t, y) on [t0, t1]. The step is shrunk
/// to (t1 - t0)/N with N = ceil((t1 - t0)/h) so samples are uniform and end at t1.
inline SystemSolution rk4_system(const FirstOrderField& f, const Vec& y0, double t0, double t1, double h) {
  const int N = step_count(t0, t1, h);
  const double dt = (t1 - t0) / N;
  SystemSolution sol;
  sol.step = dt;
  sol.t.resize(N + 1);
  sol.y.resize(N + 1, y0.size());
  Vec y = y0;
  // Kahan compensation, so rounding in the state does not grow with the number of steps
  Vec comp = Vec::Zero(y0.size());
  sol.t[0] = t0;
  sol.y.row(0) = y.transpose();
  for (int k = 0; k < N; ++k) {
    const double t = t0 + k * dt;
    try {
      Vec k1 = f(t, y);
      Vec k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
      Vec k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
      Vec k4 = f(t + dt, y + dt * k3);
      Vec inc = dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4) - comp;
      Vec next = y + inc;
      comp = (next - y) - inc;
      y = next;
    } catch (const SingularMatrix& e) {
      throw SingularMatrix("integrate: failed in step starting at t = " + std::to_string(t) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("integrate: failed in step starting at t = " + std::to_string(t) + ": " + e.what());
    }
    if (!y.allFinite())
      throw DomainError("integrate: non-finite state after step starting at t = " + std::to_string(t));
    sol.t[k + 1] = k + 1 == N ? t1 : t0 + (k + 1) * dt;
    sol.y.row(k + 1) = y.transpose();
  }
  return sol;
}

/// RK4 on q' = v, v' = accel(t, q, v).
inline Trajectory integrate_field(const AccelerationField& accel, const Vec& q0, const Vec& v0, double t0,
                                  double t1, double h) {
  if (q0.size() != v0.size() || q0.size() == 0) throw PreconditionError("integrate: q0 and v0 dimensions differ");
  const int n = static_cast<int>(q0.size());
  Vec y0(2 * n);
  y0 << q0, v0;
  SystemSolution sol = rk4_system(
      [&](double t, const Vec& y) {
        Vec dy(2 * n);
        dy << y.tail(n), accel(t, y.head(n), y.tail(n));
        return dy;
      },
      y0, t0, t1, h);
  Trajectory tr;
  tr.t = std::move(sol.t);
  tr.q = sol.y.leftCols(n);
  tr.v = sol.y.rightCols(n);
  tr.step = sol.step;
  return tr;
}

/// Classical RK4 on Euler's equations of L.
inline Trajectory integrate(const Lagrangian& L, const Vec& q0, const Vec& v0, double t0, double t1, double h) {
  if (q0.size() != L.dim()) throw PreconditionError("integrate: initial state dimension differs from L");
  return integrate_field(
      [&L](double t, const Vec& q, const Vec& v) { return solve_acceleration(L, t, {q, v}); }, q0, v0, t0, t1, h);
}

struct Drift {
  double max_abs_drift = 0.0;
  std::vector<double> series;
};

/// Q(t_k, q_k, v_k) along the trajectory and max |Q(t_k) - Q(t_0)|.
inline Drift conservation_drift(const Trajectory& tr, const Expr& Q) {
  const int n = tr.dim();
  Tape tape(Q, names::tqv(n));
  std::vector<double> in(1 + 2 * n), out(1), scratch;
  Drift d;
  d.series.reserve(tr.samples());
  for (int k = 0; k < tr.samples(); ++k) {
    in[0] = tr.t[k];
    for (int i = 0; i < n; ++i) {
      in[1 + i] = tr.q(k, i);
      in[1 + n + i] = tr.v(k, i);
    }
    tape.run(in, out, scratch);
    d.series.push_back(out[0]);
    d.max_abs_drift = std::max(d.max_abs_drift, std::abs(out[0] - d.series.front()));
  }
  return d;
}

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV with header t,q1..qn,v1..vn and 17 significant digits per value.
inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const int n = tr.dim();
  os << "t";
  for (int i = 0; i < n; ++i) os << ',' << names::q(i);
  for (int i = 0; i < n; ++i) os << ',' << names::v(i);
  os << '\n';
  for (int k = 0; k < tr.samples(); ++k) {
    os << format_g17(tr.t[k]);
    for (int i = 0; i < n; ++i) os << ',' << format_g17(tr.q(k, i));
    for (int i = 0; i < n; ++i) os << ',' << format_g17(tr.v(k, i));
    os << '\n';
  }
}

}  // namespace equivar
