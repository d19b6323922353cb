#pragma once

// The batch commands behind the equivar executable. Each returns a Report;
// the caller decides how to print it and which exit code to use.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>

#include "equivar/cli/report.hpp"
#include "equivar/deeffect.hpp"
#include "equivar/diffeo_family.hpp"
#include "equivar/dynamics.hpp"
#include "equivar/euler.hpp"
#include "equivar/mub.hpp"
#include "equivar/noether.hpp"
#include "equivar/polynomial.hpp"
#include "equivar/problem.hpp"
#include "equivar/sweep.hpp"

namespace equivar::cli {

struct Options {
  std::optional<std::uint64_t> seed;  // overrides the file's [seed]
  int diffeos = 20;
  std::optional<double> tol;
  std::string mode = "time";
  std::optional<int> N;
  std::optional<std::string> csv;
};

/// Bad command-line usage (exit code 2, like parse errors).
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t resolve_seed(const ProblemFile& p, const Options& o) {
  if (o.seed) return *o.seed;
  return p.seed.value_or(0);
}

inline double tol_or(const Options& o, double fallback) { return o.tol.value_or(fallback); }

namespace detail {

inline std::string vec_text(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_g17(v[i]);
  return s + ")";
}

/// Polynomials in t, q, v, a are printed expanded; anything else as built.
inline std::string display(const Expr& e, int n) {
  if (auto p = Polynomial::from_expr(e, names::tqva(n))) return to_string(p->to_expr());
  return to_string(e);
}

inline Check& add_zero_test(Report& r, std::string name, const ZeroTestResult& z, double tol) {
  Check& c = r.add_flag(std::move(name), z.zero, z.max_abs, tol);
  if (!z.zero && !z.witness.empty()) c.witness = witness_json(z.witness);
  return c;
}

inline ZeroTestOptions zero_options(std::uint64_t seed, const Options& o) {
  ZeroTestOptions z = default_zero_options(seed);
  z.tol = tol_or(o, kInvarianceTol);
  return z;
}

inline double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.samples() != b.samples()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (int k = 0; k < a.samples(); ++k) {
    d = std::max(d, std::abs(a.t[k] - b.t[k]));
    d = std::max(d, (a.q.row(k) - b.q.row(k)).cwiseAbs().maxCoeff());
    d = std::max(d, (a.v.row(k) - b.v.row(k)).cwiseAbs().maxCoeff());
  }
  return d;
}

inline const IntegrationSpec& require_integration(const ProblemFile& p, const char* cmd) {
  if (!p.integration) throw PreconditionError(std::string(cmd) + ": the problem file has no [integrate] section");
  return *p.integration;
}

}  // namespace detail

/// Euler components, momentum, Hamiltonian and the four scalars symbolically,
/// plus agreement of the coordinate and geometric Euler routes at sample points.
inline Report cmd_derive(const ProblemFile& p, const Options& o) {
  const std::uint64_t seed = resolve_seed(p, o);
  const Lagrangian& L = p.L();
  const int n = L.dim();
  Report r(seed);
  r.note("L = " + detail::display(L.body(), n));
  std::vector<Expr> el, pv;
  Expr s2, s3, s4;
  {
    std::vector<Expr> t2, t3, t4;
    for (int i = 0; i < n; ++i) {
      el.push_back(euler_expr(L, i));
      pv.push_back(L.dv(i));
      t2.push_back(vv(i) * L.dv(i));
      t4.push_back(vv(i) * el.back());
      for (int j = 0; j < n; ++j) t3.push_back(vv(i) * L.dvv(i, j) * vv(j));
    }
    s2 = add(t2);
    s3 = add(t3);
    s4 = add(t4);
  }
  for (int i = 0; i < n; ++i) r.note("EL_" + std::to_string(i + 1) + " = " + detail::display(el[i], n));
  for (int i = 0; i < n; ++i) r.note("p_" + std::to_string(i + 1) + " = " + detail::display(pv[i], n));
  Expr H = s2 - L.body();
  r.note("H = " + detail::display(H, n));
  r.note("scalar L = " + detail::display(L.body(), n));
  r.note("scalar <p, v> = " + detail::display(s2, n));
  r.note("scalar Lvv(v, v) = " + detail::display(s3, n));
  r.note("scalar <EL, v> = " + detail::display(s4, n));

  if (L.time_dependent()) {
    r.note("time-dependent L: the geometric route needs an autonomous L; see the deeffect command");
    return r;
  }
  std::mt19937_64 rng(seed);
  const Box box = Box::cube(n, -1.0, 1.0);
  double routes = 0.0, zstar = 0.0, symbolic = 0.0;
  int done = 0, rejected = 0;
  std::optional<EPoint> worst;
  while (done < 20) {
    EPoint X = sample_epoint(rng, box);
    try {
      auto g = euler_geometric_steps(L, X);
      OneForm coord = euler_oneform(L, X);
      double d = max_abs(coord.omega - g.form.omega);
      if (d >= routes) worst = X;
      routes = std::max(routes, d);
      zstar = std::max(zstar, max_abs(g.zstar_point.B));
      Assignment at{{names::t, 0.0}};
      for (int i = 0; i < n; ++i) {
        at[names::q(i)] = X.q[i];
        at[names::v(i)] = X.v[i];
        at[names::a(i)] = X.a[i];
      }
      for (int i = 0; i < n; ++i) symbolic = std::max(symbolic, std::abs(evaluate(el[i], at) - coord.omega[i]));
      ++done;
    } catch (const DomainError&) {
      if (++rejected > 400) throw PreconditionError("derive: L cannot be evaluated on the sample box");
    }
  }
  Check& c = r.add("derive.euler_routes", routes, tol_or(o, 1e-12));
  if (!c.pass && worst) c.witness = witness_json("identity", *worst);
  r.add("derive.zstar_membership", zstar, tol_or(o, 1e-12));
  r.add("derive.symbolic_vs_jet", symbolic, tol_or(o, 1e-9));
  return r;
}

/// Transformation laws under the file's diffeos plus `diffeos` random ones.
inline Report cmd_equivariance(const ProblemFile& p, const Options& o) {
  const std::uint64_t seed = resolve_seed(p, o);
  const Lagrangian& L = p.L();
  if (L.time_dependent()) throw PreconditionError("equivariance: L is time-dependent; use the deeffect command");
  if (o.diffeos < 0) throw UsageError("--diffeos must be nonnegative");
  std::mt19937_64 rng(seed);
  std::vector<Diffeo> phis;
  for (const auto& d : p.diffeos) phis.push_back(d.build(p.dimension));
  auto random = random_diffeos(p.dimension, o.diffeos, rng);
  phis.insert(phis.end(), random.begin(), random.end());
  if (phis.empty()) throw UsageError("equivariance: no diffeos (file has none and --diffeos is 0)");
  SweepReport s;
  sweep_diffeos(L, phis, 10, rng, s);
  const double tol = tol_or(o, 1e-8);
  Report r(seed);
  r.note("diffeos: " + std::to_string(s.diffeos) + ", points: " + std::to_string(s.points));
  auto law = [&](const char* name, const SweepResidual& res) -> Check& {
    Check& c = r.add(name, res.max, tol);
    if (res.where && !c.pass) c.witness = witness_json(res.diffeo, *res.where);
    return c;
  };
  law("equivariance.jet_pushforward", s.jet);
  law("equivariance.euler_covector", s.euler);
  law("equivariance.momentum_covector", s.momentum);
  law("equivariance.eta_covector", s.eta);
  law("equivariance.four_scalars", s.scalars);
  Check& naive = law("equivariance.naive_dLdq_control", s.naive);
  naive.expected_fail = true;
  naive.detail = "dL/dq alone is not a covector under nonlinear changes";
  if (s.naive.where) naive.witness = witness_json(s.naive.diffeo, *s.naive.where);
  return r;
}

/// Classification, charge, identity and conservation checks for each [symmetry].
inline Report cmd_noether(const ProblemFile& p, const Options& o) {
  const std::uint64_t seed = resolve_seed(p, o);
  const Lagrangian& L = p.L();
  if (p.symmetries.empty()) throw PreconditionError("noether: the problem file has no [symmetry] section");
  Report r(seed);
  ZeroTestOptions zo = detail::zero_options(seed, o);
  std::optional<Trajectory> tr;
  if (p.integration) {
    const auto& in = *p.integration;
    tr = integrate(L, in.q0, in.v0, in.t0, in.t1, in.h);
  }
  for (const auto& sym : p.symmetries) {
    const std::string base = "noether." + sym.name;
    InvarianceVerdict v = classify_invariance(L, sym.field, zo);
    const bool usable = v.kind == InvarianceKind::Invariant || v.kind == InvarianceKind::QuasiInvariant;
    const bool matches = sym.expect ? v.kind == *sym.expect : usable;
    Check& c = r.add_flag(base + ".classification", matches, v.residual, zo.tol);
    c.detail = to_string(v.kind);
    if (v.phi) c.detail += ", Phi = " + to_string(*v.phi);
    if (!v.detail.empty()) c.detail += "; " + v.detail;
    if (!v.witness.empty()) c.witness = witness_json(v.witness);

    detail::add_zero_test(r, base + ".identity", zero_test(noether_identity_residual(L, sym.field), zo), zo.tol);

    std::optional<Expr> phi = sym.phi ? sym.phi : v.phi;
    if (sym.phi) detail::add_zero_test(r, base + ".phi", verify_quasi(L, sym.field, *sym.phi, zo), zo.tol);
    if (!(v.kind == InvarianceKind::Invariant || phi)) continue;
    Expr Q = charge_expr(L, sym.field, phi.value_or(Expr(0.0)));
    r.note(sym.name + ": " + to_string(v.kind) + ", Q = " + detail::display(Q, L.dim()));
    detail::add_zero_test(r, base + ".onshell", onshell_zero_test(L, Q, zo), zo.tol);
    if (tr) r.add(base + ".drift", conservation_drift(*tr, Q).max_abs_drift, tol_or(o, 1e-8));
  }
  return r;
}

/// Autonomization (mode "time") or quasi-invariance absorption (mode "quasi").
inline Report cmd_deeffect(const ProblemFile& p, const Options& o) {
  const std::uint64_t seed = resolve_seed(p, o);
  const Lagrangian& L = p.L();
  const int n = L.dim();
  Report r(seed);
  ZeroTestOptions zo = detail::zero_options(seed, o);
  zo.box.with(names::w, 0.5, 1.5).with(names::xi, 0.5, 1.5);
  const double traj_tol = tol_or(o, 1e-8);

  if (o.mode == "time") {
    ExtendedLagrangian E = autonomize(L);
    r.note("Lhat = " + to_string(E.body()));
    auto ex = extended_euler_expressions(E);
    detail::add_zero_test(r, "deeffect.time.einf", zero_test(ex.Einf - (var(names::w) - Expr(1.0)), zo), zo.tol);
    Bindings slice{{names::w, Expr(1.0)}, {names::aw, Expr(0.0)}};
    for (int i = 0; i < n; ++i) {
      slice[names::vhat(i)] = vv(i);
      slice[names::ahat(i)] = av(i);
    }
    std::vector<Expr> diff;
    for (int i = 0; i < n; ++i) diff.push_back(substitute(ex.Ei[i] / var(names::w), slice) - euler_expr(L, i));
    detail::add_zero_test(r, "deeffect.time.slice_euler", zero_test(diff, zo), zo.tol);
    for (const auto& sym : p.symmetries) {
      const std::string base = "deeffect.time." + sym.name;
      EquivalenceReport e = verify_invariance_equivalence(E, sym.field, seed);
      detail::add_zero_test(r, base + ".identity", e.identity, zo.tol);
      Check& c = detail::add_zero_test(r, base + ".leftover_lam_Dtau", e.leftover, zo.tol);
      c.detail = "Xhat(Lhat) - w(X_V(L) + D(tau L)) - lam D tau";
      Check& q = r.add_flag(base + ".equivalence", e.equivalent(), e.identity.max_abs, zo.tol);
      q.detail = std::string("Xhat(Lhat) ") + (e.lhs_zero.zero ? "zero" : "nonzero") + ", original condition " +
                 (e.rhs_zero.zero ? "zero" : "nonzero");
    }
    if (p.integration) {
      const auto& in = *p.integration;
      Trajectory direct = integrate(L, in.q0, in.v0, in.t0, in.t1, in.h);
      SliceTrajectory ext = autonomized_slice_trajectory(E, in.q0, in.v0, in.t0, in.t1, in.h);
      r.add("deeffect.time.slice_trajectory", detail::sup_distance(direct, ext.q_part), traj_tol);
    }
    return r;
  }
  if (o.mode != "quasi") throw UsageError("--mode must be 'time' or 'quasi'");

  if (p.symmetries.empty()) throw PreconditionError("deeffect: the problem file has no [symmetry] section");
  for (const auto& sym : p.symmetries) {
    std::optional<Expr> phi = sym.phi;
    if (!phi) {
      InvarianceVerdict v = classify_invariance(L, sym.field, default_zero_options(seed));
      if (v.kind == InvarianceKind::Invariant) phi = Expr(0.0);
      else if (v.phi) phi = v.phi;
      else throw PreconditionError("deeffect: symmetry '" + sym.name + "' is " + to_string(v.kind) + "; give phi");
    }
    auto [E, s] = absorb_quasi_invariance(L, sym.field, *phi);
    const std::string base = "deeffect.quasi." + sym.name;
    r.note(sym.name + ": Lhat = " + to_string(E.body()) + ", eta_inf = " + to_string(s.etainf));
    AbsorptionReport a = verify_absorption(E, s, sym.field, seed);
    detail::add_zero_test(r, base + ".einf", a.einf, zo.tol);
    detail::add_zero_test(r, base + ".e0", a.e0, zo.tol);
    detail::add_zero_test(r, base + ".euler_unchanged", a.euler_unchanged, zo.tol);
    detail::add_zero_test(r, base + ".euler_unchanged_on_slice", a.euler_unchanged_slice, zo.tol);
    Check& inv = detail::add_zero_test(r, base + ".invariance", a.invariance, zo.tol);
    inv.detail = "Xhat(Lhat)";
    Check& left = detail::add_zero_test(r, base + ".invariance_leftover", a.leftover, zo.tol);
    left.detail = "Xhat(Lhat) - (D Phi + nu X(D Phi))/xi";
    if (p.integration) {
      const auto& in = *p.integration;
      Trajectory direct = integrate(L, in.q0, in.v0, in.t0, in.t1, in.h);
      SliceTrajectory ext = absorbed_slice_trajectory(E, in.q0, in.v0, in.t0, in.t1, in.h);
      r.add(base + ".slice_trajectory", detail::sup_distance(direct, ext.q_part), traj_tol);
    }
  }
  return r;
}

/// RK4 trajectory from the [integrate] section; energy drift when L is autonomous.
inline Report cmd_integrate(const ProblemFile& p, const Options& o) {
  const std::uint64_t seed = resolve_seed(p, o);
  const Lagrangian& L = p.L();
  const auto& in = detail::require_integration(p, "integrate");
  Trajectory tr = integrate(L, in.q0, in.v0, in.t0, in.t1, in.h);
  Report r(seed);
  const int K = tr.samples();
  r.note("samples: " + std::to_string(K) + ", step: " + format_g17(tr.step));
  r.note("final q = " + detail::vec_text(tr.q.row(K - 1).transpose()) +
         ", v = " + detail::vec_text(tr.v.row(K - 1).transpose()));
  const bool finite = tr.q.allFinite() && tr.v.allFinite();
  r.add_flag("integrate.finite", finite, finite ? 0.0 : 1.0, 0.0);
  if (!L.time_dependent()) {
    std::vector<Expr> terms{neg(L.body())};
    for (int i = 0; i < L.dim(); ++i) terms.push_back(vv(i) * L.dv(i));
    r.add("integrate.energy_drift", conservation_drift(tr, add(terms)).max_abs_drift, tol_or(o, 1e-8));
  }
  if (o.csv) {
    std::ofstream out(*o.csv);
    if (!out) throw PreconditionError("integrate: cannot write '" + *o.csv + "'");
    write_csv(out, tr);
  }
  return r;
}

/// Fourier pairs for N (or 2..12), plus the identity matrix as a negative control.
inline Report cmd_mub(const Options& o) {
  if (o.N && *o.N < 2) throw UsageError("--N must be at least 2");
  Report r(o.seed.value_or(0));
  const double tol = tol_or(o, 1e-12);
  const int lo = o.N.value_or(2), hi = o.N.value_or(12);
  for (int N = lo; N <= hi; ++N) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "mub.N%02d", N);
    const std::string base = tag;
    CMat U = fourier_mub(N);
    MubCheck c = check_mub(U, tol);
    r.add(base + ".unbiased", c.unbiased_residual, tol);
    r.add(base + ".unitary", c.unitary_residual, tol);
    r.add(base + ".phase_roundtrip", (reconstruct(phase_lagrangian(U)) - U).cwiseAbs().maxCoeff(), tol);
  }
  MubCheck id = check_mub(CMat::Identity(2, 2), tol);
  Check& c = r.add_flag("mub.identity_control", id.unbiased, id.unbiased_residual, tol);
  c.expected_fail = true;
  c.detail = std::string("unbiased=") + (id.unbiased ? "true" : "false") + " unitary=" + (id.unitary ? "true" : "false");
  return r;
}

}  // namespace equivar::cli
