#pragma once

// Coordinate-change sweep: for each diffeo and sample point, compares every
// construction computed in the new chart against the old one moved by the
// appropriate transformation law.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "equivar/euler.hpp"

namespace equivar {

/// Worst residual of one law over a sweep, and where it happened.
struct SweepResidual {
  double max = 0.0;
  std::string diffeo;
  std::optional<EPoint> where;  // source-chart point

  void record(double r, const std::string& name, const EPoint& X) {
    if (r > max || !where) {
      max = std::max(max, r);
      diffeo = name;
      where = X;
    }
  }
};

struct SweepReport {
  SweepResidual jet;        // pushforward_jet2 vs the jet of the substituted Lagrangian, all six blocks
  SweepResidual euler;      // EL covector law
  SweepResidual momentum;   // conjugate momentum covector law
  SweepResidual eta;        // Lvv^T v covector law
  SweepResidual scalars;    // all four scalars
  SweepResidual naive;      // dL/dq treated as a covector (expected to fail)
  int diffeos = 0;
  int points = 0;
};

/// Sample point in the diffeo's domain box with velocity and acceleration in [-1, 1].
inline EPoint sample_epoint(std::mt19937_64& rng, const Box& box) {
  const int n = static_cast<int>(box.lo.size());
  Vec q = box.sample(rng), v(n), a(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, -1.0, 1.0);
  for (int i = 0; i < n; ++i) a[i] = uniform(rng, -1.0, 1.0);
  return {q, v, a};
}

/// Runs every law for L under `phis`, `points` samples each. Points where L or
/// the substituted Lagrangian cannot be evaluated are redrawn (at most 20x).
inline void sweep_diffeos(const Lagrangian& L, const std::vector<Diffeo>& phis, int points, std::mt19937_64& rng,
                          SweepReport& out) {
  for (const auto& phi : phis) {
    if (phi.dim() != L.dim()) throw PreconditionError("sweep: diffeo and Lagrangian dimensions differ");
    Lagrangian Lt = pullback_lagrangian(L, phi);
    ++out.diffeos;
    const std::string label = phi.name() + "#" + std::to_string(out.diffeos);
    int done = 0, rejected = 0;
    while (done < points) {
      EPoint X = sample_epoint(rng, phi.domain());
      try {
        EPoint Xt = transform_epoint(phi, X);
        DiffeoDerivatives d = phi.derivatives(Xt.q);
        const Mat& M = d.dq_dqt;
        Jet2 j = jet2_at(L, 0.0, X.tangent());
        Jet2 jt = jet2_at(Lt, 0.0, Xt.tangent());

        out.jet.record(jet_distance(pushforward_jet2(d, j, Xt.v), jt), label, X);
        out.euler.record(max_abs(euler_components(jt, Xt.v, Xt.a) - M.transpose() * euler_components(j, X.v, X.a)),
                         label, X);
        out.momentum.record(max_abs(jt.Lv - M.transpose() * j.Lv), label, X);
        out.eta.record(max_abs(eta_components(jt, Xt.v) - M.transpose() * eta_components(j, X.v)), label, X);
        ScalarQuad s = four_scalars(j, X), st = four_scalars(jt, Xt);
        out.scalars.record(std::max({std::abs(s.s1 - st.s1), std::abs(s.s2 - st.s2), std::abs(s.s3 - st.s3),
                                     std::abs(s.s4 - st.s4)}),
                           label, X);
        out.naive.record(max_abs(jt.Lq - M.transpose() * j.Lq), label, X);
        ++done;
        ++out.points;
      } catch (const DomainError&) {
        if (++rejected > 20 * points) throw PreconditionError("sweep: too many points outside the domain of L");
      }
    }
  }
}

/// `count` seeded random diffeos of the standard family for dimension n.
inline std::vector<Diffeo> random_diffeos(int n, int count, std::mt19937_64& rng) {
  std::vector<Diffeo> out;
  for (int k = 0; k < count; ++k) out.push_back(random_diffeo(n, rng));
  return out;
}

}  // namespace equivar
