#pragma once

// Coordinate changes with closed-form inverses, for randomized sweeps.
//
// random_diffeo composes an invertible affine map, a nonlinear stage and a
// second affine map. The nonlinear stage is a triangular polynomial shear
//   q~^i = q^i + c p(q^1 .. q^{i-1}),  deg p <= 3, |c| <= 0.3
// (inverted by back-substitution) followed by coordinatewise sinh(k q)/k
// (inverted with the log formula for asinh). In one dimension the shear is
// only a translation, so the sinh stage supplies the curvature there.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "equivar/jets.hpp"

namespace equivar {

struct CoordinateMap {
  std::vector<Expr> forward;
  std::vector<Expr> inverse;
};

namespace detail {

inline std::vector<Expr> q_vars(int n) {
  std::vector<Expr> out;
  for (int i = 0; i < n; ++i) out.push_back(qv(i));
  return out;
}

inline std::vector<Expr> compose(const std::vector<Expr>& outer, const std::vector<Expr>& inner) {
  Bindings b;
  for (std::size_t i = 0; i < inner.size(); ++i) b[names::q(static_cast<int>(i))] = inner[i];
  std::vector<Expr> out;
  for (const auto& e : outer) out.push_back(substitute(e, b));
  return out;
}

}  // namespace detail

/// first, then second.
inline CoordinateMap then(const CoordinateMap& first, const CoordinateMap& second) {
  return {detail::compose(second.forward, first.forward), detail::compose(first.inverse, second.inverse)};
}

inline CoordinateMap affine_map(const Mat& B, const Vec& c) {
  const int n = static_cast<int>(c.size());
  Mat Binv = B.inverse();
  CoordinateMap m;
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> f{Expr(c[i])}, g;
    for (int j = 0; j < n; ++j) {
      f.push_back(Expr(B(i, j)) * qv(j));
      g.push_back(Expr(Binv(i, j)) * (qv(j) - Expr(c[j])));
    }
    m.forward.push_back(add(std::move(f)));
    m.inverse.push_back(add(std::move(g)));
  }
  return m;
}

inline CoordinateMap random_affine(int n, std::mt19937_64& rng) {
  for (;;) {
    Mat B = Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) += 0.4 * uniform(rng, -1.0, 1.0);
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = uniform(rng, -0.5, 0.5);
    Eigen::JacobiSVD<Mat> svd(B);
    const auto& s = svd.singularValues();
    if (s.minCoeff() > 0.2 && s.maxCoeff() / s.minCoeff() < 10.0) return affine_map(B, c);
  }
}

/// Triangular shear with a random polynomial of degree <= 3 in the preceding coordinates.
inline CoordinateMap random_triangular(int n, std::mt19937_64& rng) {
  CoordinateMap m;
  auto qs = detail::q_vars(n);
  for (int i = 0; i < n; ++i) {
    Expr p;
    if (i > 0) {
      std::vector<Expr> terms;
      const int monomials = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < monomials; ++k) {
        const int degree = 1 + static_cast<int>(rng() % 3);
        std::vector<Expr> f{Expr(uniform(rng, -1.0, 1.0))};
        for (int d = 0; d < degree; ++d) f.push_back(qs[rng() % i]);
        terms.push_back(mul(std::move(f)));
      }
      p = Expr(uniform(rng, -0.3, 0.3)) * add(std::move(terms));
    }
    m.forward.push_back(qs[i] + p);
    // back-substitution: earlier coordinates of q are already known in terms of q~
    Bindings b;
    for (int j = 0; j < i; ++j) b[names::q(j)] = m.inverse[j];
    m.inverse.push_back(qs[i] - substitute(p, b));
  }
  return m;
}

/// q~^i = sinh(k_i q^i) / k_i with inverse asinh(k_i q~^i) / k_i.
inline CoordinateMap sinh_map(const Vec& k) {
  CoordinateMap m;
  for (int i = 0; i < k.size(); ++i) {
    Expr x = qv(i);
    Expr kk(k[i]);
    m.forward.push_back((exp(kk * x) - exp(neg(kk * x))) / Expr(2.0 * k[i]));
    Expr y = kk * x;
    m.inverse.push_back(log(y + sqrt(pow(y, 2) + Expr(1.0))) / kk);
  }
  return m;
}

inline Diffeo random_diffeo(int n, std::mt19937_64& rng, double box_half_width = 1.0) {
  CoordinateMap m = random_affine(n, rng);
  if (n > 1) m = then(m, random_triangular(n, rng));
  Vec k(n);
  for (int i = 0; i < n; ++i) k[i] = uniform(rng, 0.3, 1.0);
  m = then(m, sinh_map(k));
  m = then(m, random_affine(n, rng));
  return Diffeo(n, m.forward, m.inverse, Box::cube(n, -box_half_width, box_half_width), "random");
}

/// Cartesian (x, y) = (q1, q2) to polar (r, theta), theta = 2 atan(y / (x + r)).
/// Valid off the closed negative x axis; the default box keeps x > 0.
inline Diffeo polar_diffeo(Box domain = {Vec{{0.2, -2.0}}, Vec{{2.0, 2.0}}}) {
  Expr x = qv(0), y = qv(1);
  Expr r = sqrt(pow(x, 2) + pow(y, 2));
  std::vector<Expr> forward{r, Expr(2.0) * atan(y / (x + r))};
  Expr rr = qv(0), th = qv(1);
  std::vector<Expr> inverse{rr * cos(th), rr * sin(th)};
  return Diffeo(2, forward, inverse, std::move(domain), "polar");
}

inline Diffeo identity_diffeo(int n) {
  auto qs = detail::q_vars(n);
  return Diffeo(n, qs, qs, Box::cube(n, -2.0, 2.0), "identity");
}

}  // namespace equivar
