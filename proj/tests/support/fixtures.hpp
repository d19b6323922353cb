#pragma once

// Lagrangians and sampling helpers shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "equivar/diffeo_family.hpp"
#include "equivar/jets.hpp"

namespace equivar::testing {

struct NamedLagrangian {
  std::string name;
  Lagrangian L;
};

inline std::vector<NamedLagrangian> fixture_lagrangians() {
  return {
      {"harmonic", Lagrangian::parse(1, "0.5*v1^2 - 0.5*q1^2")},
      {"pendulum", Lagrangian::parse(1, "0.5*v1^2 + cos(q1)")},
      {"free2d", Lagrangian::parse(2, "0.5*(v1^2 + v2^2)")},
      {"magnetic2d", Lagrangian::parse(2, "0.5*(v1^2 + v2^2) + 0.3*(q1*v2 - q2*v1) - 0.5*(q1^2 + 2*q2^2) + "
                                          "0.1*q1^2*q2")},
      {"mixed2d", Lagrangian::parse(2, "0.5*(1 + 0.2*q1^2)*v1^2 + 0.5*v2^2 + 0.3*sin(q2)*v1*v2 + 0.05*v1^4 - "
                                       "0.1*q1*q2")},
  };
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = uniform(rng, lo, hi);
  return x;
}

inline EPoint random_epoint(std::mt19937_64& rng, const Box& box) {
  const int n = static_cast<int>(box.lo.size());
  return {box.sample(rng), random_vec(rng, n), random_vec(rng, n)};
}

}  // namespace equivar::testing
