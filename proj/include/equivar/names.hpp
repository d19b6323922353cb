#pragma once

// Variable naming conventions shared by every module. Indices are 0-based in
// code and 1-based in names: q(0) is "q1".

#include <string>
#include <vector>

#include "equivar/expr.hpp"

namespace equivar::names {

inline const std::string t = "t";
inline const std::string w = "w";      // dt/ds after promoting time to a coordinate
inline const std::string lam = "lam";  // gauge multiplier
inline const std::string xi = "xi";    // auxiliary coordinate of quasi-invariance absorption
inline const std::string nu = "nu";    // velocity of xi

// Velocities and accelerations of the auxiliary coordinates. Only the extended
// Euler components need them.
inline const std::string aw = "aw";
inline const std::string vlam = "vlam";
inline const std::string alam = "alam";
inline const std::string anu = "anu";

inline std::string q(int i) { return "q" + std::to_string(i + 1); }
inline std::string v(int i) { return "v" + std::to_string(i + 1); }
inline std::string a(int i) { return "a" + std::to_string(i + 1); }
inline std::string vhat(int i) { return "vhat" + std::to_string(i + 1); }
inline std::string ahat(int i) { return "ahat" + std::to_string(i + 1); }

inline std::vector<std::string> series(std::string (*f)(int), int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(f(i));
  return out;
}

/// Input order used for everything evaluated on R x TM: t, q1..qn, v1..vn.
inline std::vector<std::string> tqv(int n) {
  std::vector<std::string> out{t};
  for (int i = 0; i < n; ++i) out.push_back(q(i));
  for (int i = 0; i < n; ++i) out.push_back(v(i));
  return out;
}

/// tqv(n) followed by a1..an.
inline std::vector<std::string> tqva(int n) {
  auto out = tqv(n);
  for (int i = 0; i < n; ++i) out.push_back(a(i));
  return out;
}

}  // namespace equivar::names

namespace equivar {

inline Expr qv(int i) { return var(names::q(i)); }
inline Expr vv(int i) { return var(names::v(i)); }
inline Expr av(int i) { return var(names::a(i)); }

}  // namespace equivar
