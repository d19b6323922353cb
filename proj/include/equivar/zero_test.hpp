#pragma once

// Probabilistic identity testing.
//
// An expression is declared zero when it evaluates to at most `tol` in
// absolute value at every one of `points` assignments drawn uniformly from a
// box (default [-2, 2] per variable). Points where evaluation raises a
// DomainError are redrawn, up to a retry cap; exhausting the cap is a failure.
// For the analytic identities handled here a false "zero" requires hitting a
// measure-zero set, so a pass is overwhelming evidence, not a proof.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "equivar/expr.hpp"
#include "equivar/tape.hpp"

namespace equivar {

/// Uniform double in [lo, hi) from the top 53 bits; identical on every platform.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

struct SampleBox {
  double lo = -2.0;
  double hi = 2.0;
  std::map<std::string, std::pair<double, double>, std::less<>> ranges;  // per-variable overrides

  std::pair<double, double> range(const std::string& name) const {
    auto it = ranges.find(name);
    return it == ranges.end() ? std::pair{lo, hi} : it->second;
  }
  SampleBox& with(std::string name, double l, double h) {
    ranges[std::move(name)] = {l, h};
    return *this;
  }
};

struct ZeroTestOptions {
  int points = 100;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  SampleBox box;
  int retry_cap = 0;  // 0 means 20 * points
};

struct ZeroTestResult {
  bool zero = false;
  double max_abs = 0.0;
  int evaluated = 0;
  int rejected = 0;
  bool exhausted = false;
  Assignment witness;  // worst sampled point
  double witness_value = 0.0;

  explicit operator bool() const noexcept { return zero; }
};

/// Samples `vars` from the box and applies `f` (returning a residual) at each point.
template <class F>
ZeroTestResult sample_test(const std::vector<std::string>& vars, const ZeroTestOptions& opt, F&& f) {
  if (!(opt.tol > 0.0)) throw PreconditionError("zero test tolerance must be positive");
  std::mt19937_64 rng(opt.seed);
  const int cap = opt.retry_cap > 0 ? opt.retry_cap : 20 * opt.points;
  ZeroTestResult res;
  std::vector<double> x(vars.size());
  std::vector<std::pair<double, double>> ranges;
  for (const auto& v : vars) ranges.push_back(opt.box.range(v));
  while (res.evaluated < opt.points) {
    for (std::size_t i = 0; i < vars.size(); ++i) x[i] = uniform(rng, ranges[i].first, ranges[i].second);
    double r = 0.0;
    try {
      r = std::abs(f(std::span<const double>(x)));
    } catch (const DomainError&) {
      if (++res.rejected > cap) {
        res.exhausted = true;
        res.zero = false;
        return res;
      }
      continue;
    }
    ++res.evaluated;
    if (!(r <= res.max_abs) || res.evaluated == 1) {
      res.max_abs = r;
      res.witness_value = r;
      res.witness.clear();
      for (std::size_t i = 0; i < vars.size(); ++i) res.witness[vars[i]] = x[i];
    }
  }
  res.zero = res.max_abs <= opt.tol;
  return res;
}

/// Tests every expression in `es` at the same sample points; the residual is the max over them.
inline ZeroTestResult zero_test(std::span<const Expr> es, const ZeroTestOptions& opt = {}) {
  std::set<std::string> names;
  for (const auto& e : es) collect_variables(e, names);
  std::vector<std::string> vars(names.begin(), names.end());
  Tape tape(es, vars);
  std::vector<double> out(es.size()), scratch;
  return sample_test(vars, opt, [&](std::span<const double> x) {
    tape.run(x, out, scratch);
    double m = 0.0;
    for (double v : out) m = std::max(m, std::abs(v));
    return m;
  });
}

inline ZeroTestResult zero_test(const Expr& e, const ZeroTestOptions& opt = {}) {
  return zero_test(std::span<const Expr>(&e, 1), opt);
}

inline bool is_zero(const Expr& e, int sample_points = 100, std::uint64_t seed = 0, double tol = 1e-9) {
  ZeroTestOptions opt;
  opt.points = sample_points;
  opt.seed = seed;
  opt.tol = tol;
  return zero_test(e, opt).zero;
}

}  // namespace equivar
