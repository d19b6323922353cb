#pragma once

// Check records and their JSON / text renderings. Needs nlohmann/json on the
// include path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "equivar/bundles.hpp"
#include "equivar/expr.hpp"

namespace equivar::cli {

using json = nlohmann::ordered_json;

#ifdef EQUIVAR_VERSION
inline constexpr const char* kVersion = EQUIVAR_VERSION;
#else
inline constexpr const char* kVersion = "unknown";
#endif

struct Check {
  std::string name;
  bool pass = false;
  double residual = 0.0;
  double tol = 0.0;
  std::optional<json> witness;
  bool expected_fail = false;
  std::string detail;
};

inline json witness_json(const Assignment& a) {
  json w = json::object();
  for (const auto& [k, v] : a) w[k] = v;
  return w;
}

inline json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json witness_json(const std::string& diffeo, const EPoint& X) {
  return json{{"diffeo", diffeo}, {"q", vec_json(X.q)}, {"v", vec_json(X.v)}, {"a", vec_json(X.a)}};
}

class Report {
 public:
  explicit Report(std::uint64_t seed) : seed_(seed) {}

  Check& add(std::string name, double residual, double tol) {
    Check c;
    c.name = std::move(name);
    c.residual = residual;
    c.tol = tol;
    c.pass = std::isfinite(residual) && residual <= tol;
    checks_.push_back(std::move(c));
    return checks_.back();
  }

  /// A check whose outcome is a yes/no fact rather than a residual against a tolerance.
  Check& add_flag(std::string name, bool pass, double residual, double tol) {
    Check& c = add(std::move(name), residual, tol);
    c.pass = pass;
    return c;
  }

  void note(std::string line) { notes_.push_back(std::move(line)); }

  std::uint64_t seed() const noexcept { return seed_; }
  const std::deque<Check>& checks() const noexcept { return checks_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

  const Check* find(std::string_view name) const {
    for (const auto& c : checks_)
      if (c.name == name) return &c;
    return nullptr;
  }

  /// True when every check not marked expected_fail passes.
  bool ok() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass || c.expected_fail; });
  }

  std::vector<Check> sorted() const {
    std::vector<Check> out(checks_.begin(), checks_.end());
    std::stable_sort(out.begin(), out.end(), [](const Check& a, const Check& b) { return a.name < b.name; });
    return out;
  }

  json to_json() const {
    json checks = json::array();
    for (const auto& c : sorted()) {
      json r;
      r["name"] = c.name;
      r["status"] = c.pass ? "pass" : "fail";
      r["residual"] = c.residual;
      r["tol"] = c.tol;
      if (c.witness) r["witness"] = *c.witness;
      if (c.expected_fail) r["expected_fail"] = true;
      if (!c.detail.empty()) r["detail"] = c.detail;
      checks.push_back(std::move(r));
    }
    return json{{"version", kVersion}, {"seed", seed_}, {"checks", std::move(checks)}};
  }

  void print(std::ostream& os) const {
    for (const auto& n : notes_) os << n << '\n';
    char buf[64];
    for (const auto& c : sorted()) {
      std::snprintf(buf, sizeof buf, "residual=%.3e tol=%.1e", c.residual, c.tol);
      os << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << buf;
      if (c.expected_fail) os << "  (expected fail)";
      if (!c.detail.empty()) os << "  " << c.detail;
      os << '\n';
    }
    os << (ok() ? "OK" : "FAILED") << '\n';
  }

 private:
  std::uint64_t seed_;
  std::deque<Check> checks_;  // stable references for callers that annotate a check after add()
  std::vector<std::string> notes_;
};

}  // namespace equivar::cli
