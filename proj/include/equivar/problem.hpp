#pragma once

// Line-oriented problem files:
//
//   # comment
//   [dimension]
//   2
//   [lagrangian]
//   0.5*(v1^2 + v2^2)
//   [diffeo]            (repeatable)
//   name = polar
//   forward = sqrt(q1^2 + q2^2); 2*atan(q2/(q1 + sqrt(q1^2 + q2^2)))
//   inverse = q1*cos(q2); q1*sin(q2)
//   domain = 0.2 2; -2 2
//   [symmetry]          (repeatable)
//   name = rotation
//   tau = 0
//   eta = -q2; q1
//   phi = 0             (optional)
//   expect = invariant  (optional: invariant, quasi, undetermined, not_invariant)
//   [integrate]
//   q0 = 1 0
//   v0 = 0 1
//   t = 0 10
//   h = 0.001
//   [seed]
//   42
//
// Expression lists are separated by ';', number lists by spaces or commas.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "equivar/jets.hpp"
#include "equivar/noether.hpp"

namespace equivar {

/// Problem-file error carrying the 1-based line it refers to (0 when global).
class ProblemError : public Error {
 public:
  ProblemError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct DiffeoSpec {
  std::string name;
  std::vector<Expr> forward;
  std::vector<Expr> inverse;
  Box domain;
  int line = 0;

  Diffeo build(int n) const { return Diffeo(n, forward, inverse, domain, name); }
};

struct SymmetrySpec {
  std::string name;
  VariationField field;
  std::optional<Expr> phi;
  std::optional<InvarianceKind> expect;
  int line = 0;
};

struct IntegrationSpec {
  Vec q0;
  Vec v0;
  double t0 = 0.0;
  double t1 = 0.0;
  double h = 0.0;
};

struct ProblemFile {
  int dimension = 0;
  std::optional<Lagrangian> lagrangian;
  std::string lagrangian_text;
  std::vector<DiffeoSpec> diffeos;
  std::vector<SymmetrySpec> symmetries;
  std::optional<IntegrationSpec> integration;
  std::optional<std::uint64_t> seed;

  const Lagrangian& L() const { return *lagrangian; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline Expr parse_at(std::string_view text, int line) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ProblemError(e.what(), line);
  }
}

inline std::vector<double> parse_numbers(std::string_view text, int line) {
  std::string s(text);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      double x = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(x);
    } catch (const std::exception&) {
      throw ProblemError("expected a number, found '" + tok + "'", line);
    }
  }
  return out;
}

inline Vec parse_vec(std::string_view text, int n, int line, const char* what) {
  auto xs = parse_numbers(text, line);
  if (static_cast<int>(xs.size()) != n)
    throw ProblemError(std::string(what) + " needs " + std::to_string(n) + " numbers", line);
  return Eigen::Map<Vec>(xs.data(), n);
}

inline std::optional<InvarianceKind> parse_kind(const std::string& s, int line) {
  if (s == "invariant") return InvarianceKind::Invariant;
  if (s == "quasi") return InvarianceKind::QuasiInvariant;
  if (s == "undetermined") return InvarianceKind::QuasiInvariantUndetermined;
  if (s == "not_invariant") return InvarianceKind::NotInvariant;
  throw ProblemError("unknown expectation '" + s + "'", line);
}

struct Line {
  int number;
  std::string text;
};

struct Section {
  std::string name;
  int line;
  std::vector<Line> body;
};

/// key = value lines of a section; each key at most once.
inline std::map<std::string, Line> keyed(const Section& s, std::initializer_list<const char*> allowed) {
  std::map<std::string, Line> out;
  for (const auto& l : s.body) {
    auto eq = l.text.find('=');
    if (eq == std::string::npos) throw ProblemError("expected 'key = value' in [" + s.name + "]", l.number);
    std::string key = trim(std::string_view(l.text).substr(0, eq));
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ProblemError("unknown key '" + key + "' in [" + s.name + "]", l.number);
    if (out.count(key)) throw ProblemError("duplicate key '" + key + "'", l.number);
    out.emplace(key, Line{l.number, trim(std::string_view(l.text).substr(eq + 1))});
  }
  return out;
}

inline const Line& required(const std::map<std::string, Line>& kv, const Section& s, const char* key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ProblemError("[" + s.name + "] is missing '" + key + "'", s.line);
  return it->second;
}

inline const Line& single_line(const Section& s) {
  if (s.body.size() != 1) throw ProblemError("[" + s.name + "] takes exactly one line", s.line);
  return s.body.front();
}

}  // namespace detail

inline ProblemFile parse_problem(std::istream& in) {
  using namespace detail;
  std::vector<Section> sections;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string text = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ProblemError("unterminated section header", number);
      sections.push_back({trim(std::string_view(text).substr(1, text.size() - 2)), number, {}});
      continue;
    }
    if (sections.empty()) throw ProblemError("text before the first section", number);
    sections.back().body.push_back({number, text});
  }

  ProblemFile p;
  std::map<std::string, int> seen;
  for (const auto& s : sections) {
    const bool repeatable = s.name == "diffeo" || s.name == "symmetry";
    if (!repeatable && seen.count(s.name))
      throw ProblemError("section [" + s.name + "] appears twice (first at line " + std::to_string(seen[s.name]) + ")",
                         s.line);
    seen.emplace(s.name, s.line);
  }
  auto find = [&](const char* name) -> const Section* {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  };

  for (const auto& s : sections) {
    static const char* known[] = {"dimension", "lagrangian", "diffeo", "symmetry", "integrate", "seed"};
    if (std::find(std::begin(known), std::end(known), s.name) == std::end(known))
      throw ProblemError("unknown section [" + s.name + "]", s.line);
  }

  const Section* dim = find("dimension");
  if (!dim) throw ProblemError("missing [dimension]", 0);
  {
    const Line& l = single_line(*dim);
    auto xs = parse_numbers(l.text, l.number);
    if (xs.size() != 1 || xs[0] < 1 || xs[0] != static_cast<int>(xs[0]))
      throw ProblemError("dimension must be a positive integer", l.number);
    p.dimension = static_cast<int>(xs[0]);
  }
  const int n = p.dimension;

  const Section* lag = find("lagrangian");
  if (!lag) throw ProblemError("missing [lagrangian]", 0);
  {
    // the body may be continued over several lines
    std::string text;
    for (const auto& l : lag->body) text += l.text + " ";
    if (lag->body.empty()) throw ProblemError("[lagrangian] is empty", lag->line);
    const int first = lag->body.front().number;
    try {
      p.lagrangian = Lagrangian(n, parse(text));
    } catch (const ParseError& e) {
      throw ProblemError(e.what(), first);
    } catch (const PreconditionError& e) {
      throw ProblemError(e.what(), first);
    }
    p.lagrangian_text = trim(text);
  }

  for (const auto& s : sections) {
    if (s.name == "diffeo") {
      auto kv = keyed(s, {"name", "forward", "inverse", "domain"});
      DiffeoSpec d;
      d.line = s.line;
      d.name = kv.count("name") ? kv.at("name").text : "diffeo@" + std::to_string(s.line);
      for (const char* key : {"forward", "inverse"}) {
        const Line& l = required(kv, s, key);
        auto parts = split(l.text, ';');
        if (static_cast<int>(parts.size()) != n)
          throw ProblemError(std::string(key) + " needs " + std::to_string(n) + " expressions", l.number);
        auto& target = std::string_view(key) == "forward" ? d.forward : d.inverse;
        for (const auto& part : parts) target.push_back(parse_at(part, l.number));
      }
      if (kv.count("domain")) {
        const Line& l = kv.at("domain");
        auto parts = split(l.text, ';');
        if (static_cast<int>(parts.size()) != n)
          throw ProblemError("domain needs " + std::to_string(n) + " 'lo hi' pairs", l.number);
        d.domain = Box::cube(n, 0, 0);
        for (int i = 0; i < n; ++i) {
          auto xs = parse_numbers(parts[i], l.number);
          if (xs.size() != 2 || !(xs[0] < xs[1])) throw ProblemError("domain pair must be 'lo hi' with lo < hi", l.number);
          d.domain.lo[i] = xs[0];
          d.domain.hi[i] = xs[1];
        }
      } else {
        d.domain = Box::cube(n, -1.0, 1.0);
      }
      p.diffeos.push_back(std::move(d));
    } else if (s.name == "symmetry") {
      auto kv = keyed(s, {"name", "tau", "eta", "phi", "expect"});
      const Line& tl = kv.count("tau") ? kv.at("tau") : Line{s.line, "0"};
      const Line& el = required(kv, s, "eta");
      auto parts = split(el.text, ';');
      if (static_cast<int>(parts.size()) != n)
        throw ProblemError("eta needs " + std::to_string(n) + " expressions", el.number);
      std::vector<Expr> eta;
      for (const auto& part : parts) eta.push_back(parse_at(part, el.number));
      Expr tau = parse_at(tl.text, tl.number);
      std::optional<VariationField> field;
      try {
        field.emplace(n, tau, std::move(eta));
      } catch (const PreconditionError& e) {
        throw ProblemError(e.what(), el.number);
      }
      SymmetrySpec sym{kv.count("name") ? kv.at("name").text : "symmetry@" + std::to_string(s.line), *field, {}, {},
                       s.line};
      if (kv.count("phi")) sym.phi = parse_at(kv.at("phi").text, kv.at("phi").number);
      if (kv.count("expect")) sym.expect = parse_kind(kv.at("expect").text, kv.at("expect").number);
      p.symmetries.push_back(std::move(sym));
    } else if (s.name == "integrate") {
      auto kv = keyed(s, {"q0", "v0", "t", "h"});
      IntegrationSpec in;
      in.q0 = parse_vec(required(kv, s, "q0").text, n, kv.at("q0").number, "q0");
      in.v0 = parse_vec(required(kv, s, "v0").text, n, kv.at("v0").number, "v0");
      Vec span = parse_vec(required(kv, s, "t").text, 2, kv.at("t").number, "t");
      in.t0 = span[0];
      in.t1 = span[1];
      if (in.t1 < in.t0) throw ProblemError("t span must satisfy t0 <= t1", kv.at("t").number);
      in.h = parse_vec(required(kv, s, "h").text, 1, kv.at("h").number, "h")[0];
      if (!(in.h > 0)) throw ProblemError("h must be positive", kv.at("h").number);
      p.integration = in;
    } else if (s.name == "seed") {
      const Line& l = single_line(s);
      auto xs = parse_numbers(l.text, l.number);
      if (xs.size() != 1 || xs[0] < 0 || xs[0] != static_cast<double>(static_cast<std::uint64_t>(xs[0])))
        throw ProblemError("seed must be a nonnegative integer", l.number);
      p.seed = static_cast<std::uint64_t>(xs[0]);
    }
  }
  return p;
}

inline ProblemFile parse_problem(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_problem(is);
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open '" + path + "'", 0);
  return parse_problem(in);
}

}  // namespace equivar
