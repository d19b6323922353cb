#pragma once

// Second jets of Lagrangians and the action of coordinate changes on them.
//
// Index layout, used everywhere: Lqv(i, j) = d2L / dq^i dv^j (row = q index).
// For a Diffeo q -> q~, "forward" gives q~(q) and "inverse" gives q(q~); both
// are written in the variables q1..qn.

#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "equivar/bundles.hpp"
#include "equivar/error.hpp"
#include "equivar/expr.hpp"
#include "equivar/linalg.hpp"
#include "equivar/names.hpp"
#include "equivar/parse.hpp"
#include "equivar/tape.hpp"
#include "equivar/zero_test.hpp"

namespace equivar {

struct Jet2 {
  double L = 0.0;
  Vec Lq;
  Vec Lv;
  Mat Lqq;
  Mat Lqv;  // (q index, v index)
  Mat Lvv;

  int dim() const noexcept { return static_cast<int>(Lq.size()); }
};

/// Largest absolute difference over all six blocks.
inline double jet_distance(const Jet2& x, const Jet2& y) {
  double d = std::abs(x.L - y.L);
  d = std::max(d, max_abs(x.Lq - y.Lq));
  d = std::max(d, max_abs(x.Lv - y.Lv));
  d = std::max(d, max_abs(x.Lqq - y.Lqq));
  d = std::max(d, max_abs(x.Lqv - y.Lqv));
  d = std::max(d, max_abs(x.Lvv - y.Lvv));
  return d;
}

/// Jet plus the time partials needed to integrate time-dependent Lagrangians.
struct JetWithTime {
  Jet2 jet;
  double Lt = 0.0;
  Vec Ltv;
};

/// A Lagrangian L(t, q1..qn, v1..vn). All first and second partials are
/// derived symbolically once, at construction, and compiled to one tape.
class Lagrangian {
 public:
  Lagrangian(int n, Expr body) : impl_(std::make_shared<Impl>(n, std::move(body))) {}

  static Lagrangian parse(int n, std::string_view text) { return Lagrangian(n, equivar::parse(text)); }

  int dim() const noexcept { return impl_->n; }
  const Expr& body() const noexcept { return impl_->body; }
  bool time_dependent() const noexcept { return impl_->time_dependent; }

  const Expr& dq(int i) const { return impl_->Lq[i]; }
  const Expr& dv(int i) const { return impl_->Lv[i]; }
  const Expr& dqq(int i, int j) const { return impl_->Lqq[i * dim() + j]; }
  const Expr& dqv(int i, int j) const { return impl_->Lqv[i * dim() + j]; }
  const Expr& dvv(int i, int j) const { return impl_->Lvv[i * dim() + j]; }
  const Expr& dt() const { return impl_->Lt; }
  const Expr& dtv(int i) const { return impl_->Ltv[i]; }

  JetWithTime evaluate_jet(double t, const TangentPoint& x) const {
    const int n = dim();
    if (x.dim() != n) throw PreconditionError("Lagrangian: point dimension mismatch");
    std::vector<double> in(1 + 2 * n);
    in[0] = t;
    for (int i = 0; i < n; ++i) {
      in[1 + i] = x.q[i];
      in[1 + n + i] = x.v[i];
    }
    std::vector<double> out(impl_->tape.output_count()), scratch;
    impl_->tape.run(in, out, scratch);
    JetWithTime r;
    Jet2& j = r.jet;
    std::size_t k = 0;
    j.L = out[k++];
    j.Lq.resize(n);
    j.Lv.resize(n);
    for (int i = 0; i < n; ++i) j.Lq[i] = out[k++];
    for (int i = 0; i < n; ++i) j.Lv[i] = out[k++];
    for (Mat* m : {&j.Lqq, &j.Lqv, &j.Lvv}) {
      m->resize(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) (*m)(a, b) = out[k++];
    }
    r.Lt = out[k++];
    r.Ltv.resize(n);
    for (int i = 0; i < n; ++i) r.Ltv[i] = out[k++];
    return r;
  }

  double value(double t, const TangentPoint& x) const { return evaluate_jet(t, x).jet.L; }

 private:
  struct Impl {
    int n;
    Expr body;
    bool time_dependent;
    std::vector<Expr> Lq, Lv, Lqq, Lqv, Lvv, Ltv;
    Expr Lt;
    Tape tape;

    Impl(int n_, Expr body_) : n(n_), body(std::move(body_)) {
      if (n < 1) throw PreconditionError("Lagrangian: dimension must be positive");
      auto allowed = names::tqv(n);
      for (const auto& name : variables(body))
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
          throw PreconditionError("Lagrangian: undeclared variable '" + name + "'");
      time_dependent = contains_variable(body, names::t);
      for (int i = 0; i < n; ++i) {
        Lq.push_back(differentiate(body, names::q(i)));
        Lv.push_back(differentiate(body, names::v(i)));
      }
      Lqq.resize(n * n);
      Lvv.resize(n * n);
      Lqv.resize(n * n);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          Lqq[i * n + j] = Lqq[j * n + i] = differentiate(Lq[i], names::q(j));
          Lvv[i * n + j] = Lvv[j * n + i] = differentiate(Lv[i], names::v(j));
        }
        for (int j = 0; j < n; ++j) Lqv[i * n + j] = differentiate(Lq[i], names::v(j));
      }
      Lt = differentiate(body, names::t);
      for (int i = 0; i < n; ++i) Ltv.push_back(differentiate(Lv[i], names::t));

      std::vector<Expr> outs{body};
      for (auto* block : {&Lq, &Lv, &Lqq, &Lqv, &Lvv}) outs.insert(outs.end(), block->begin(), block->end());
      outs.push_back(Lt);
      outs.insert(outs.end(), Ltv.begin(), Ltv.end());
      tape = Tape(outs, names::tqv(n));
    }
  };

  std::shared_ptr<const Impl> impl_;
};

/// Second jet of L at (t, x): exact symbolic partials evaluated at the point.
inline Jet2 jet2_at(const Lagrangian& L, double t, const TangentPoint& x) { return L.evaluate_jet(t, x).jet; }

// ---------------------------------------------------------------------------
// Coordinate changes

/// Axis-aligned sampling box in the source chart.
struct Box {
  Vec lo;
  Vec hi;

  static Box cube(int n, double lo, double hi) { return {Vec::Constant(n, lo), Vec::Constant(n, hi)}; }
  bool contains(const Vec& q) const {
    return (q.array() >= lo.array()).all() && (q.array() <= hi.array()).all();
  }
  Vec sample(std::mt19937_64& rng) const {
    Vec q(lo.size());
    for (int i = 0; i < lo.size(); ++i) q[i] = uniform(rng, lo[i], hi[i]);
    return q;
  }
};

/// Derivatives of a coordinate change at a point q~ (and its preimage q).
struct DiffeoDerivatives {
  Vec q;              // inverse(q~)
  Vec qt;             // q~
  Mat dq_dqt;         // (a, i) = dq^a / dq~^i
  Tensor3 d2q_dqt2;   // [a](i, j)
  Tensor4 d3q_dqt3;   // [a][i](j, k)
  Mat dqt_dq;         // (i, a) = dq~^i / dq^a, evaluated from the forward map
  Tensor3 d2qt_dq2;   // [i](k, l), evaluated from the forward map
};

class Diffeo {
 public:
  Diffeo(int n, std::vector<Expr> forward, std::vector<Expr> inverse, Box domain, std::string name = "")
      : impl_(std::make_shared<Impl>(n, std::move(forward), std::move(inverse), std::move(domain),
                                     std::move(name))) {
    validate();
  }

  int dim() const noexcept { return impl_->n; }
  const std::string& name() const noexcept { return impl_->name; }
  const Box& domain() const noexcept { return impl_->domain; }
  const std::vector<Expr>& forward_exprs() const noexcept { return impl_->forward; }
  const std::vector<Expr>& inverse_exprs() const noexcept { return impl_->inverse; }
  /// Symbolic dq^a/dq~^i in the variables q1..qn (standing for q~).
  const Expr& inverse_jacobian_expr(int a, int i) const { return impl_->inv_jac[a * dim() + i]; }

  Vec forward(const Vec& q) const { return eval_block(impl_->fwd_tape, q, 0, dim()); }
  Vec inverse(const Vec& qt) const { return eval_block(impl_->inv_tape, qt, 0, dim()); }

  /// dq~/dq and d2q~/dq2 at q, from the forward map.
  std::pair<Mat, Tensor3> forward_derivatives(const Vec& q) const {
    const int n = dim();
    auto out = impl_->fwd_tape(std::vector<double>(q.data(), q.data() + n));
    std::size_t k = n;
    Mat J(n, n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) J(i, a) = out[k++];
    Tensor3 H = zeros3(n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) H[i](a, b) = out[k++];
    return {J, H};
  }

  DiffeoDerivatives derivatives(const Vec& qt) const {
    const int n = dim();
    DiffeoDerivatives d;
    d.qt = qt;
    auto out = impl_->inv_tape(std::vector<double>(qt.data(), qt.data() + n));
    std::size_t k = 0;
    d.q.resize(n);
    for (int a = 0; a < n; ++a) d.q[a] = out[k++];
    d.dq_dqt.resize(n, n);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i) d.dq_dqt(a, i) = out[k++];
    d.d2q_dqt2 = zeros3(n);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d.d2q_dqt2[a](i, j) = out[k++];
    d.d3q_dqt3 = zeros4(n);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) d.d3q_dqt3[a][i](j, l) = out[k++];
    std::tie(d.dqt_dq, d.d2qt_dq2) = forward_derivatives(d.q);
    require_invertible(d.dq_dqt);
    return d;
  }

 private:
  struct Impl {
    int n;
    std::vector<Expr> forward, inverse, inv_jac;
    Box domain;
    std::string name;
    Tape fwd_tape;  // [forward, J, H]
    Tape inv_tape;  // [inverse, dq/dq~, d2, d3]

    Impl(int n_, std::vector<Expr> f, std::vector<Expr> g, Box box, std::string nm)
        : n(n_), forward(std::move(f)), inverse(std::move(g)), domain(std::move(box)), name(std::move(nm)) {
      if (static_cast<int>(forward.size()) != n || static_cast<int>(inverse.size()) != n)
        throw PreconditionError("Diffeo: expected " + std::to_string(n) + " forward and inverse components");
      if (domain.lo.size() != n || domain.hi.size() != n) throw PreconditionError("Diffeo: domain box dimension");
      auto qs = names::series(names::q, n);
      for (const auto* list : {&forward, &inverse})
        for (const auto& e : *list)
          for (const auto& v : variables(e))
            if (std::find(qs.begin(), qs.end(), v) == qs.end())
              throw PreconditionError("Diffeo: component uses variable '" + v + "' outside q1..q" + std::to_string(n));

      std::vector<Expr> fo(forward);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) fo.push_back(differentiate(forward[i], qs[a]));
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) fo.push_back(differentiate(fo[n + i * n + a], qs[b]));
      fwd_tape = Tape(fo, qs);

      std::vector<Expr> io(inverse);
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i) inv_jac.push_back(differentiate(inverse[a], qs[i]));
      io.insert(io.end(), inv_jac.begin(), inv_jac.end());
      std::vector<Expr> second;
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) second.push_back(differentiate(inv_jac[a * n + i], qs[j]));
      io.insert(io.end(), second.begin(), second.end());
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) io.push_back(differentiate(second[(a * n + i) * n + j], qs[l]));
      inv_tape = Tape(io, qs);
    }
  };

  static Vec eval_block(const Tape& tape, const Vec& x, int first, int count) {
    auto out = tape(std::vector<double>(x.data(), x.data() + x.size()));
    return Eigen::Map<const Vec>(out.data() + first, count);
  }

  static void require_invertible(const Mat& J) {
    Eigen::JacobiSVD<Mat> svd(J);
    const auto& s = svd.singularValues();
    if (s.minCoeff() <= 0.0 || s.maxCoeff() / s.minCoeff() > 1e12)
      throw SingularMatrix("Diffeo: singular Jacobian");
  }

  void validate() const {
    std::mt19937_64 rng(0);
    for (int k = 0; k < 100; ++k) {
      Vec q = impl_->domain.sample(rng);
      Vec qt, back, again;
      Mat J;
      try {
        qt = forward(q);
        back = inverse(qt);
        again = forward(back);
        J = forward_derivatives(q).first;
      } catch (const DomainError& e) {
        throw PreconditionError(std::string("Diffeo: evaluation failed inside the domain box: ") + e.what());
      }
      if ((back - q).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + q.cwiseAbs().maxCoeff()) ||
          (again - qt).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + qt.cwiseAbs().maxCoeff()))
        throw PreconditionError("Diffeo: forward and inverse are not mutually inverse on the domain box");
      require_invertible(J);
    }
  }

  std::shared_ptr<const Impl> impl_;
};

inline DiffeoDerivatives diffeo_derivatives(const Diffeo& phi, const Vec& qt) { return phi.derivatives(qt); }

/// d2q~^i/dq^k dq^l rebuilt from the inverse map's derivatives:
///   -(dq~^i/dq^a) (d2q^a/dq~^b dq~^c) (dq~^b/dq^k) (dq~^c/dq^l).
inline Tensor3 second_derivative_by_inversion(const DiffeoDerivatives& d) {
  const int n = static_cast<int>(d.q.size());
  const Mat& J = d.dqt_dq;
  Tensor3 out = zeros3(n);
  for (int a = 0; a < n; ++a) {
    Mat inner = J.transpose() * d.d2q_dqt2[a] * J;  // (k, l)
    for (int i = 0; i < n; ++i) out[i] -= J(i, a) * inner;
  }
  return out;
}

inline TangentPoint transform_tangent(const Diffeo& phi, const TangentPoint& x) {
  auto [J, H] = phi.forward_derivatives(x.q);
  return {phi.forward(x.q), J * x.v};
}

/// (q, v, a) -> (q~, J v, J a + H(v, v)).
inline EPoint transform_epoint(const Diffeo& phi, const EPoint& X) {
  auto [J, H] = phi.forward_derivatives(X.q);
  const int n = X.dim();
  Vec at = J * X.a;
  for (int i = 0; i < n; ++i) at[i] += X.v.dot(H[i] * X.v);
  return {phi.forward(X.q), J * X.v, at};
}

/// Covector law: omega~_i = omega_a dq^a/dq~^i, result based at q~ = forward(q).
inline OneForm transform_oneform(const Diffeo& phi, const OneForm& w) {
  Vec qt = phi.forward(w.q);
  Mat M = phi.derivatives(qt).dq_dqt;
  return {qt, M.transpose() * w.omega};
}

/// Transforms a jet computed at (q(q~), (dq/dq~) v~) into the jet of
/// L~(q~, v~) = L(q(q~), (dq/dq~) v~) at (q~, v~).
inline Jet2 pushforward_jet2(const DiffeoDerivatives& d, const Jet2& j, const Vec& vt) {
  const int n = j.dim();
  const Mat& M = d.dq_dqt;
  const Tensor3& A = d.d2q_dqt2;
  const Tensor4& T = d.d3q_dqt3;

  // Av(a, i) = A^a_{ic} v~^c
  Mat Av(n, n);
  for (int a = 0; a < n; ++a) Av.row(a) = (A[a] * vt).transpose();

  Jet2 out;
  out.L = j.L;
  out.Lq = M.transpose() * j.Lq + Av.transpose() * j.Lv;
  out.Lv = M.transpose() * j.Lv;
  out.Lvv = M.transpose() * j.Lvv * M;

  out.Lqv = M.transpose() * j.Lqv * M + Av.transpose() * j.Lvv * M;
  for (int a = 0; a < n; ++a) out.Lqv += j.Lv[a] * A[a];

  out.Lqq = M.transpose() * j.Lqq * M;
  for (int a = 0; a < n; ++a) {
    out.Lqq += j.Lq[a] * A[a];
    Mat third(n, n);  // T^a_{ijb} v~^b
    for (int i = 0; i < n; ++i) third.row(i) = (T[a][i] * vt).transpose();
    out.Lqq += j.Lv[a] * third;
  }
  Mat cross = M.transpose() * j.Lqv * Av;  // (i, j) = Lqv_ab M^a_i A^b_jc v~^c
  out.Lqq += cross + cross.transpose();
  out.Lqq += Av.transpose() * j.Lvv * Av;
  return out;
}

inline Jet2 pushforward_jet2(const Diffeo& phi, const Jet2& j, const Vec& qt, const Vec& vt) {
  return pushforward_jet2(phi.derivatives(qt), j, vt);
}

/// L~(q~, v~) = L(q(q~), (dq/dq~) v~), built by symbolic substitution.
inline Lagrangian pullback_lagrangian(const Lagrangian& L, const Diffeo& phi) {
  const int n = L.dim();
  if (phi.dim() != n) throw PreconditionError("pullback_lagrangian: dimension mismatch");
  Bindings b;
  for (int a = 0; a < n; ++a) {
    b[names::q(a)] = phi.inverse_exprs()[a];
    std::vector<Expr> terms;
    for (int i = 0; i < n; ++i) terms.push_back(phi.inverse_jacobian_expr(a, i) * vv(i));
    b[names::v(a)] = add(std::move(terms));
  }
  return Lagrangian(n, substitute(L.body(), b));
}

}  // namespace equivar
