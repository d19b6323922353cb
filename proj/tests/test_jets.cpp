#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "equivar/diffeo_family.hpp"
#include "equivar/jets.hpp"
#include "support/fixtures.hpp"

namespace equivar {
namespace {

using testing::fixture_lagrangians;
using testing::random_vec;

Vec v1(double x) { return Vec::Constant(1, x); }

Diffeo square_map() { return Diffeo(1, {parse("q1^2")}, {parse("sqrt(q1)")}, Box{v1(0.5), v1(3.0)}, "square"); }
Diffeo doubling() { return Diffeo(1, {parse("2*q1")}, {parse("q1/2")}, Box::cube(1, -2, 2), "double"); }

/// Second jet by central differences of L.value (step h for first, sqrt-scaled for second).
Jet2 fd_jet(const Lagrangian& L, const Vec& q, const Vec& v, double h = 1e-4) {
  const int n = L.dim();
  Vec z(2 * n);
  z << q, v;
  auto f = [&](const Vec& x) { return L.value(0.0, {x.head(n), x.tail(n)}); };
  Vec g(2 * n);
  Mat H(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    Vec e = Vec::Zero(2 * n);
    e[i] = h;
    g[i] = (f(z + e) - f(z - e)) / (2 * h);
    for (int j = 0; j < 2 * n; ++j) {
      Vec d = Vec::Zero(2 * n);
      d[j] = h;
      H(i, j) = (f(z + e + d) - f(z + e - d) - f(z - e + d) + f(z - e - d)) / (4 * h * h);
    }
  }
  Jet2 j;
  j.L = f(z);
  j.Lq = g.head(n);
  j.Lv = g.tail(n);
  j.Lqq = H.topLeftCorner(n, n);
  j.Lqv = H.topRightCorner(n, n);
  j.Lvv = H.bottomRightCorner(n, n);
  return j;
}

TEST(Jet2At, Harmonic) {
  Jet2 j = jet2_at(Lagrangian::parse(1, "0.5*(v1^2-q1^2)"), 0.0, {v1(1), v1(0)});
  EXPECT_DOUBLE_EQ(j.L, -0.5);
  EXPECT_DOUBLE_EQ(j.Lq[0], -1);
  EXPECT_DOUBLE_EQ(j.Lv[0], 0);
  EXPECT_DOUBLE_EQ(j.Lqq(0, 0), -1);
  EXPECT_DOUBLE_EQ(j.Lqv(0, 0), 0);
  EXPECT_DOUBLE_EQ(j.Lvv(0, 0), 1);
}

TEST(Jet2At, FreeParticleAnywhere) {
  Lagrangian L = Lagrangian::parse(1, "0.5*v1^2");
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    Jet2 j = jet2_at(L, 0.0, {random_vec(rng, 1, -5, 5), random_vec(rng, 1, -5, 5)});
    EXPECT_EQ(j.Lq[0], 0);
    EXPECT_EQ(j.Lqq(0, 0), 0);
    EXPECT_EQ(j.Lqv(0, 0), 0);
    EXPECT_EQ(j.Lvv(0, 0), 1);
  }
}

TEST(Jet2At, PolarKineticMatchesFiniteDifferences) {
  Lagrangian L = Lagrangian::parse(2, "0.5*(v1^2 + q1^2*v2^2)");
  Vec q{{2.0, 0.0}}, v{{0.0, 1.0}};
  Jet2 j = jet2_at(L, 0.0, {q, v});
  Jet2 fd = fd_jet(L, q, v);
  EXPECT_LT(jet_distance(j, fd), 1e-6);
  EXPECT_DOUBLE_EQ(j.Lq[0], 2);
  EXPECT_DOUBLE_EQ(j.Lq[1], 0);
  EXPECT_EQ(j.Lvv, (Mat{{1, 0}, {0, 4}}));
  EXPECT_EQ(j.Lqv, (Mat{{0, 4}, {0, 0}}));
}

TEST(Jet2At, LayoutAgreesWithFiniteDifferencesOnFixtures) {
  std::mt19937_64 rng(11);
  for (const auto& [name, L] : fixture_lagrangians()) {
    for (int k = 0; k < 5; ++k) {
      Vec q = random_vec(rng, L.dim()), v = random_vec(rng, L.dim());
      Jet2 j = jet2_at(L, 0.0, {q, v});
      EXPECT_LT(jet_distance(j, fd_jet(L, q, v)), 1e-6) << name;
      EXPECT_LT(max_abs(j.Lqq - j.Lqq.transpose()), 1e-12);
      EXPECT_LT(max_abs(j.Lvv - j.Lvv.transpose()), 1e-12);
    }
  }
}

TEST(Lagrangian, RejectsUndeclaredVariables) {
  EXPECT_THROW(Lagrangian::parse(1, "v2^2"), PreconditionError);
  EXPECT_THROW(Lagrangian::parse(1, "v1*a1"), PreconditionError);
  EXPECT_FALSE(Lagrangian::parse(1, "v1^2").time_dependent());
  EXPECT_TRUE(Lagrangian::parse(1, "t*v1^2").time_dependent());
}

TEST(Diffeo, Identity) {
  Diffeo id = identity_diffeo(2);
  auto d = diffeo_derivatives(id, Vec{{0.3, -0.4}});
  EXPECT_EQ(d.dq_dqt, Mat::Identity(2, 2));
  EXPECT_EQ(max_abs(d.d2q_dqt2), 0);
  for (const auto& t : d.d3q_dqt3) EXPECT_EQ(max_abs(t), 0);
}

TEST(Diffeo, Doubling) {
  auto d = diffeo_derivatives(doubling(), v1(1.0));
  EXPECT_DOUBLE_EQ(d.dq_dqt(0, 0), 0.5);
  EXPECT_EQ(max_abs(d.d2q_dqt2), 0);
}

TEST(Diffeo, SquareMap) {
  auto d = diffeo_derivatives(square_map(), v1(4.0));
  EXPECT_DOUBLE_EQ(d.q[0], 2.0);
  EXPECT_NEAR(d.dq_dqt(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(d.d2q_dqt2[0](0, 0), -0.03125, 1e-15);
  // finite differences of the inverse sqrt(q~)
  const double h = 1e-4;
  auto g = [](double x) { return std::sqrt(x); };
  EXPECT_NEAR((g(4 + h) - g(4 - h)) / (2 * h), 0.25, 1e-8);
  EXPECT_NEAR((g(4 + h) - 2 * g(4) + g(4 - h)) / (h * h), -0.03125, 1e-6);
}

TEST(Diffeo, RejectsWrongInverse) {
  EXPECT_THROW(Diffeo(1, {parse("2*q1")}, {parse("q1/3")}, Box::cube(1, -1, 1)), PreconditionError);
  EXPECT_THROW(Diffeo(1, {parse("2*q1")}, {parse("q2/2")}, Box::cube(1, -1, 1)), PreconditionError);
}

TEST(Diffeo, RejectsSingularJacobian) {
  EXPECT_THROW(Diffeo(1, {parse("q1^3")}, {parse("q1")}, Box::cube(1, 0, 0)), SingularMatrix);
}

TEST(Diffeo, JacobiansAreMutuallyInverseAndInversionIdentityHolds) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const int n = 1 + k % 3;
    Diffeo phi = random_diffeo(n, rng);
    for (int p = 0; p < 5; ++p) {
      Vec q = phi.domain().sample(rng);
      auto d = diffeo_derivatives(phi, phi.forward(q));
      EXPECT_LT(max_abs(d.dq_dqt * d.dqt_dq - Mat::Identity(n, n)), 1e-9);
      Tensor3 rebuilt = second_derivative_by_inversion(d);
      double scale = 1.0 + max_abs(d.d2qt_dq2);
      for (int i = 0; i < n; ++i) EXPECT_LT(max_abs(rebuilt[i] - d.d2qt_dq2[i]), 1e-9 * scale);
    }
  }
  auto d = diffeo_derivatives(polar_diffeo(), Vec{{1.5, 0.7}});
  Tensor3 rebuilt = second_derivative_by_inversion(d);
  for (int i = 0; i < 2; ++i) EXPECT_LT(max_abs(rebuilt[i] - d.d2qt_dq2[i]), 1e-9);
}

TEST(Transform, Tangent) {
  TangentPoint x{Vec{{0.3, -0.2}}, Vec{{1.0, 2.0}}};
  auto same = transform_tangent(identity_diffeo(2), x);
  EXPECT_EQ(same.q, x.q);
  EXPECT_EQ(same.v, x.v);
  auto doubled = transform_tangent(doubling(), {v1(0.5), v1(3)});
  EXPECT_DOUBLE_EQ(doubled.v[0], 6);
}

TEST(Transform, CartesianToPolar) {
  auto y = transform_tangent(polar_diffeo(Box{Vec{{-2.0, 0.5}}, Vec{{2.0, 2.5}}}), {Vec{{0.0, 2.0}}, Vec{{1.0, 0.0}}});
  EXPECT_NEAR(y.q[0], 2.0, 1e-15);
  EXPECT_NEAR(y.q[1], std::numbers::pi / 2, 1e-15);
  // vr = (x vx + y vy)/r, vtheta = (x vy - y vx)/r^2
  EXPECT_NEAR(y.v[0], (0 * 1 + 2 * 0) / 2.0, 1e-15);
  EXPECT_NEAR(y.v[1], (0 * 0 - 2 * 1) / 4.0, 1e-15);
}

TEST(Transform, EPointByHand) {
  EPoint X{v1(1), v1(1), v1(0)};
  auto same = transform_epoint(identity_diffeo(1), X);
  EXPECT_EQ(same.a, X.a);
  auto Y = transform_epoint(square_map(), X);
  EXPECT_DOUBLE_EQ(Y.v[0], 2);
  EXPECT_DOUBLE_EQ(Y.a[0], 2);
}

TEST(Transform, EPointFollowsTransformedCurve) {
  std::mt19937_64 rng(8);
  Diffeo phi = random_diffeo(2, rng);
  auto curve = [](double t) { return Vec{{0.6 * std::sin(t), 0.5 * std::cos(1.3 * t)}}; };
  const double h = 1e-4;
  for (double t : {0.1, 0.7, 1.9, 3.0}) {
    EPoint X{curve(t), Vec{{0.6 * std::cos(t), -0.65 * std::sin(1.3 * t)}},
             Vec{{-0.6 * std::sin(t), -0.845 * std::cos(1.3 * t)}}};
    EPoint Y = transform_epoint(phi, X);
    Vec fp = phi.forward(curve(t + h)), f0 = phi.forward(curve(t)), fm = phi.forward(curve(t - h));
    EXPECT_LT(max_abs(Y.q - f0), 1e-14);
    EXPECT_LT(max_abs(Y.v - (fp - fm) / (2 * h)), 1e-6);
    EXPECT_LT(max_abs(Y.a - (fp - 2 * f0 + fm) / (h * h)), 1e-6);
  }
}

TEST(Transform, OneFormByCovectorLaw) {
  auto w = transform_oneform(doubling(), OneForm{v1(0.5), v1(3)});
  EXPECT_DOUBLE_EQ(w.q[0], 1.0);
  EXPECT_DOUBLE_EQ(w.omega[0], 1.5);
}

TEST(Pushforward, IdentityLeavesJetUnchanged) {
  Lagrangian L = fixture_lagrangians()[4].L;
  Vec q{{0.2, -0.3}}, v{{0.5, 0.1}};
  Jet2 j = jet2_at(L, 0.0, {q, v});
  EXPECT_LT(jet_distance(pushforward_jet2(identity_diffeo(2), j, q, v), j), 1e-15);
}

TEST(Pushforward, LinearOneDimensional) {
  Lagrangian L = Lagrangian::parse(1, "0.5*v1^2");
  const double vt = 1.2;
  Jet2 j = jet2_at(L, 0.0, {v1(0.4), v1(0.5 * vt)});
  Jet2 out = pushforward_jet2(doubling(), j, v1(0.8), v1(vt));
  EXPECT_DOUBLE_EQ(out.Lq[0], 0);
  EXPECT_DOUBLE_EQ(out.Lv[0], j.Lv[0] * 0.5);
  EXPECT_DOUBLE_EQ(out.Lvv(0, 0), 0.25);
}

TEST(Pushforward, PolarFreeParticle) {
  Diffeo polar = polar_diffeo();
  Lagrangian cart = Lagrangian::parse(2, "0.5*(v1^2 + v2^2)");
  Lagrangian polar_L = Lagrangian::parse(2, "0.5*(v1^2 + q1^2*v2^2)");
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    Vec x = polar.domain().sample(rng);
    Vec qt = polar.forward(x), vt = random_vec(rng, 2);
    auto d = diffeo_derivatives(polar, qt);
    Jet2 j = jet2_at(cart, 0.0, {d.q, d.dq_dqt * vt});
    EXPECT_LT(jet_distance(pushforward_jet2(d, j, vt), jet2_at(polar_L, 0.0, {qt, vt})), 1e-8);
  }
}

TEST(Pushforward, MatchesSubstitutedLagrangian) {
  std::mt19937_64 rng(21);
  auto fixtures = fixture_lagrangians();
  for (int k = 0; k < 4; ++k) {
    for (const auto& [name, L] : fixtures) {
      Diffeo phi = random_diffeo(L.dim(), rng);
      Lagrangian Lt = pullback_lagrangian(L, phi);
      for (int p = 0; p < 5; ++p) {
        Vec qt = phi.forward(phi.domain().sample(rng)), vt = random_vec(rng, L.dim());
        auto d = diffeo_derivatives(phi, qt);
        Jet2 j = jet2_at(L, 0.0, {d.q, d.dq_dqt * vt});
        EXPECT_LT(jet_distance(pushforward_jet2(d, j, vt), jet2_at(Lt, 0.0, {qt, vt})), 1e-8) << name;
      }
    }
  }
}

TEST(Pushforward, OnlyLqqUsesThirdDerivatives) {
  std::mt19937_64 rng(4);
  Lagrangian L = fixture_lagrangians()[4].L;
  Diffeo phi = random_diffeo(2, rng);
  Vec qt = phi.forward(phi.domain().sample(rng)), vt = random_vec(rng, 2);
  auto d = diffeo_derivatives(phi, qt);
  Jet2 j = jet2_at(L, 0.0, {d.q, d.dq_dqt * vt});
  Jet2 full = pushforward_jet2(d, j, vt);
  d.d3q_dqt3 = zeros4(2);
  Jet2 cut = pushforward_jet2(d, j, vt);
  EXPECT_EQ(full.L, cut.L);
  EXPECT_EQ(full.Lq, cut.Lq);
  EXPECT_EQ(full.Lv, cut.Lv);
  EXPECT_EQ(full.Lqv, cut.Lqv);
  EXPECT_EQ(full.Lvv, cut.Lvv);
  EXPECT_GT(max_abs(full.Lqq - cut.Lqq), 1e-6);
}

TEST(Pushforward, CovariantLawsForLvAndLvv) {
  std::mt19937_64 rng(9);
  Lagrangian L = fixture_lagrangians()[3].L;
  Diffeo phi = random_diffeo(2, rng);
  Vec qt = phi.forward(phi.domain().sample(rng)), vt = random_vec(rng, 2);
  auto d = diffeo_derivatives(phi, qt);
  Jet2 j = jet2_at(L, 0.0, {d.q, d.dq_dqt * vt});
  Jet2 out = pushforward_jet2(d, j, vt);
  EXPECT_LT(max_abs(out.Lv - d.dq_dqt.transpose() * j.Lv), 1e-14);
  EXPECT_LT(max_abs(out.Lvv - d.dq_dqt.transpose() * j.Lvv * d.dq_dqt), 1e-13);
}

}  // namespace
}  // namespace equivar
