#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "equivar/mub.hpp"

namespace equivar {
namespace {

constexpr double pi = std::numbers::pi;

// distance on the circle
double angle_gap(double x, double y) {
  double d = std::fmod(std::abs(x - y), 2 * pi);
  return std::min(d, 2 * pi - d);
}

TEST(FourierMub, TwoByTwo) {
  CMat U = fourier_mub(2);
  const double s = 1 / std::sqrt(2.0);
  CMat expected(2, 2);
  expected << s, s, s, -s;
  EXPECT_LT((U - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FourierMub, RejectsSmallN) {
  EXPECT_THROW(fourier_mub(1), PreconditionError);
  EXPECT_THROW(fourier_mub(0), PreconditionError);
}

TEST(FourierMub, ThreeIsUnitary) { EXPECT_LT(check_mub(fourier_mub(3)).unitary_residual, 1e-12); }

TEST(FourierMub, FiveIsUnbiased) {
  CMat U = fourier_mub(5);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) EXPECT_NEAR(std::norm(U(a, b)), 0.2, 1e-12);
}

TEST(FourierMub, BothConditionsUpToTwelve) {
  for (int N = 2; N <= 12; ++N) {
    MubCheck c = check_mub(fourier_mub(N), 1e-12);
    EXPECT_TRUE(c.unbiased) << N;
    EXPECT_TRUE(c.unitary) << N;
  }
}

TEST(CheckMub, Identity) {
  MubCheck c = check_mub(CMat::Identity(2, 2));
  EXPECT_FALSE(c.unbiased);
  EXPECT_TRUE(c.unitary);
  EXPECT_DOUBLE_EQ(c.unbiased_residual, 0.5);
}

TEST(CheckMub, FourByFour) {
  MubCheck c = check_mub(fourier_mub(4));
  EXPECT_TRUE(c.unbiased && c.unitary);
}

TEST(CheckMub, RandomUnitary) {
  std::mt19937_64 rng(9);
  for (int N : {2, 3, 6}) {
    MubCheck c = check_mub(random_unitary(N, rng), 1e-12);
    EXPECT_TRUE(c.unitary) << c.unitary_residual;
    EXPECT_FALSE(c.unbiased);
  }
}

TEST(CheckMub, RejectsNonSquare) { EXPECT_THROW(check_mub(CMat::Zero(2, 3)), PreconditionError); }

TEST(PhaseLagrangian, FourierThree) {
  Eigen::MatrixXd L = phase_lagrangian(fourier_mub(3));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      EXPECT_GE(L(a, b), 0.0);
      EXPECT_LT(L(a, b), 2 * pi);
      EXPECT_LT(angle_gap(L(a, b), 2 * pi * a * b / 3), 1e-12);
    }
}

TEST(PhaseLagrangian, FourierTwo) {
  Eigen::MatrixXd L = phase_lagrangian(fourier_mub(2));
  EXPECT_NEAR(L(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(L(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(L(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(L(1, 1), pi, 1e-15);
}

TEST(PhaseLagrangian, RoundTrip) {
  CMat U = fourier_mub(7);
  EXPECT_LT((reconstruct(phase_lagrangian(U)) - U).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PhaseLagrangian, RoundTripOnOtherUnbiasedUnitaries) {
  // diagonal phases on either side keep both conditions
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ph(0, 2 * pi);
  for (int N = 2; N <= 12; ++N) {
    CMat D1 = CMat::Zero(N, N), D2 = CMat::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      D1(i, i) = std::polar(1.0, ph(rng));
      D2(i, i) = std::polar(1.0, ph(rng));
    }
    CMat U = D1 * fourier_mub(N) * D2;
    ASSERT_TRUE(check_mub(U, 1e-12).unitary);
    Eigen::MatrixXd L = phase_lagrangian(U);
    EXPECT_LT((reconstruct(L) - U).cwiseAbs().maxCoeff(), 1e-12) << N;
    EXPECT_LT((phase_lagrangian(reconstruct(L)) - L).unaryExpr([](double d) { return angle_gap(d, 0); }).maxCoeff(),
              1e-12);
  }
}

TEST(PhaseLagrangian, RejectsBiasedMatrix) {
  EXPECT_THROW(phase_lagrangian(CMat::Identity(3, 3)), PreconditionError);
}

}  // namespace
}  // namespace equivar
