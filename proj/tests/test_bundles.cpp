#include <gtest/gtest.h>

#include <random>

#include "equivar/bundles.hpp"
#include "support/fixtures.hpp"

namespace equivar {
namespace {

using testing::random_vec;

Vec v1(double x) { return Vec::Constant(1, x); }

TEST(Lambda, SwapsSlots) {
  TangentTstarMPoint y = lambda_iso({v1(1), v1(2), v1(3), v1(4)});
  EXPECT_EQ(y.q[0], 1);
  EXPECT_EQ(y.p[0], 4);
  EXPECT_EQ(y.S[0], 2);
  EXPECT_EQ(y.T[0], 3);
}

TEST(Lambda, InverseExample) {
  CotangentTMPoint x = lambda_inv({v1(1), v1(4), v1(2), v1(3)});
  EXPECT_EQ(x.q[0], 1);
  EXPECT_EQ(x.v[0], 2);
  EXPECT_EQ(x.A[0], 3);
  EXPECT_EQ(x.B[0], 4);
}

TEST(Lambda, ZerosToZeros) {
  Vec z = Vec::Zero(3);
  auto y = lambda_iso({z, z, z, z});
  EXPECT_TRUE(y.p.isZero(0) && y.S.isZero(0) && y.T.isZero(0));
  auto x = lambda_inv({z, z, z, z});
  EXPECT_TRUE(x.v.isZero(0) && x.A.isZero(0) && x.B.isZero(0));
}

TEST(Lambda, RoundTripsExactly) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 4;
    CotangentTMPoint x{random_vec(rng, n, -5, 5), random_vec(rng, n, -5, 5), random_vec(rng, n, -5, 5),
                       random_vec(rng, n, -5, 5)};
    CotangentTMPoint back = lambda_inv(lambda_iso(x));
    EXPECT_EQ(back.q, x.q);
    EXPECT_EQ(back.v, x.v);
    EXPECT_EQ(back.A, x.A);
    EXPECT_EQ(back.B, x.B);
    TangentTstarMPoint y{x.q, x.v, x.A, x.B};
    TangentTstarMPoint yy = lambda_iso(lambda_inv(y));
    EXPECT_EQ(yy.p, y.p);
    EXPECT_EQ(yy.S, y.S);
    EXPECT_EQ(yy.T, y.T);
  }
}

TEST(ZStar, Membership) {
  Vec q = Vec::Zero(2);
  EXPECT_TRUE(in_zstar({q, q, q, Vec::Zero(2)}));
  EXPECT_FALSE(in_zstar({v1(0), v1(0), v1(0), v1(1e-3)}, 1e-9));
  EXPECT_THROW(in_zstar({v1(0), v1(0), v1(0), v1(0)}, -1.0), PreconditionError);
}

TEST(ZStar, PiFlat) {
  OneForm w = pi_flat({Vec{{1.0, 0.0}}, Vec{{5.0, 5.0}}, Vec{{2.0, 3.0}}, Vec::Zero(2)});
  EXPECT_EQ(w.q, (Vec{{1.0, 0.0}}));
  EXPECT_EQ(w.omega, (Vec{{2.0, 3.0}}));
  EXPECT_THROW(pi_flat({v1(0), v1(0), v1(0), v1(1e-2)}), Error);
}

TEST(ZStar, EmbedThenFlattenIsIdentity) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    OneForm w{random_vec(rng, 3), random_vec(rng, 3)};
    OneForm back = pi_flat(embed_zstar(w, random_vec(rng, 3)));
    EXPECT_EQ(back.q, w.q);
    EXPECT_EQ(back.omega, w.omega);
  }
}

TEST(Points, RejectMismatchedOrNonFinite) {
  EXPECT_THROW(TangentPoint(Vec::Zero(2), Vec::Zero(3)), PreconditionError);
  EXPECT_THROW(EPoint(v1(0), v1(0), v1(std::nan(""))), PreconditionError);
  EXPECT_THROW(OneForm(v1(0), Vec::Zero(2)), PreconditionError);
}

TEST(Points, FiberDifferenceNeedsSameBase) {
  CotangentTMPoint x{v1(0), v1(1), v1(2), v1(3)}, y{v1(0), v1(2), v1(2), v1(3)};
  EXPECT_THROW(x - y, PreconditionError);
  auto d = x - x;
  EXPECT_EQ(d.A[0], 0);
  EXPECT_EQ(d.v[0], 1);
}

}  // namespace
}  // namespace equivar
