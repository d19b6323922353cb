#pragma once

// Pairs of mutually unbiased bases, described by the Gram matrix U_ab = (e_a, f_b).
// Unbiased means |U_ab|^2 = 1/N for all a, b; the phases of sqrt(N) U_ab form
// the discrete "Lagrangian" L(a, b).

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "equivar/error.hpp"

namespace equivar {

using CMat = Eigen::MatrixXcd;

/// U_ab = exp(2 pi i ab / N) / sqrt(N), the discrete Fourier pair.
inline CMat fourier_mub(int N) {
  if (N < 2) throw PreconditionError("fourier_mub: N must be at least 2");
  CMat U(N, N);
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      // reduce ab first so large products do not lose phase accuracy
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(a) * b) % N) / N;
      U(a, b) = std::polar(s, phase);
    }
  return U;
}

struct MubCheck {
  bool unbiased = false;
  bool unitary = false;
  double unbiased_residual = 0.0;  // max |(|U_ab|^2 - 1/N)|
  double unitary_residual = 0.0;   // max |(U^H U - I)_ij|
};

inline MubCheck check_mub(const CMat& U, double tol = 1e-12) {
  if (U.rows() != U.cols() || U.rows() == 0) throw PreconditionError("check_mub: matrix must be square");
  const double N = static_cast<double>(U.rows());
  MubCheck c;
  c.unbiased_residual = (U.cwiseAbs2().array() - 1.0 / N).abs().maxCoeff();
  c.unitary_residual = (U.adjoint() * U - CMat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
  c.unbiased = c.unbiased_residual <= tol;
  c.unitary = c.unitary_residual <= tol;
  return c;
}

/// L(a, b) = arg(sqrt(N) U_ab) in [0, 2 pi).
inline Eigen::MatrixXd phase_lagrangian(const CMat& U, double tol = 1e-9) {
  MubCheck c = check_mub(U, tol);
  if (!c.unbiased)
    throw PreconditionError("phase_lagrangian: some |U_ab|^2 differs from 1/N (residual " +
                            std::to_string(c.unbiased_residual) + ")");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Eigen::MatrixXd L(U.rows(), U.cols());
  for (Eigen::Index a = 0; a < U.rows(); ++a)
    for (Eigen::Index b = 0; b < U.cols(); ++b) {
      double p = std::arg(U(a, b));
      if (p < 0.0) p += two_pi;
      if (p >= two_pi) p = 0.0;
      L(a, b) = p;
    }
  return L;
}

/// U_ab = exp(i L(a, b)) / sqrt(N).
inline CMat reconstruct(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols() || L.rows() == 0) throw PreconditionError("reconstruct: matrix must be square");
  const double s = 1.0 / std::sqrt(static_cast<double>(L.rows()));
  return L.unaryExpr([s](double p) { return std::polar(s, p); });
}

/// Haar-ish unitary from the QR factorization of a complex Gaussian matrix.
inline CMat random_unitary(int N, std::mt19937_64& rng) {
  if (N < 1) throw PreconditionError("random_unitary: N must be positive");
  std::normal_distribution<double> g;
  CMat Z(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) Z(i, j) = {g(rng), g(rng)};
  Eigen::HouseholderQR<CMat> qr(Z);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < N; ++j) {
    const double m = std::abs(R(j, j));
    if (m > 0) Q.col(j) *= R(j, j) / m;
  }
  return Q;
}

}  // namespace equivar
