#pragma once

#include <vector>

#include <Eigen/Dense>

namespace equivar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Rank-3 array stored as n matrices: t[a](b, c).
using Tensor3 = std::vector<Mat>;
/// Rank-4 array: t[a][b](c, d).
using Tensor4 = std::vector<std::vector<Mat>>;

inline Tensor3 zeros3(int n) { return Tensor3(n, Mat::Zero(n, n)); }
inline Tensor4 zeros4(int n) { return Tensor4(n, Tensor3(n, Mat::Zero(n, n))); }

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double max_abs(const Tensor3& t) {
  double m = 0.0;
  for (const auto& s : t) m = std::max(m, max_abs(s));
  return m;
}

}  // namespace equivar
