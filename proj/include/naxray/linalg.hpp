#pragma once

#include <complex>
#include <Eigen/Dense>

namespace naxray {

using cd = std::complex<double>;

/// Small complex matrix. Storage is inline (no heap) with at most 4x4
/// entries, which covers n <= 4 attenuations and vector states.
using Mat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

inline Mat identity(int n) { return Mat::Identity(n, n); }
inline Mat zeros(int rows, int cols) { return Mat::Zero(rows, cols); }

/// Max-abs entry.
inline double sup_norm(const Mat& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Operator 2-norm bound used for relative comparisons.
inline double fro_norm(const Mat& a) { return a.norm(); }

inline Mat inverse(const Mat& a) { return a.partialPivLu().inverse(); }

/// ||a - b|| / max(1, ||b||), Frobenius.
inline double rel_deviation(const Mat& a, const Mat& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

inline double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  return s(0) / s(s.size() - 1);
}

}  // namespace naxray
