#pragma once

// Spectral factor by Cholesky of a long block Toeplitz section (Bauer's
// method). Deliberately slow and direct: plain DFT, dense Cholesky.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using Dense = Eigen::MatrixXcd;

/// Coefficients c[k] of e^{ik theta} for k = -K..K (index k + K) from N
/// equispaced samples, by direct summation.
inline std::vector<Dense> dft_coefficients(const std::vector<Dense>& samples, int K) {
  const int N = static_cast<int>(samples.size());
  const int n = static_cast<int>(samples[0].rows());
  std::vector<Dense> c(static_cast<std::size_t>(2 * K + 1), Dense::Zero(n, n));
  const double pi = std::acos(-1.0);
  for (int k = -K; k <= K; ++k) {
    for (int j = 0; j < N; ++j) {
      c[static_cast<std::size_t>(k + K)] += samples[static_cast<std::size_t>(j)] *
                                            std::exp(cd(0.0, -2.0 * pi * k * j / N));
    }
    c[static_cast<std::size_t>(k + K)] /= static_cast<double>(N);
  }
  return c;
}

/// f[0..K] with F = sum f_k e^{ik theta}, F F^* = S, f_0 lower triangular
/// with positive diagonal. s holds the coefficients of S for -K..K; m is
/// the number of Toeplitz blocks.
inline std::vector<Dense> bauer_factor(const std::vector<Dense>& s, int K, int m) {
  const int n = static_cast<int>(s[static_cast<std::size_t>(K)].rows());
  Dense T = Dense::Zero(m * n, m * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const int d = i - j;
      if (d < -K || d > K) continue;
      T.block(i * n, j * n, n, n) = s[static_cast<std::size_t>(d + K)];
    }
  }
  const Eigen::LLT<Dense> llt(T);
  const Dense L = llt.matrixL();
  std::vector<Dense> f;
  const int last = m - 1;
  for (int k = 0; k <= K && k <= last; ++k) {
    f.push_back(L.block(last * n, (last - k) * n, n, n));
  }
  return f;
}

}  // namespace oracle
