#pragma once

// Positive-definite matrix loops and the comparison against the Bauer
// oracle, shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <random>

#include "naxray/loop.hpp"
#include "oracles/bauer.hpp"

namespace loops {

/// S = P P^* + delta Id with P a random trigonometric polynomial of
/// degree `degree`.
inline naxray::MatrixLoop random_positive_loop(int n, std::uint64_t seed, int samples,
                                               int degree = 2, double delta = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<naxray::Mat> p;
  for (int k = -degree; k <= degree; ++k) {
    naxray::Mat c(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double re = g(rng), im = g(rng);
        c(i, j) = naxray::cd(re, im) / (1.0 + std::abs(k));
      }
    }
    p.push_back(c);
  }
  return naxray::MatrixLoop::sample(samples, [&](double th) {
    naxray::Mat v = naxray::zeros(n, n);
    for (int k = -degree; k <= degree; ++k) {
      v += p[static_cast<std::size_t>(k + degree)] * std::exp(naxray::cd(0.0, k * th));
    }
    return naxray::Mat(v * v.adjoint() + delta * naxray::identity(n));
  });
}

/// Max coefficient difference between spectral_factor(S) and the Bauer
/// factor, over modes 0..K.
inline double bauer_deviation(const naxray::MatrixLoop& S, int K, int blocks) {
  std::vector<oracle::Dense> samples;
  for (const auto& s : S.samples()) samples.push_back(s);
  const auto s_coeff = oracle::dft_coefficients(samples, 2 * K);
  const auto f_ref = oracle::bauer_factor(s_coeff, 2 * K, blocks);
  const auto f = naxray::spectral_factor(S).coefficients();
  double worst = 0.0;
  for (int k = 0; k <= K; ++k) {
    const oracle::Dense fk = f[static_cast<std::size_t>(k)];
    worst = std::max(worst, (fk - f_ref[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace loops
