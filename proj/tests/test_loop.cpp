#include <cmath>

#include "doctest.h"
#include "loops.hpp"
#include "naxray/loop.hpp"
#include "naxray/transport.hpp"

using namespace naxray;

TEST_CASE("scalar Fejer-Riesz example") {
  const auto S = MatrixLoop::sample(32, [](double th) {
    Mat v(1, 1);
    v << 5.0 + 4.0 * std::cos(th);
    return v;
  });
  SpectralFactorStats stats;
  const auto F = spectral_factor(S, 1e-13, 60, &stats);
  const auto expected = MatrixLoop::sample(32, [](double th) {
    Mat v(1, 1);
    v << 2.0 + std::exp(cd(0, th));
    return v;
  });
  CHECK(max_deviation(F, expected) < 1e-13);
  CHECK(stats.residual < 1e-13);
}

TEST_CASE("factor agrees with the block Toeplitz Cholesky oracle") {
  for (int n : {1, 2}) {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      CHECK(loops::bauer_deviation(loops::random_positive_loop(n, seed, 128), 16, 200) < 1e-10);
    }
  }
}

TEST_CASE("factor properties") {
  const auto S = loops::random_positive_loop(2, 3, 128);
  const auto F = spectral_factor(S);
  CHECK(max_deviation(F * F.adjoint(), S) < 1e-12);
  CHECK(F.negative_mode_ratio() < 1e-16);
  CHECK(F.inverse().negative_mode_ratio() < 1e-16);
  const Mat f0 = F.coefficients()[0];
  CHECK(std::abs(f0(0, 1)) < 1e-14);
  CHECK(f0(0, 0).real() > 0);
  CHECK(std::abs(f0(1, 1).imag()) < 1e-14);
}

TEST_CASE("non-positive loops are rejected") {
  const auto S = MatrixLoop::sample(16, [](double th) {
    Mat v(1, 1);
    v << std::cos(th);
    return v;
  });
  CHECK_THROWS_AS(spectral_factor(S), InputError);
}

TEST_CASE("fibre factorization R = F U") {
  const auto R = MatrixLoop::sample(64, [](double th) {
    Mat v(2, 2);
    v << 1.0 + 0.3 * std::cos(th), cd(0.2, 0.1) * std::sin(2 * th), 0.4 * std::exp(cd(0, -th)), 1.2;
    return v;
  });
  const auto fac = factorize_fiber(R);
  CHECK(fac.recon < 1e-12);
  CHECK(fac.holF < 1e-16);
  CHECK(fac.holFinv < 1e-16);
  CHECK(fac.unitU < 1e-12);
  CHECK(fac.normU < 1e-12);
  CHECK(max_deviation(fac.F * fac.U, R) < 1e-12);
}

TEST_CASE("loop coefficients round trip") {
  const auto S = loops::random_positive_loop(2, 1, 16);
  CHECK(max_deviation(MatrixLoop::from_coefficients(S.coefficients()), S) < 1e-14);
  CHECK(max_deviation(S.reflected().reflected(), S) == 0.0);
  CHECK(S.positive_mode_ratio() == doctest::Approx(S.negative_mode_ratio()).epsilon(1e-10));
}

TEST_CASE("gridded factorization and its anti-holomorphic twin") {
  const auto m = ConformalMetric::spherical(0.5);
  const auto a = AttenuationField::from_pair(random_pair(2, 7, Algebra::gl, 2, 0.3, 0.3), m);
  const SMGrid g{17, 32, 64};
  TransportConfig cfg;
  cfg.integrator.step = 0.02;
  const auto R = integrating_factor(m, a, g, cfg);
  const auto fr = factorize(R);
  CHECK(fr.recon_res < 1e-10);
  CHECK(fr.unitU < 1e-10);
  CHECK(fr.holF < 1e-8);
  CHECK_FALSE(fr.spike);
  const auto ar = anti_factorize(R);
  CHECK(ar.recon_res < 1e-10);
  CHECK(antiholomorphicity_ratio(ar.F) < 1e-8);
  const auto d = fr.diagnostics();
  CHECK(d.contains("recon_res"));
  CHECK(d.contains("holF"));
}

TEST_CASE("zero attenuation gives trivial factors and B = 0") {
  const auto m = ConformalMetric::euclidean();
  const auto a = AttenuationField::zero(2);
  const SMGrid g{17, 32, 16};
  const auto fr = factorize(integrating_factor(m, a, g));
  const auto tr = transform_attenuation(a, fr);
  CHECK(tr.B.sup_norm() < 1e-12);
  CHECK(tr.skew_defect < 1e-12);
  CHECK(tr.route_deviation < 1e-12);
}

TEST_CASE("scalar attenuations: B is the skew part") {
  // n = 1 with compactly supported coefficients: B is purely imaginary and
  // stays in modes -1..1.
  const auto m = ConformalMetric::euclidean();
  const auto a = AttenuationField::from_pair(random_pair(1, 4, Algebra::gl, 2, 0.3, 0.3, 2), m);
  const SMGrid g{33, 64, 32};
  TransportConfig cfg;
  cfg.integrator.step = 0.02;
  const auto fr = factorize(integrating_factor(m, a, g, cfg));
  const auto tr = transform_attenuation(a, fr);
  CHECK(tr.skew_defect < 1e-5);
  CHECK(tr.outband < 1e-5);
  const auto me = mode_equation_residuals(a, fr.F, tr.B);
  CHECK(me.res_minus1 < 1e-4);
  CHECK(me.res_0 < 1e-4);
}
