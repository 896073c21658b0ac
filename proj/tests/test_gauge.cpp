#include <cmath>
#include <random>

#include "doctest.h"
#include "naxray/gauge.hpp"
#include "oracles/geometry_oracles.hpp"

using namespace naxray;

namespace {

TransportConfig coarse() {
  TransportConfig c;
  c.integrator.step = 0.02;
  return c;
}

Mat scalar_mat(double v) {
  Mat m(1, 1);
  m << v;
  return m;
}

}  // namespace

TEST_CASE("gauge elements are the identity on the boundary") {
  const auto u = GaugeElement::random(2, 5);
  CHECK(u.boundary_defect() < 1e-14);
  std::mt19937_64 rng(1);
  const auto s = GaugeElement::exp_scalar(PolyMatrix::random(1, 2, 0.5, Algebra::gl, rng));
  CHECK(s.boundary_defect() < 1e-14);
  CHECK((u * GaugeElement::random(2, 6)).boundary_defect() < 1e-14);
}

TEST_CASE("gauge differentials match finite differences") {
  const auto u = GaugeElement::random(2, 9);
  const double h = 1e-6;
  for (double x : {-0.4, 0.3}) {
    for (double y : {-0.1, 0.5}) {
      CHECK(sup_norm(u.du1(x, y) - (u.u(x + h, y) - u.u(x - h, y)) / (2 * h)) < 1e-8);
      CHECK(sup_norm(u.du2(x, y) - (u.u(x, y + h) - u.u(x, y - h)) / (2 * h)) < 1e-8);
    }
  }
}

TEST_CASE("gauge action: identity, pure gauge and group law") {
  const auto pair = random_pair(2, 3, Algebra::gl, 2, 0.3, 0.3);
  const auto same = gauge_apply(pair, GaugeElement::identity(2));
  CHECK(sup_norm(same.A1(0.2, 0.1) - pair.A1(0.2, 0.1)) < 1e-15);
  CHECK(sup_norm(same.Phi(0.2, 0.1) - pair.Phi(0.2, 0.1)) < 1e-15);

  const auto u = GaugeElement::random(2, 11), w = GaugeElement::random(2, 12);
  const auto pure = gauge_apply(PairAttenuation::zero(2), u);
  CHECK(sup_norm(pure.A1(0.3, -0.2) - inverse(u.u(0.3, -0.2)) * u.du1(0.3, -0.2)) < 1e-14);
  CHECK(sup_norm(pure.Phi(0.3, -0.2)) == 0.0);

  const auto p1 = gauge_apply(gauge_apply(pair, u), w);
  const auto p2 = gauge_apply(pair, u * w);
  for (double x : {-0.5, 0.1}) {
    CHECK(sup_norm(p1.A1(x, 0.3) - p2.A1(x, 0.3)) < 1e-13);
    CHECK(sup_norm(p1.A2(x, 0.3) - p2.A2(x, 0.3)) < 1e-13);
    CHECK(sup_norm(p1.Phi(x, 0.3) - p2.Phi(x, 0.3)) < 1e-13);
  }
}

TEST_CASE("singular gauges are rejected") {
  // u = Id - (1 - |x|^2)^2 * Id vanishes at the origin
  PolyMatrix p = PolyMatrix::constant(-identity(2));
  CHECK_THROWS_AS(gauge_apply(PairAttenuation::zero(2), GaugeElement::polynomial(p)), InputError);
}

TEST_CASE("scattering data is gauge invariant") {
  const auto m = ConformalMetric::spherical(0.5);
  const BoundaryGrid bg{12, 6, 0.05};
  std::mt19937_64 rng(3);
  const auto scalar_u = GaugeElement::exp_scalar(PolyMatrix::random(1, 2, 0.5, Algebra::gl, rng));
  CHECK(gauge_invariance_check(m, random_pair(1, 2, Algebra::gl, 2, 0.3, 0.3), scalar_u, bg, coarse()) < 1e-6);
  CHECK(gauge_invariance_check(m, random_pair(2, 4, Algebra::gl, 2, 0.3, 0.3), GaugeElement::random(2, 8), bg,
                               coarse()) < 1e-5);
}

TEST_CASE("pseudo-linearization: constant closed form and equal attenuations") {
  const auto e = ConformalMetric::euclidean();
  const BoundaryGrid bg{6, 4, 0.1};
  const auto pl = pseudo_linearization(e, AttenuationField::constant(scalar_mat(0.3)),
                                       AttenuationField::constant(scalar_mat(0.1)), bg, coarse());
  const auto coords = bg.coordinates();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double L = oracle::euclidean_chord(coords[i].beta, coords[i].mu).length;
    CHECK(std::abs(pl.lhs[i](0, 0) - std::exp(0.2 * L)) < 1e-8);
    CHECK(std::abs(pl.rhs[i](0, 0) - std::exp(0.2 * L)) < 1e-8);
  }
  const auto m = ConformalMetric::spherical(0.5);
  const auto a = AttenuationField::from_pair(random_pair(2, 1, Algebra::gl, 2, 0.3, 0.3), m);
  CHECK(pseudo_linearization_residual(m, a, a, bg, coarse()) < 1e-13);
}

TEST_CASE("reconstruction of the identity gauge") {
  const auto m = ConformalMetric::euclidean();
  const auto pair = random_pair(1, 6, Algebra::gl, 2, 0.3, 0.3);
  const auto rec = reconstruct_gauge(m, pair, pair, SMGrid{17, 32, 16}, BoundaryGrid{8, 4, 0.05}, coarse());
  CHECK(rec.verdict == "pass");
  CHECK(rec.scattering_mismatch == 0.0);
  CHECK(rec.identity_defect < 1e-12);
  CHECK(rec.fiber_defect < 1e-12);
  CHECK_FALSE(rec.planted_error.has_value());
  const auto j = rec.defects();
  for (const auto& [k, v] : j.items()) CHECK(v.is_number());
}

TEST_CASE("planted kernel with p = 0 is trivial") {
  const auto m = ConformalMetric::euclidean();
  const auto pair = random_pair(2, 2, Algebra::gl, 1, 0.3, 0.3);
  PlantedLinearKernel k{2, PolyMatrix(2, 1, 1)};
  const auto f = k.source(m, pair);
  CHECK(sup_norm(f(0.2, 0.3, 1.0)) == 0.0);
}

TEST_CASE("planted kernel source is X p + A p") {
  // f = -(X + A)(-p): for A = 0 and the Euclidean metric f = dp(v)
  const auto m = ConformalMetric::euclidean();
  std::mt19937_64 rng(2);
  PlantedLinearKernel k{1, PolyMatrix::random_vector(1, 2, 0.5, rng)};
  const auto f = k.source(m, PairAttenuation::zero(1));
  const double h = 1e-6, th = 0.7, x = 0.2, y = -0.4;
  const cd expect = (k.p(x + h * std::cos(th), y + h * std::sin(th))(0, 0) -
                     k.p(x - h * std::cos(th), y - h * std::sin(th))(0, 0)) / (2 * h);
  CHECK(std::abs(f(x, y, th)(0, 0) - expect) < 1e-8);
}

TEST_CASE("unitarity criterion") {
  const auto m = ConformalMetric::hyperbolic(0.5);
  const BoundaryGrid bg{8, 4, 0.05};
  Mat J(2, 2);
  J << 0, 1, -1, 0;
  const auto skew = unitarity_criterion(m, 2, [J](double x, double) { return Mat((0.5 + x) * J); }, bg, coarse());
  CHECK(skew.unitary());
  CHECK(skew.skew_defect == 0.0);
  CHECK(skew.identity_residual < 1e-8);

  // Phi = diag(1, -1) on the Euclidean disc: C = diag(e^L, e^-L)
  const auto e = ConformalMetric::euclidean();
  Mat H(2, 2);
  H << 1, 0, 0, -1;
  const auto herm = unitarity_criterion(e, 2, [H](double, double) { return H; }, bg, coarse());
  double expected = 0.0;
  for (const auto& b : bg.coordinates()) {
    expected = std::max(expected, std::exp(2 * oracle::euclidean_chord(b.beta, b.mu).length) - 1.0);
  }
  CHECK(herm.unitarity_defect == doctest::Approx(expected).epsilon(1e-8));
  CHECK_FALSE(herm.unitary());
}

TEST_CASE("subgroup preservation") {
  const auto m = ConformalMetric::spherical(0.5);
  const BoundaryGrid bg{6, 4, 0.05};
  const auto su = subgroup_preservation(m, random_pair(2, 8, Algebra::su, 2, 0.5, 0.5), Algebra::su, bg, coarse());
  CHECK(su.group_defect < 1e-7);
  CHECK(su.det_defect < 1e-7);
  const auto so = subgroup_preservation(m, random_pair(3, 9, Algebra::so, 2, 0.5, 0.5), Algebra::so, bg, coarse());
  CHECK(so.group_defect < 1e-7);
  CHECK(so.real_defect < 1e-14);
  const auto sl = subgroup_preservation(m, random_pair(2, 1, Algebra::sl, 2, 0.5, 0.5), Algebra::sl, bg, coarse());
  CHECK(sl.det_defect < 1e-7);
  CHECK_THROWS_AS(subgroup_preservation(m, random_pair(2, 1, Algebra::gl, 1, 0.5, 0.5), Algebra::su, bg, coarse()),
                  InputError);
  CHECK_THROWS_AS(subgroup_preservation(m, random_pair(2, 1, Algebra::gl, 1, 0.5, 0.5), Algebra::gl, bg, coarse()),
                  ParameterError);
}

TEST_CASE("random mode sources stay in modes -1..1") {
  const auto f = random_mode_source(2, 4);
  const SMGrid g{9, 8, 16};
  const auto s = FiberFunction::sample(g, ConformalMetric::euclidean(), 2, 1,
                                       [&](double x1, double x2, double th) { return f(x1, x2, th); });
  CHECK(outside_band_ratio(s, 1) < 1e-28);
  CHECK(s.sup_norm() > 0.0);
}
