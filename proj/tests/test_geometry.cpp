#include <cmath>

#include "doctest.h"
#include "naxray/geometry.hpp"
#include "oracles/geometry_oracles.hpp"

using namespace naxray;

TEST_CASE("metric families have their constant curvature") {
  const auto sph = ConformalMetric::spherical(0.5);
  const auto hyp = ConformalMetric::hyperbolic(0.5);
  const auto euc = ConformalMetric::euclidean();
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.7}) {
    for (double y : {-0.2, 0.0, 0.35}) {
      CHECK(eval_metric(sph, x, y).curvature == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(eval_metric(hyp, x, y).curvature == doctest::Approx(-1.0).epsilon(1e-12));
      CHECK(eval_metric(euc, x, y).curvature == 0.0);
    }
  }
  // the collar between the unit circle and the engulfing circle is usable
  CHECK(eval_metric(sph, 1.05, 0.0).curvature == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bump metric derivatives match finite differences") {
  const auto m = ConformalMetric::random_bumps(4, 3, 0.15, 0.35);
  const double h = 1e-5;
  for (double x : {-0.5, 0.1, 0.6}) {
    for (double y : {-0.4, 0.2}) {
      const MetricSample s = m.sample(x, y);
      const double d1 = (m.lambda(x + h, y) - m.lambda(x - h, y)) / (2 * h);
      const double d2 = (m.lambda(x, y + h) - m.lambda(x, y - h)) / (2 * h);
      const double lap = (m.lambda(x + h, y) + m.lambda(x - h, y) + m.lambda(x, y + h) +
                          m.lambda(x, y - h) - 4 * m.lambda(x, y)) / (h * h);
      CHECK(std::abs(s.d1 - d1) < 1e-8);
      CHECK(std::abs(s.d2 - d2) < 1e-8);
      CHECK(std::abs(s.laplacian - lap) < 1e-4);
    }
  }
}

TEST_CASE("evaluation outside the engulfing disc is rejected") {
  const auto m = ConformalMetric::spherical(0.5, 0.1);
  CHECK_NOTHROW(eval_metric(m, 1.09, 0.0));
  CHECK_THROWS_AS(eval_metric(m, 1.2, 0.0), DomainError);
}

TEST_CASE("Euclidean exit times and scattering relation follow the chord") {
  const auto m = ConformalMetric::euclidean();
  IntegratorConfig cfg;
  cfg.step = 1e-2;
  for (double beta : {0.0, 1.1, 2.7, 5.0}) {
    for (double mu : {-1.3, -0.4, 0.0, 0.9}) {
      const BoundaryCoordinate b{beta, mu};
      const auto chord = oracle::euclidean_chord(beta, mu);
      CHECK(exit_time(m, influx_point(b), 1.0, cfg) == doctest::Approx(chord.length).epsilon(1e-9));
      const BoundaryCoordinate out = scattering_relation(m, b, cfg);
      CHECK(std::cos(out.beta) == doctest::Approx(chord.exit_x1).epsilon(1e-8));
      CHECK(std::sin(out.beta) == doctest::Approx(chord.exit_x2).epsilon(1e-8));
      // straight line: the outgoing angle to the normal equals the incoming one
      CHECK(std::abs(wrap_signed(out.mu + mu)) < 1e-8);
    }
  }
}

TEST_CASE("geodesic flow agrees with an independent integrator") {
  const auto m = ConformalMetric::spherical(0.5);
  const auto c = oracle::spherical_conformal(0.5);
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  for (const auto& p0 : {PhasePoint(0.1, -0.2, 0.4), PhasePoint(-0.5, 0.3, 0.3)}) {
    const PhasePoint q = geodesic_flow(m, p0, 0.7, cfg);
    const oracle::Point r = oracle::flow(c, {p0.x1, p0.x2, p0.theta}, 0.7, 4000);
    CHECK(std::abs(q.x1 - r.x1) < 1e-10);
    CHECK(std::abs(q.x2 - r.x2) < 1e-10);
    CHECK(std::abs(wrap_signed(q.theta - r.theta)) < 1e-10);
    const PhasePoint back = geodesic_flow(m, q, -0.7, cfg);
    CHECK(std::abs(back.x1 - p0.x1) < 1e-11);
    CHECK(std::abs(back.x2 - p0.x2) < 1e-11);
  }
}

TEST_CASE("outward boundary points exit immediately") {
  const auto m = ConformalMetric::hyperbolic(0.5);
  CHECK(exit_time(m, PhasePoint(1.0, 0.0, 0.3), 1.0) == 0.0);
  CHECK(exit_time(m, outflux_point({2.0, 0.5}), 1.0) == 0.0);
}

TEST_CASE("outflux coordinates invert outflux points") {
  for (double beta : {0.2, 3.0, 6.1}) {
    for (double mu : {-1.2, 0.0, 1.4}) {
      const BoundaryCoordinate b = outflux_coordinate(outflux_point({beta, mu}));
      CHECK(b.beta == doctest::Approx(beta).epsilon(1e-14));
      CHECK(b.mu == doctest::Approx(mu).epsilon(1e-14));
      const PhasePoint in = influx_point({beta, mu});
      const PhasePoint out = outflux_point({beta, mu}).reversed();
      CHECK(std::abs(wrap_signed(in.theta - out.theta)) < 1e-14);
    }
  }
}

TEST_CASE("simplicity of the standard families") {
  SimplicityBudget budget;
  budget.n_beta = 8;
  budget.n_mu = 6;
  for (const auto& m : {ConformalMetric::euclidean(), ConformalMetric::spherical(0.5),
                        ConformalMetric::hyperbolic(0.5), ConformalMetric::random_bumps(1)}) {
    const SimplicityReport r = validate_simplicity(m, budget);
    CHECK(r.simple());
    CHECK(r.min_jacobi > 0.0);
    CHECK(r.geodesics_sampled == 48);
  }
  // A cap larger than a hemisphere is neither convex nor free of conjugate points.
  const SimplicityReport big = validate_simplicity(ConformalMetric::spherical(1.5), budget);
  CHECK_FALSE(big.simple());
  CHECK_FALSE(big.strictly_convex);
  CHECK(big.min_boundary_curvature < 0.0);
}

TEST_CASE("boundary geodesic curvature of a spherical cap") {
  // circle |x| = 1 in the stereographic cap of scale s: curvature (1 - s^2)/(2 s)
  for (double s : {0.3, 0.5, 0.8}) {
    const auto m = ConformalMetric::spherical(s);
    CHECK(boundary_geodesic_curvature(m, 0.7) == doctest::Approx((1 - s * s) / (2 * s)).epsilon(1e-12));
  }
}

TEST_CASE("influx grid layout and validation") {
  const auto g = influx_grid(8, 5, 0.1);
  REQUIRE(g.size() == 40);
  for (const auto& b : g) {
    CHECK(b.beta >= 0.0);
    CHECK(b.beta < kTwoPi);
    CHECK(std::abs(b.mu) <= kPi / 2 - 0.1 + 1e-14);
  }
  CHECK(g[0].beta == g[4].beta);
  CHECK(g[5].beta > g[4].beta);
  CHECK_THROWS_AS(influx_grid(0, 4, 0.1), ParameterError);
  CHECK_THROWS_AS(influx_grid(4, 4, 2.0), ParameterError);
}

TEST_CASE("metric JSON round trip") {
  const auto m = ConformalMetric::random_bumps(9, 2, 0.1, 0.3, 0.2);
  const auto r = ConformalMetric::from_json(m.to_json());
  CHECK(r.epsilon() == m.epsilon());
  CHECK(r.lambda(0.3, -0.1) == m.lambda(0.3, -0.1));
  CHECK(m.with_epsilon(0.05).lambda(0.2, 0.2) == m.lambda(0.2, 0.2));
  CHECK_THROWS_AS(ConformalMetric::from_json({{"family", "torus"}}), ParameterError);
}
