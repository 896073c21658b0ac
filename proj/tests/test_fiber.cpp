#include <cmath>
#include <sstream>

#include "doctest.h"
#include "naxray/fiber.hpp"
#include "oracles/geometry_oracles.hpp"
#include "probes.hpp"

using namespace naxray;

namespace {

FiberFunction scalar(const SMGrid& g, const ConformalMetric& m,
                     const std::function<cd(double, double, double)>& f) {
  return FiberFunction::sample(g, m, 1, 1, [&](double x1, double x2, double th) {
    Mat v(1, 1);
    v(0, 0) = f(x1, x2, th);
    return v;
  });
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_NOTHROW(SMGrid{33, 64, 16}.validate());
  CHECK_THROWS_AS((SMGrid{33, 64, 24}.validate()), ParameterError);
  CHECK_THROWS_AS((SMGrid{33, 62, 16}.validate()), ParameterError);
  CHECK_THROWS_AS((SMGrid{5, 64, 16}.validate()), ParameterError);
}

TEST_CASE("spatial quadrature integrates disc moments exactly") {
  const SMGrid g{33, 64, 1};
  for (int a = 0; a <= 6; ++a) {
    for (int b = 0; a + b <= 6; ++b) {
      double s = 0.0;
      for (int i = 0; i < g.n_r; ++i) {
        for (int j = 0; j < g.n_phi; ++j) {
          const double x1 = g.r(i) * std::cos(g.phi(j)), x2 = g.r(i) * std::sin(g.phi(j));
          s += spatial_weight(g, i) * std::pow(x1, a) * std::pow(x2, b);
        }
      }
      CHECK(std::abs(s - oracle::disc_moment(a, b)) < 1e-13);
    }
  }
}

TEST_CASE("inner product carries the area form and the fibre measure") {
  // Euclidean: (1, 1) = 2 pi * pi; spherical cap of scale s: area 4 pi s^2/(1 + s^2)
  const SMGrid g{33, 64, 8};
  const auto one = [](double, double, double) { return cd(1.0); };
  const auto e = ConformalMetric::euclidean();
  CHECK(inner_product(scalar(g, e, one), scalar(g, e, one)).real() ==
        doctest::Approx(2 * kPi * kPi).epsilon(1e-13));
  const auto s = ConformalMetric::spherical(0.5);
  const double area = 4 * kPi * 0.25 / 1.25;
  CHECK(inner_product(scalar(g, s, one), scalar(g, s, one)).real() ==
        doctest::Approx(kTwoPi * area).epsilon(1e-8));
}

TEST_CASE("V is the fibre derivative") {
  const SMGrid g{9, 8, 16};
  const auto m = ConformalMetric::euclidean();
  const auto u = scalar(g, m, [](double x, double, double th) { return (1.0 + x) * std::exp(cd(0, 3 * th)); });
  const auto vu = apply_V(u);
  const auto expected = scalar(g, m, [](double x, double, double th) {
    return cd(0, 3) * (1.0 + x) * std::exp(cd(0, 3 * th));
  });
  CHECK((vu - expected).sup_norm() < 1e-12);
}

TEST_CASE("X matches differencing along an independently integrated flow") {
  const SMGrid g{65, 128, 16};
  const auto f = [](double x1, double x2, double th) {
    return std::exp(cd(0.7 * x1 - 0.4 * x2, 0.9 * x1 * x2)) * (2.0 + std::cos(th) + cd(0, 1) * std::sin(2 * th));
  };
  for (double s : {0.0, 0.5}) {
    const auto m = s == 0.0 ? ConformalMetric::euclidean() : ConformalMetric::spherical(s);
    const auto c = s == 0.0 ? oracle::euclidean_conformal() : oracle::spherical_conformal(s);
    const auto xu = apply_X(scalar(g, m, f));
    double worst = 0.0;
    for (int i : {0, 10, 31, 50}) {
      for (int j : {0, 17, 90}) {
        for (int k : {0, 5, 11}) {
          const oracle::Point p{g.r(i) * std::cos(g.phi(j)), g.r(i) * std::sin(g.phi(j)), g.theta(k)};
          const cd ref = oracle::flow_derivative(c, [&](const oracle::Point& q) { return f(q.x1, q.x2, q.theta); }, p);
          worst = std::max(worst, std::abs(xu.at(i, j, k)(0, 0) - ref));
        }
      }
    }
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("structure equations on the three curved families") {
  const SMGrid coarse{33, 64, 16}, fine{65, 128, 16};
  for (const auto& m : {ConformalMetric::spherical(0.5), ConformalMetric::hyperbolic(0.5),
                        ConformalMetric::random_bumps(3)}) {
    const auto rc = check_structure_equations({probes::plane_wave_probe(coarse, m, 5)});
    const auto rf = check_structure_equations({probes::plane_wave_probe(fine, m, 5)});
    CHECK(rf.max() < 1e-6);
    CHECK(std::log2(rc.xxperp_plus_kv / rf.xxperp_plus_kv) > 3.8);
  }
}

TEST_CASE("eta operators shift modes and are skew-adjoint") {
  const SMGrid g{65, 128, 16};
  const auto m = ConformalMetric::spherical(0.5);
  const auto cut = [](double x1, double x2) { return std::pow(std::max(0.0, 1 - x1 * x1 - x2 * x2), 4); };
  const auto u = scalar(g, m, [&](double x1, double x2, double th) {
    return cut(x1, x2) * (std::exp(cd(x1, x2)) + cd(0.5, 0.0) * std::exp(cd(0, th)));
  });
  const auto v = scalar(g, m, [&](double x1, double x2, double th) {
    return cut(x1, x2) * (x1 * x2 + std::exp(cd(0, 2 * th)) * cd(1 - x1, x2));
  });
  const auto ep = eta_plus(u);
  // eta_+ maps modes {0, 1} to {1, 2}
  CHECK(holomorphicity_ratio(ep) < 1e-20);
  CHECK(mode_spectrum(ep).energy_of(0) < 1e-20 * mode_spectrum(ep).total());
  const cd lhs = inner_product(ep, v);
  const cd rhs = -inner_product(u, eta_minus(v));
  CHECK(std::abs(lhs - rhs) < 1e-6 * std::abs(lhs));
}

TEST_CASE("mode projections and holomorphicity ratios") {
  const SMGrid g{9, 8, 16};
  const auto m = ConformalMetric::euclidean();
  const auto pos = scalar(g, m, [](double x, double, double th) { return (1 + x) * std::exp(cd(0, th)); });
  const auto neg = scalar(g, m, [](double x, double, double th) { return (1 + x) * std::exp(cd(0, -th)); });
  CHECK(holomorphicity_ratio(pos) < 1e-28);
  CHECK(holomorphicity_ratio(neg) == doctest::Approx(1.0));
  CHECK(antiholomorphicity_ratio(pos) == doctest::Approx(1.0));
  const auto both = pos + neg;
  CHECK(holomorphicity_ratio(both) == doctest::Approx(0.5));
  CHECK((project_mode(both, 1) - pos).sup_norm() < 1e-14);
  CHECK(outside_band_ratio(both, 1) < 1e-28);
  CHECK(outside_band_ratio(both, 0) == doctest::Approx(1.0));
  CHECK(holomorphicity_ratio(FiberFunction(g, m, 1, 1)) == 0.0);
}

TEST_CASE("pointwise algebra") {
  const SMGrid g{9, 8, 4};
  const auto m = ConformalMetric::euclidean();
  const auto a = FiberFunction::sample(g, m, 2, 2, [](double x1, double x2, double th) {
    Mat v(2, 2);
    v << 2.0 + x1, cd(0, x2), std::sin(th), 1.5;
    return v;
  });
  const auto id = pointwise_product(a, pointwise_inverse(a));
  const auto eye = FiberFunction::sample(g, m, 2, 2, [](double, double, double) { return identity(2); });
  CHECK((id - eye).sup_norm() < 1e-14);
  CHECK((pointwise_adjoint(pointwise_adjoint(a)) - a).sup_norm() == 0.0);
  CHECK((reflect_theta(reflect_theta(a)) - a).sup_norm() == 0.0);
  CHECK_THROWS_AS(a + FiberFunction(g, m, 1, 1), ParameterError);
}

TEST_CASE("interpolation off the grid") {
  const SMGrid g{65, 128, 16};
  const auto m = ConformalMetric::hyperbolic(0.5);
  const auto f = [](double x1, double x2, double th) {
    return std::exp(cd(0.5 * x1, x2)) * (1.0 + 0.3 * std::exp(cd(0, -2 * th)));
  };
  const FiberInterpolator it(scalar(g, m, f));
  for (double x1 : {-0.71, 0.05, 0.33}) {
    for (double x2 : {-0.2, 0.48}) {
      for (double th : {0.1, 4.0}) {
        CHECK(std::abs(it(x1, x2, th)(0, 0) - f(x1, x2, th)) < 1e-6);
      }
    }
  }
  CHECK(it.kept_modes() == 2);
}

TEST_CASE("binary export round trip and CSV layout") {
  const SMGrid g{7, 4, 2};
  const auto m = ConformalMetric::euclidean();
  const auto u = FiberFunction::sample(g, m, 1, 2, [](double x1, double x2, double th) {
    Mat v(1, 2);
    v << cd(x1, th), x2;
    return v;
  });
  std::stringstream bin;
  write_binary(bin, u);
  const auto back = read_binary(bin, m);
  CHECK(back.rows() == 1);
  CHECK(back.cols() == 2);
  CHECK((back - u).sup_norm() == 0.0);
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_binary(bad, m), Error);

  std::stringstream csv;
  write_csv(csv, u);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "r,phi,theta,re_0,im_0,re_1,im_1");
  int lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  CHECK(lines == 7 * 4 * 2);
}
