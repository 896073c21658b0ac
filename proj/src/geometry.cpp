#include "naxray/geometry.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace naxray {

ConformalMetric ConformalMetric::euclidean(double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("engulfing margin must be positive");
  ConformalMetric m;
  m.family_ = MetricFamily::euclidean;
  m.epsilon_ = epsilon;
  return m;
}

ConformalMetric ConformalMetric::spherical(double scale, double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("engulfing margin must be positive");
  if (!(scale > 0)) throw ParameterError("spherical scale must be positive");
  ConformalMetric m;
  m.family_ = MetricFamily::spherical;
  m.scale_ = scale;
  m.epsilon_ = epsilon;
  return m;
}

ConformalMetric ConformalMetric::hyperbolic(double scale, double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("engulfing margin must be positive");
  if (!(scale > 0) || scale * (1.0 + epsilon) >= 1.0) {
    throw ParameterError("hyperbolic scale must satisfy 0 < scale * (1 + epsilon) < 1");
  }
  ConformalMetric m;
  m.family_ = MetricFamily::hyperbolic;
  m.scale_ = scale;
  m.epsilon_ = epsilon;
  return m;
}

ConformalMetric ConformalMetric::bumps(std::vector<Bump> terms, double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("engulfing margin must be positive");
  for (const auto& b : terms) {
    if (!(b.width > 0)) throw ParameterError("bump width must be positive");
  }
  ConformalMetric m;
  m.family_ = MetricFamily::bumps;
  m.epsilon_ = epsilon;
  m.bumps_ = std::move(terms);
  return m;
}

ConformalMetric ConformalMetric::random_bumps(std::uint64_t seed, int count,
                                              double amplitude_cap, double width,
                                              double epsilon) {
  if (count < 0) throw ParameterError("bump count must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Bump> terms;
  terms.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(terms.size()) < count) {
    const double c1 = 0.7 * unit(rng);
    const double c2 = 0.7 * unit(rng);
    if (c1 * c1 + c2 * c2 > 0.49) continue;
    terms.push_back({c1, c2, amplitude_cap * unit(rng), width});
  }
  ConformalMetric m = bumps(std::move(terms), epsilon);
  m.seed_ = seed;
  return m;
}

ConformalMetric ConformalMetric::with_epsilon(double epsilon) const {
  if (!(epsilon > 0)) throw ParameterError("engulfing margin must be positive");
  if (family_ == MetricFamily::hyperbolic && scale_ * (1.0 + epsilon) >= 1.0) {
    throw ParameterError("hyperbolic scale too large for the requested margin");
  }
  ConformalMetric m = *this;
  m.epsilon_ = epsilon;
  return m;
}

ConformalMetric ConformalMetric::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) {
    throw ParameterError("metric specification needs a \"family\" field");
  }
  const std::string family = j.at("family").get<std::string>();
  const double eps = j.value("epsilon", 0.1);
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (family == "euclidean") return euclidean(eps);
  if (family == "spherical") return spherical(params.value("scale", 0.5), eps);
  if (family == "hyperbolic") return hyperbolic(params.value("scale", 0.5), eps);
  if (family == "bumps") {
    if (params.contains("bumps")) {
      std::vector<Bump> terms;
      for (const auto& b : params.at("bumps")) {
        const auto& c = b.at("center");
        terms.push_back({c.at(0).get<double>(), c.at(1).get<double>(),
                         b.at("amplitude").get<double>(), b.value("width", 0.35)});
      }
      ConformalMetric m = bumps(std::move(terms), eps);
      m.seed_ = seed;
      return m;
    }
    return random_bumps(seed, params.value("count", 3), params.value("amplitude", 0.15),
                        params.value("width", 0.35), eps);
  }
  throw ParameterError("unknown metric family: " + family);
}

nlohmann::json ConformalMetric::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon_;
  j["seed"] = seed_;
  switch (family_) {
    case MetricFamily::euclidean:
      j["family"] = "euclidean";
      j["params"] = nlohmann::json::object();
      break;
    case MetricFamily::spherical:
      j["family"] = "spherical";
      j["params"] = {{"scale", scale_}};
      break;
    case MetricFamily::hyperbolic:
      j["family"] = "hyperbolic";
      j["params"] = {{"scale", scale_}};
      break;
    case MetricFamily::bumps: {
      j["family"] = "bumps";
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& b : bumps_) {
        arr.push_back({{"center", {b.c1, b.c2}}, {"amplitude", b.amplitude}, {"width", b.width}});
      }
      j["params"] = {{"bumps", arr}};
      break;
    }
  }
  return j;
}

MetricSample ConformalMetric::eval(double x1, double x2) const {
  if (std::hypot(x1, x2) > engulf_radius() * (1.0 + 1e-12)) {
    throw DomainError("point outside the engulfing disc");
  }
  return sample(x1, x2);
}

MetricValues eval_metric(const ConformalMetric& m, double x1, double x2) {
  const MetricSample s = m.eval(x1, x2);
  return {s.lambda, s.d1, s.d2, s.curvature()};
}

PhasePoint geodesic_flow(const ConformalMetric& m, const PhasePoint& p, double t,
                         const IntegratorConfig& cfg) {
  if (p.radius() > m.engulf_radius() * (1.0 + 1e-12)) {
    throw DomainError("phase point outside the engulfing disc");
  }
  PhasePoint q = p;
  integrate_flow(m, q, t, cfg);
  return q;
}

double exit_time(const ConformalMetric& m, const PhasePoint& p, double radius,
                 const IntegratorConfig& cfg) {
  if (!(radius > 0) || radius > m.engulf_radius() * (1.0 + 1e-12)) {
    throw ParameterError("exit radius must lie in (0, 1 + epsilon]");
  }
  if (p.radius() > radius * (1.0 + 1e-12)) {
    throw DomainError("phase point outside the requested disc");
  }
  PhasePoint q = p;
  return integrate_flow_to_exit(m, q, radius, cfg);
}

BoundaryCoordinate scattering_relation(const ConformalMetric& m, const BoundaryCoordinate& b,
                                       const IntegratorConfig& cfg) {
  if (std::abs(b.mu) > kPi / 2 - kGlancingTolerance) {
    throw GlancingError("influx direction is glancing");
  }
  PhasePoint p = influx_point(b);
  integrate_flow_to_exit(m, p, 1.0, cfg);
  return outflux_coordinate(p);
}

double boundary_geodesic_curvature(const ConformalMetric& m, double beta) {
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const MetricSample ms = m.sample(c, s);
  const double dr = c * ms.d1 + s * ms.d2;
  return std::exp(-ms.lambda) * (1.0 + dr);
}

nlohmann::json SimplicityReport::to_json() const {
  return {{"non_trapping", non_trapping},
          {"max_exit_time", max_exit_time},
          {"strictly_convex", strictly_convex},
          {"min_boundary_curvature", min_boundary_curvature},
          {"no_conjugate_points", no_conjugate_points},
          {"min_jacobi", min_jacobi},
          {"geodesics_sampled", geodesics_sampled},
          {"boundary_points_sampled", boundary_points_sampled},
          {"simple", simple()}};
}

SimplicityReport validate_simplicity(const ConformalMetric& m, const SimplicityBudget& budget) {
  SimplicityReport report;

  report.min_boundary_curvature = std::numeric_limits<double>::infinity();
  for (int i = 0; i < budget.n_boundary; ++i) {
    const double beta = kTwoPi * i / budget.n_boundary;
    report.min_boundary_curvature =
        std::min(report.min_boundary_curvature, boundary_geodesic_curvature(m, beta));
  }
  report.boundary_points_sampled = budget.n_boundary;
  report.strictly_convex = report.min_boundary_curvature > 0.0;

  // Jacobi scalar b'' + K b = 0, b(0) = 0, b'(0) = 1, carried as a 2x1 state.
  const auto jacobi_rhs = [&m](const PhasePoint& q, const Mat& y) {
    Mat d(2, 1);
    d(0, 0) = y(1, 0);
    d(1, 0) = -m.sample(q.x1, q.x2).curvature() * y(0, 0);
    return d;
  };

  report.min_jacobi = std::numeric_limits<double>::infinity();
  for (const auto& b : influx_grid(budget.n_beta, budget.n_mu, budget.glancing_margin)) {
    PhasePoint p = influx_point(b);
    Mat y(2, 1);
    y(0, 0) = 0.0;
    y(1, 0) = 1.0;
    bool positive = true;
    const auto watch = [&positive](double, const PhasePoint&, const Mat& state) {
      if (state(0, 0).real() <= 0.0) positive = false;
    };
    ++report.geodesics_sampled;
    try {
      const double tau = integrate_joint_to_exit(m, p, y, 1.0, budget.integrator, jacobi_rhs, watch);
      report.max_exit_time = std::max(report.max_exit_time, tau);
      report.min_jacobi = std::min(report.min_jacobi, y(0, 0).real());
      if (!positive) report.no_conjugate_points = false;
    } catch (const NonTrappingError&) {
      report.non_trapping = false;
      report.max_exit_time = std::max(report.max_exit_time, budget.integrator.max_time);
      if (!positive) report.no_conjugate_points = false;
    }
  }
  return report;
}

std::vector<BoundaryCoordinate> influx_grid(int n_beta, int n_mu, double glancing_margin) {
  if (n_beta < 1 || n_mu < 1) throw ParameterError("influx grid counts must be positive");
  if (!(glancing_margin > 0) || glancing_margin >= kPi / 2) {
    throw ParameterError("glancing margin must lie in (0, pi/2)");
  }
  std::vector<BoundaryCoordinate> grid;
  grid.reserve(static_cast<std::size_t>(n_beta) * static_cast<std::size_t>(n_mu));
  const double lo = -kPi / 2 + glancing_margin;
  const double hi = kPi / 2 - glancing_margin;
  for (int i = 0; i < n_beta; ++i) {
    const double beta = kTwoPi * i / n_beta;
    for (int j = 0; j < n_mu; ++j) {
      const double mu = n_mu == 1 ? 0.0 : lo + (hi - lo) * j / (n_mu - 1);
      grid.push_back({beta, mu});
    }
  }
  return grid;
}

}  // namespace naxray
