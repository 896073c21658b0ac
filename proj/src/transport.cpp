#include "naxray/transport.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>
#include <ostream>
#include <sstream>

#include "naxray/parallel.hpp"

namespace naxray {

StateAction matrix_action(const AttenuationField& a, int cols) {
  StateAction s;
  s.n = a.n();
  s.rows = a.n();
  s.cols = cols;
  s.apply = [a](const PhasePoint& p, const Mat& y) { return Mat(a(p) * y); };
  return s;
}

StateAction endomorphism_action(const AttenuationField& a, const AttenuationField& b) {
  if (a.n() != b.n()) throw ParameterError("endomorphism action needs equal sizes");
  StateAction s;
  s.n = a.n();
  s.rows = a.n();
  s.cols = a.n();
  s.apply = [a, b](const PhasePoint& p, const Mat& y) { return Mat(a(p) * y - y * b(p)); };
  return s;
}

namespace {

auto cocycle_rhs(const AttenuationField& a) {
  return [&a](const PhasePoint& q, const Mat& y) { return Mat(-(a(q) * y)); };
}

}  // namespace

Mat solve_cocycle(const ConformalMetric& m, const AttenuationField& a, const PhasePoint& p,
                  double t, const IntegratorConfig& cfg) {
  if (p.radius() > m.engulf_radius() * (1.0 + 1e-12)) {
    throw DomainError("phase point outside the engulfing disc");
  }
  PhasePoint q = p;
  Mat c = identity(a.n());
  integrate_joint(m, q, c, t, cfg, cocycle_rhs(a));
  return c;
}

double cocycle_residual(const ConformalMetric& m, const AttenuationField& a, int samples,
                        std::uint64_t seed, const IntegratorConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double rad = 0.5 * std::sqrt(0.5 * (unit(rng) + 1.0));
    const double ang = kPi * unit(rng);
    const PhasePoint p(rad * std::cos(ang), rad * std::sin(ang), kPi * unit(rng));
    const double t = 0.25 * unit(rng);
    const double s = 0.25 * unit(rng);
    const Mat whole = solve_cocycle(m, a, p, t + s, cfg);
    const Mat split = solve_cocycle(m, a, geodesic_flow(m, p, t, cfg), s, cfg) * solve_cocycle(m, a, p, t, cfg);
    worst = std::max(worst, rel_deviation(split, whole));
  }
  return worst;
}

std::string to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

namespace {

void check_influx(const BoundaryCoordinate& b) {
  if (std::abs(b.mu) > kPi / 2 - kGlancingTolerance) {
    throw GlancingError("influx direction is glancing");
  }
}

/// Max residual of dU/dt + A U using 5-point differences on a uniform
/// stretch of the path (the last node may have a shorter step).
double path_residual(const TransportPath& path, const AttenuationField& a) {
  const std::size_t n = path.U.size();
  if (n < 6) return 0.0;
  const double h = path.t[1] - path.t[0];
  double worst = 0.0;
  for (std::size_t i = 2; i + 3 < n; ++i) {
    const Mat du = (path.U[i - 2] - 8.0 * path.U[i - 1] + 8.0 * path.U[i + 1] - path.U[i + 2]) / (12.0 * h);
    const Mat r = du + a(path.points[i]) * path.U[i];
    worst = std::max(worst, sup_norm(r) / std::max(1.0, sup_norm(path.U[i])));
  }
  return worst;
}

}  // namespace

TransportPath fundamental_solution(const ConformalMetric& m, const AttenuationField& a,
                                   const BoundaryCoordinate& b, Side side,
                                   const IntegratorConfig& cfg) {
  check_influx(b);
  TransportPath path;
  path.side = side;
  const PhasePoint start = influx_point(b);
  const auto rhs = cocycle_rhs(a);

  if (side == Side::minus) {
    PhasePoint p = start;
    Mat u = identity(a.n());
    path.t.push_back(0.0);
    path.points.push_back(p);
    path.U.push_back(u);
    path.tau = integrate_joint_to_exit(m, p, u, 1.0, cfg, rhs,
                                       [&path](double t, const PhasePoint& q, const Mat& y) {
                                         path.t.push_back(t);
                                         path.points.push_back(q);
                                         path.U.push_back(y);
                                       });
  } else {
    PhasePoint exit = start;
    path.tau = integrate_flow_to_exit(m, exit, 1.0, cfg);
    Mat u = identity(a.n());
    std::vector<double> t{path.tau};
    std::vector<PhasePoint> pts{exit};
    std::vector<Mat> us{u};
    integrate_joint(m, exit, u, -path.tau, cfg, rhs,
                    [&](double s, const PhasePoint& q, const Mat& y) {
                      t.push_back(path.tau + s);
                      pts.push_back(q);
                      us.push_back(y);
                    });
    t.back() = 0.0;
    path.t.assign(t.rbegin(), t.rend());
    path.points.assign(pts.rbegin(), pts.rend());
    path.U.assign(us.rbegin(), us.rend());
  }
  path.ode_residual = path_residual(path, a);
  return path;
}

Mat scattering_value(const ConformalMetric& m, const AttenuationField& a,
                     const BoundaryCoordinate& b, const IntegratorConfig& cfg) {
  check_influx(b);
  PhasePoint exit = influx_point(b);
  const double tau = integrate_flow_to_exit(m, exit, 1.0, cfg);
  Mat u = identity(a.n());
  integrate_joint(m, exit, u, -tau, cfg, cocycle_rhs(a));
  return u;
}

namespace {

/// C_-(e) for the outflux coordinate e: U_- at the end of the geodesic that
/// exits at e. That geodesic enters at alpha(e), which is the scattering
/// relation applied to the reversed vector (same coordinates as e).
Mat minus_value(const ConformalMetric& m, const AttenuationField& a, const BoundaryCoordinate& e,
                const IntegratorConfig& cfg) {
  check_influx(e);
  PhasePoint p = influx_point(scattering_relation(m, e, cfg));
  Mat u = identity(a.n());
  integrate_joint_to_exit(m, p, u, 1.0, cfg, cocycle_rhs(a));
  return u;
}

}  // namespace

double ScatteringData::max_cond() const {
  double c = 0.0;
  for (double v : condition) {
    if (std::isfinite(v)) c = std::max(c, v);
  }
  return c;
}

void ScatteringData::throw_if_failed() const {
  if (failures.empty()) return;
  std::ostringstream os;
  os << failures.size() << " geodesic solve(s) failed";
  for (std::size_t i = 0; i < std::min<std::size_t>(failures.size(), 8); ++i) {
    os << "; (beta=" << failures[i].b.beta << ", mu=" << failures[i].b.mu << "): " << failures[i].what;
  }
  throw Error(os.str());
}

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void ScatteringData::write_csv(std::ostream& os) const {
  os << "beta,mu";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) os << ",re_C_" << i << '_' << j << ",im_C_" << i << '_' << j;
  }
  os << '\n';
  for (std::size_t g = 0; g < grid.size(); ++g) {
    os << g17(grid[g].beta) << ',' << g17(grid[g].mu);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        os << ',' << g17(values[g](i, j).real()) << ',' << g17(values[g](i, j).imag());
      }
    }
    os << '\n';
  }
}

nlohmann::json ScatteringData::summary() const {
  return {{"n", n},
          {"grid", {layout.n_beta, layout.n_mu}},
          {"max_cond", max_cond()},
          {"side", to_string(side)}};
}

ScatteringData scattering_data(const ConformalMetric& m, const AttenuationField& a,
                               const BoundaryGrid& grid, const TransportConfig& cfg, Side side) {
  ScatteringData d;
  d.side = side;
  d.n = a.n();
  d.layout = grid;
  d.grid = grid.coordinates();
  const std::size_t count = d.grid.size();
  d.values.assign(count, Mat());
  d.condition.assign(count, 0.0);
  std::vector<std::string> errors(count);
  parallel_for(static_cast<long>(count), cfg.threads, [&](long i) {
    const auto& b = d.grid[static_cast<std::size_t>(i)];
    try {
      Mat v = side == Side::plus ? scattering_value(m, a, b, cfg.integrator)
                                 : minus_value(m, a, b, cfg.integrator);
      d.condition[static_cast<std::size_t>(i)] = condition_number(v);
      d.values[static_cast<std::size_t>(i)] = std::move(v);
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      d.values[static_cast<std::size_t>(i)] =
          Mat::Constant(a.n(), a.n(), cd(std::numeric_limits<double>::quiet_NaN(), 0.0));
      d.condition[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i].empty()) d.failures.push_back({d.grid[i], errors[i]});
  }
  return d;
}

double scattering_minus_check(const ConformalMetric& m, const AttenuationField& a,
                              const BoundaryGrid& grid, const TransportConfig& cfg) {
  const auto coords = grid.coordinates();
  std::vector<double> dev(coords.size(), 0.0);
  parallel_for(static_cast<long>(coords.size()), cfg.threads, [&](long i) {
    const BoundaryCoordinate e = coords[static_cast<std::size_t>(i)];
    // Left side: U_- solved along the geodesic that ends at e.
    const Mat left = minus_value(m, a, e, cfg.integrator);
    // Right side: C_+ solved directly at alpha(e), then inverted.
    const BoundaryCoordinate alpha_e = scattering_relation(m, e, cfg.integrator);
    const Mat right = inverse(scattering_value(m, a, alpha_e, cfg.integrator));
    dev[static_cast<std::size_t>(i)] = rel_deviation(left, right);
  });
  return *std::max_element(dev.begin(), dev.end());
}

// ---------------------------------------------------------------------------
// Attenuated transform
// ---------------------------------------------------------------------------

Mat transport_solution(const ConformalMetric& m, const StateAction& action, const Source& f,
                       const PhasePoint& p, const IntegratorConfig& cfg) {
  PhasePoint exit = p;
  const double tau = integrate_flow_to_exit(m, exit, 1.0, cfg);
  Mat u = zeros(action.rows, action.cols);
  if (tau == 0.0) return u;
  const auto rhs = [&](const PhasePoint& q, const Mat& y) {
    return Mat(-action.apply(q, y) - f(q.x1, q.x2, q.theta));
  };
  integrate_joint(m, exit, u, -tau, cfg, rhs);
  return u;
}

FiberFunction transport_solution_grid(const ConformalMetric& m, const StateAction& action,
                                      const Source& f, const SMGrid& grid,
                                      const TransportConfig& cfg) {
  FiberFunction out(grid, m, action.rows, action.cols);
  const long fibres = grid.fibers();
  parallel_for(fibres, cfg.threads, [&](long idx) {
    const int i = static_cast<int>(idx / grid.n_phi);
    const int j = static_cast<int>(idx % grid.n_phi);
    const double x1 = grid.r(i) * std::cos(grid.phi(j));
    const double x2 = grid.r(i) * std::sin(grid.phi(j));
    for (int k = 0; k < grid.n_theta; ++k) {
      out.set(i, j, k, transport_solution(m, action, f, PhasePoint(x1, x2, grid.theta(k)), cfg.integrator));
    }
  });
  return out;
}

std::vector<Mat> attenuated_transform(const ConformalMetric& m, const StateAction& action,
                                      const Source& f, const std::vector<BoundaryCoordinate>& grid,
                                      const TransportConfig& cfg) {
  std::vector<Mat> out(grid.size());
  parallel_for(static_cast<long>(grid.size()), cfg.threads, [&](long i) {
    const BoundaryCoordinate& b = grid[static_cast<std::size_t>(i)];
    check_influx(b);
    out[static_cast<std::size_t>(i)] = transport_solution(m, action, f, influx_point(b), cfg.integrator);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Integrating factor
// ---------------------------------------------------------------------------

Mat integrating_factor_at(const ConformalMetric& m, const AttenuationField& a, const PhasePoint& p,
                          const IntegratorConfig& cfg) {
  PhasePoint q = p;
  Mat c = identity(a.n());
  integrate_joint_to_exit(m, q, c, m.engulf_radius(), cfg, cocycle_rhs(a));
  return inverse(c);
}

FiberFunction integrating_factor(const ConformalMetric& m, const AttenuationField& a,
                                 const SMGrid& grid, const TransportConfig& cfg) {
  FiberFunction R(grid, m, a.n(), a.n());
  parallel_for(grid.fibers(), cfg.threads, [&](long idx) {
    const int i = static_cast<int>(idx / grid.n_phi);
    const int j = static_cast<int>(idx % grid.n_phi);
    const double x1 = grid.r(i) * std::cos(grid.phi(j));
    const double x2 = grid.r(i) * std::sin(grid.phi(j));
    for (int k = 0; k < grid.n_theta; ++k) {
      R.set(i, j, k, integrating_factor_at(m, a, PhasePoint(x1, x2, grid.theta(k)), cfg.integrator));
    }
  });
  return R;
}

double integrating_factor_grid_residual(const FiberFunction& R, const AttenuationField& a,
                                        int ring_limit) {
  FiberFunction res = apply_X(R);
  res += pointwise_product(a.sample(R.grid(), R.metric()), R);
  return res.sup_norm(ring_limit) / std::max(1.0, R.sup_norm(ring_limit));
}

double integrating_factor_flow_residual(const ConformalMetric& m, const AttenuationField& a,
                                        const std::vector<PhasePoint>& points, double h,
                                        const IntegratorConfig& cfg) {
  double worst = 0.0;
  for (const PhasePoint& p : points) {
    const Mat r0 = integrating_factor_at(m, a, p, cfg);
    const Mat rp = integrating_factor_at(m, a, geodesic_flow(m, p, h, cfg), cfg);
    const Mat rm = integrating_factor_at(m, a, geodesic_flow(m, p, -h, cfg), cfg);
    const Mat rpp = integrating_factor_at(m, a, geodesic_flow(m, p, 2 * h, cfg), cfg);
    const Mat rmm = integrating_factor_at(m, a, geodesic_flow(m, p, -2 * h, cfg), cfg);
    const Mat xr = (rmm - 8.0 * rm + 8.0 * rp - rpp) / (12.0 * h);
    worst = std::max(worst, sup_norm(xr + a(p) * r0) / std::max(1.0, sup_norm(r0)));
  }
  return worst;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  if (order < 1) throw ParameterError("quadrature order must be positive");
  // Golub-Welsch.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(static_cast<std::size_t>(order));
  weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    nodes[static_cast<std::size_t>(i)] = 0.5 * (es.eigenvalues()(i) + 1.0);
    const double v = es.eigenvectors()(0, i);
    weights[static_cast<std::size_t>(i)] = v * v;  // sums to 1 on [0, 1]
  }
}

double integral_formula_check(const ConformalMetric& m, const AttenuationField& a,
                              const Source& f, int state_cols,
                              const std::vector<BoundaryCoordinate>& grid,
                              const TransportConfig& cfg, int quadrature_order) {
  std::vector<double> nodes, weights;
  gauss_legendre(quadrature_order, nodes, weights);
  const StateAction action = matrix_action(a, state_cols);
  std::vector<double> dev(grid.size(), 0.0);
  parallel_for(static_cast<long>(grid.size()), cfg.threads, [&](long gi) {
    const BoundaryCoordinate& b = grid[static_cast<std::size_t>(gi)];
    check_influx(b);
    const PhasePoint p = influx_point(b);
    const double tau = exit_time(m, p, 1.0, cfg.integrator);
    Mat integral = zeros(a.n(), state_cols);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double t = nodes[q] * tau;
      const PhasePoint pt = geodesic_flow(m, p, t, cfg.integrator);
      const Mat rinv = inverse(integrating_factor_at(m, a, pt, cfg.integrator));
      integral += (weights[q] * tau) * (rinv * f(pt.x1, pt.x2, pt.theta));
    }
    const Mat formula = integrating_factor_at(m, a, p, cfg.integrator) * integral;
    const Mat direct = transport_solution(m, action, f, p, cfg.integrator);
    dev[static_cast<std::size_t>(gi)] = rel_deviation(formula, direct);
  });
  return dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
}

}  // namespace naxray
