#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "json.hpp"
#include "naxray/errors.hpp"
#include "naxray/linalg.hpp"

namespace naxray {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Reduce an angle to (-pi, pi].
inline double wrap_signed(double a) {
  double r = wrap_angle(a);
  return r > kPi ? r - kTwoPi : r;
}

// ---------------------------------------------------------------------------
// Conformal metrics g = e^{2 lambda} dx^2 on the disc of radius 1 + epsilon.
// ---------------------------------------------------------------------------

enum class MetricFamily { euclidean, spherical, hyperbolic, bumps };

/// lambda, its gradient and Laplacian at one point.
struct MetricSample {
  double lambda = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double laplacian = 0.0;

  /// Gaussian curvature K = -e^{-2 lambda} * Laplacian(lambda).
  double curvature() const { return -std::exp(-2.0 * lambda) * laplacian; }
};

/// One Gaussian term of lambda: amplitude * exp(-|x - c|^2 / (2 width^2)).
struct Bump {
  double c1 = 0.0;
  double c2 = 0.0;
  double amplitude = 0.0;
  double width = 0.3;
};

class ConformalMetric {
 public:
  ConformalMetric() = default;

  static ConformalMetric euclidean(double epsilon = 0.1);
  /// e^{2 lambda} = 4 s^2 / (1 + s^2 |x|^2)^2, curvature +1.
  static ConformalMetric spherical(double scale = 0.5, double epsilon = 0.1);
  /// e^{2 lambda} = 4 s^2 / (1 - s^2 |x|^2)^2, curvature -1.
  static ConformalMetric hyperbolic(double scale = 0.5, double epsilon = 0.1);
  static ConformalMetric bumps(std::vector<Bump> terms, double epsilon = 0.1);
  /// Seeded bumps with centres in |c| <= 0.7 and |amplitude| <= amplitude_cap.
  static ConformalMetric random_bumps(std::uint64_t seed, int count = 3,
                                      double amplitude_cap = 0.15, double width = 0.35,
                                      double epsilon = 0.1);

  /// {"family": ..., "params": {...}, "epsilon": e, "seed": s}
  static ConformalMetric from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  MetricFamily family() const { return family_; }
  double scale() const { return scale_; }
  double epsilon() const { return epsilon_; }
  double engulf_radius() const { return 1.0 + epsilon_; }
  const std::vector<Bump>& bump_terms() const { return bumps_; }

  /// Same closed form with a different engulfing margin.
  ConformalMetric with_epsilon(double epsilon) const;

  /// Checked evaluation; throws DomainError outside the engulfing disc.
  MetricSample eval(double x1, double x2) const;

  /// Unchecked evaluation used inside integrators.
  MetricSample sample(double x1, double x2) const noexcept {
    MetricSample s;
    switch (family_) {
      case MetricFamily::euclidean:
        break;
      case MetricFamily::spherical:
      case MetricFamily::hyperbolic: {
        const double sign = family_ == MetricFamily::spherical ? 1.0 : -1.0;
        const double s2 = scale_ * scale_;
        const double den = 1.0 + sign * s2 * (x1 * x1 + x2 * x2);
        s.lambda = std::log(2.0 * scale_) - std::log(den);
        s.d1 = -2.0 * sign * s2 * x1 / den;
        s.d2 = -2.0 * sign * s2 * x2 / den;
        s.laplacian = -4.0 * sign * s2 / (den * den);
        break;
      }
      case MetricFamily::bumps:
        for (const auto& b : bumps_) {
          const double dx = x1 - b.c1;
          const double dy = x2 - b.c2;
          const double w2 = b.width * b.width;
          const double g = b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * w2));
          s.lambda += g;
          s.d1 += -g * dx / w2;
          s.d2 += -g * dy / w2;
          s.laplacian += g * ((dx * dx + dy * dy) / (w2 * w2) - 2.0 / w2);
        }
        break;
    }
    return s;
  }

  double lambda(double x1, double x2) const noexcept { return sample(x1, x2).lambda; }

 private:
  MetricFamily family_ = MetricFamily::euclidean;
  double scale_ = 1.0;
  double epsilon_ = 0.1;
  std::uint64_t seed_ = 0;
  std::vector<Bump> bumps_;
};

// ---------------------------------------------------------------------------
// Points of SM and of the influx boundary.
// ---------------------------------------------------------------------------

struct PhasePoint {
  double x1 = 0.0;
  double x2 = 0.0;
  double theta = 0.0;

  PhasePoint() = default;
  PhasePoint(double a, double b, double t) : x1(a), x2(b), theta(wrap_angle(t)) {}

  double radius() const { return std::hypot(x1, x2); }
  /// Same base point, opposite direction.
  PhasePoint reversed() const { return {x1, x2, theta + kPi}; }
};

/// Boundary point x(beta) = (cos beta, sin beta); mu is the angle of the
/// direction measured from the inward normal (influx) or from the outward
/// normal (outflux), counterclockwise positive.
struct BoundaryCoordinate {
  double beta = 0.0;
  double mu = 0.0;
};

/// Influx coordinate -> phase point; direction angle beta + pi + mu.
inline PhasePoint influx_point(const BoundaryCoordinate& b) {
  return {std::cos(b.beta), std::sin(b.beta), b.beta + kPi + b.mu};
}

/// Phase point on the boundary (pointing out) -> outflux coordinate.
inline BoundaryCoordinate outflux_coordinate(const PhasePoint& p) {
  const double beta = wrap_angle(std::atan2(p.x2, p.x1));
  return {beta, wrap_signed(p.theta - beta)};
}

/// Reversing an outflux vector gives an influx vector with the same
/// coordinates under the conventions above.
inline PhasePoint outflux_point(const BoundaryCoordinate& b) {
  return {std::cos(b.beta), std::sin(b.beta), b.beta + b.mu};
}

// ---------------------------------------------------------------------------
// Fixed-step RK4 for the geodesic flow, optionally carrying a matrix state.
// ---------------------------------------------------------------------------

struct IntegratorConfig {
  double step = 1e-3;
  double root_tol = 1e-10;
  /// Integration budget for exit-time searches (non-trapping guard).
  double max_time = 20.0;
};

struct FlowRate {
  double x1, x2, theta;
};

/// The geodesic vector field X in (x, theta) coordinates.
inline FlowRate geodesic_rate(const ConformalMetric& m, double x1, double x2, double theta) {
  const MetricSample s = m.sample(x1, x2);
  const double e = std::exp(-s.lambda);
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  return {e * c, e * sn, e * (-s.d1 * sn + s.d2 * c)};
}

namespace detail {

/// Stage point without angle reduction (keeps RK stages smooth).
struct RawPoint {
  double x1, x2, theta;
};

inline RawPoint advance_point(const RawPoint& p, const FlowRate& k, double h) {
  return {p.x1 + h * k.x1, p.x2 + h * k.x2, p.theta + h * k.theta};
}

inline PhasePoint to_phase(const RawPoint& p) { return {p.x1, p.x2, p.theta}; }

}  // namespace detail

/// One classical RK4 step of size h for the flow alone.
inline void rk4_flow_step(const ConformalMetric& m, PhasePoint& p, double h) {
  using detail::RawPoint;
  const RawPoint p0{p.x1, p.x2, p.theta};
  const FlowRate k1 = geodesic_rate(m, p0.x1, p0.x2, p0.theta);
  const RawPoint p2 = detail::advance_point(p0, k1, 0.5 * h);
  const FlowRate k2 = geodesic_rate(m, p2.x1, p2.x2, p2.theta);
  const RawPoint p3 = detail::advance_point(p0, k2, 0.5 * h);
  const FlowRate k3 = geodesic_rate(m, p3.x1, p3.x2, p3.theta);
  const RawPoint p4 = detail::advance_point(p0, k3, h);
  const FlowRate k4 = geodesic_rate(m, p4.x1, p4.x2, p4.theta);
  p = PhasePoint(p0.x1 + h / 6.0 * (k1.x1 + 2 * k2.x1 + 2 * k3.x1 + k4.x1),
                 p0.x2 + h / 6.0 * (k1.x2 + 2 * k2.x2 + 2 * k3.x2 + k4.x2),
                 p0.theta + h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta));
}

/// One RK4 step of the joint system (flow, y' = rhs(point, y)).
template <class Rhs>
void rk4_joint_step(const ConformalMetric& m, PhasePoint& p, Mat& y, double h, const Rhs& rhs) {
  using detail::RawPoint;
  const RawPoint p0{p.x1, p.x2, p.theta};
  const FlowRate k1 = geodesic_rate(m, p0.x1, p0.x2, p0.theta);
  const Mat y1 = rhs(detail::to_phase(p0), y);
  const RawPoint p2 = detail::advance_point(p0, k1, 0.5 * h);
  const FlowRate k2 = geodesic_rate(m, p2.x1, p2.x2, p2.theta);
  const Mat y2 = rhs(detail::to_phase(p2), Mat(y + (0.5 * h) * y1));
  const RawPoint p3 = detail::advance_point(p0, k2, 0.5 * h);
  const FlowRate k3 = geodesic_rate(m, p3.x1, p3.x2, p3.theta);
  const Mat y3 = rhs(detail::to_phase(p3), Mat(y + (0.5 * h) * y2));
  const RawPoint p4 = detail::advance_point(p0, k3, h);
  const FlowRate k4 = geodesic_rate(m, p4.x1, p4.x2, p4.theta);
  const Mat y4 = rhs(detail::to_phase(p4), Mat(y + h * y3));
  p = PhasePoint(p0.x1 + h / 6.0 * (k1.x1 + 2 * k2.x1 + 2 * k3.x1 + k4.x1),
                 p0.x2 + h / 6.0 * (k1.x2 + 2 * k2.x2 + 2 * k3.x2 + k4.x2),
                 p0.theta + h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta));
  y += (h / 6.0) * (y1 + 2.0 * y2 + 2.0 * y3 + y4);
}

struct NoObserver {
  void operator()(double, const PhasePoint&, const Mat&) const {}
};

/// Integrates the joint system for time t (either sign) in ceil(|t|/h)
/// equal steps. Throws FlowEscapeError if the trajectory leaves the
/// engulfing disc.
template <class Rhs, class Observer = NoObserver>
void integrate_joint(const ConformalMetric& m, PhasePoint& p, Mat& y, double t,
                     const IntegratorConfig& cfg, const Rhs& rhs, const Observer& obs = {}) {
  if (t == 0.0) return;
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / cfg.step - 1e-9)));
  const double h = t / static_cast<double>(steps);
  const double limit = m.engulf_radius() * (1.0 + 1e-12);
  for (long i = 0; i < steps; ++i) {
    rk4_joint_step(m, p, y, h, rhs);
    if (p.radius() > limit) {
      throw FlowEscapeError("trajectory left the engulfing disc", (i + 1) * h);
    }
    obs((i + 1) * h, p, y);
  }
}

inline void integrate_flow(const ConformalMetric& m, PhasePoint& p, double t,
                           const IntegratorConfig& cfg) {
  if (t == 0.0) return;
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / cfg.step - 1e-9)));
  const double h = t / static_cast<double>(steps);
  const double limit = m.engulf_radius() * (1.0 + 1e-12);
  for (long i = 0; i < steps; ++i) {
    rk4_flow_step(m, p, h);
    if (p.radius() > limit) {
      throw FlowEscapeError("trajectory left the engulfing disc", (i + 1) * h);
    }
  }
}

namespace detail {

/// True if p sits on (or outside) the circle of the given radius and points
/// outward, so the exit time is zero.
inline bool exits_immediately(const ConformalMetric& m, const PhasePoint& p, double radius) {
  const double r = p.radius();
  if (r < radius * (1.0 - 1e-13)) return false;
  const FlowRate k = geodesic_rate(m, p.x1, p.x2, p.theta);
  return p.x1 * k.x1 + p.x2 * k.x2 >= 0.0;
}

/// Bisection for the crossing time inside one step of size h from p0.
inline double bisect_crossing(const ConformalMetric& m, const PhasePoint& p0, double h,
                              double radius, double tol) {
  double lo = 0.0;
  double hi = h;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    PhasePoint q = p0;
    rk4_flow_step(m, q, mid);
    if (q.radius() > radius) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Integrates the joint system until |x| reaches `radius`; leaves p, y at the
/// crossing and returns the crossing time. Dense fixed stepping, then
/// bisection of the crossing step to cfg.root_tol.
template <class Rhs, class Observer = NoObserver>
double integrate_joint_to_exit(const ConformalMetric& m, PhasePoint& p, Mat& y, double radius,
                               const IntegratorConfig& cfg, const Rhs& rhs,
                               const Observer& obs = {}) {
  if (detail::exits_immediately(m, p, radius)) return 0.0;
  const double h = cfg.step;
  double t = 0.0;
  while (t < cfg.max_time) {
    PhasePoint q = p;
    rk4_flow_step(m, q, h);
    if (q.radius() > radius) {
      const double s = detail::bisect_crossing(m, p, h, radius, cfg.root_tol);
      rk4_joint_step(m, p, y, s, rhs);
      obs(t + s, p, y);
      return t + s;
    }
    rk4_joint_step(m, p, y, h, rhs);
    t += h;
    obs(t, p, y);
  }
  throw NonTrappingError("integration budget exceeded before reaching the boundary");
}

/// Flow-only exit search; leaves p at the crossing.
inline double integrate_flow_to_exit(const ConformalMetric& m, PhasePoint& p, double radius,
                                     const IntegratorConfig& cfg) {
  if (detail::exits_immediately(m, p, radius)) return 0.0;
  const double h = cfg.step;
  double t = 0.0;
  while (t < cfg.max_time) {
    PhasePoint q = p;
    rk4_flow_step(m, q, h);
    if (q.radius() > radius) {
      const double s = detail::bisect_crossing(m, p, h, radius, cfg.root_tol);
      rk4_flow_step(m, p, s);
      return t + s;
    }
    p = q;
    t += h;
  }
  throw NonTrappingError("integration budget exceeded before reaching the boundary");
}

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// Checked metric evaluation: (lambda, grad lambda, K).
struct MetricValues {
  double lambda;
  double d1;
  double d2;
  double curvature;
};
MetricValues eval_metric(const ConformalMetric& m, double x1, double x2);

PhasePoint geodesic_flow(const ConformalMetric& m, const PhasePoint& p, double t,
                         const IntegratorConfig& cfg = {});

/// Exit time from the disc of the given radius (1 for tau, 1+eps for tau_0).
double exit_time(const ConformalMetric& m, const PhasePoint& p, double radius,
                 const IntegratorConfig& cfg = {});

/// Rejection threshold for glancing influx directions.
inline constexpr double kGlancingTolerance = 1e-3;

/// Outflux coordinate of the exit point of the geodesic with influx
/// coordinate b.
BoundaryCoordinate scattering_relation(const ConformalMetric& m, const BoundaryCoordinate& b,
                                       const IntegratorConfig& cfg = {});

struct SimplicityBudget {
  int n_beta = 24;
  int n_mu = 12;
  int n_boundary = 64;
  double glancing_margin = 0.02;
  IntegratorConfig integrator{2e-3, 1e-10, 20.0};
};

struct SimplicityReport {
  bool non_trapping = true;
  double max_exit_time = 0.0;
  bool strictly_convex = true;
  double min_boundary_curvature = 0.0;
  bool no_conjugate_points = true;
  /// Smallest terminal Jacobi modulus b(tau) over the sampled geodesics.
  double min_jacobi = 0.0;
  int geodesics_sampled = 0;
  int boundary_points_sampled = 0;

  bool simple() const { return non_trapping && strictly_convex && no_conjugate_points; }
  nlohmann::json to_json() const;
};

/// Geodesic curvature of the unit circle: e^{-lambda} (1 + d_r lambda).
double boundary_geodesic_curvature(const ConformalMetric& m, double beta);

SimplicityReport validate_simplicity(const ConformalMetric& m, const SimplicityBudget& budget = {});

/// Beta-major tensor grid on the influx boundary.
std::vector<BoundaryCoordinate> influx_grid(int n_beta, int n_mu, double glancing_margin);

}  // namespace naxray
