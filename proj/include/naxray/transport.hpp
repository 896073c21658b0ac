#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "naxray/attenuation.hpp"
#include "naxray/fiber.hpp"
#include "naxray/geometry.hpp"

namespace naxray {

struct TransportConfig {
  IntegratorConfig integrator{};
  int threads = 1;
};

/// Linear action y -> A(p) y of an attenuation on transport states.
struct StateAction {
  int n = 1;     // attenuation size
  int rows = 1;  // state shape
  int cols = 1;
  std::function<Mat(const PhasePoint&, const Mat&)> apply;
};

/// Matrix times state; cols = 1 for vector states, n for matrix states.
StateAction matrix_action(const AttenuationField& a, int cols);
/// E(A, B) Y = A Y - Y B on n x n states.
StateAction endomorphism_action(const AttenuationField& a, const AttenuationField& b);

/// C(p, t): d/dt C + A(phi_t p) C = 0, C(p, 0) = Id. Negative t integrates
/// backwards.
Mat solve_cocycle(const ConformalMetric& m, const AttenuationField& a, const PhasePoint& p,
                  double t, const IntegratorConfig& cfg = {});

/// max over `samples` seeded draws (|x| <= 0.5, |t|, |s| <= 0.25) of
/// ||C(p, t + s) - C(phi_t p, s) C(p, t)|| / max(1, ||C(p, t + s)||).
double cocycle_residual(const ConformalMetric& m, const AttenuationField& a, int samples,
                        std::uint64_t seed, const IntegratorConfig& cfg = {});

enum class Side { plus, minus };
std::string to_string(Side s);

/// U along the geodesic from the influx point b, sampled at the integrator
/// nodes, with t increasing from 0 to tau.
struct TransportPath {
  Side side = Side::plus;
  double tau = 0.0;
  std::vector<double> t;
  std::vector<PhasePoint> points;
  std::vector<Mat> U;
  /// max ||dU/dt + A U|| / max(1, ||U||) on interior nodes (4th-order
  /// differences of the stored samples).
  double ode_residual = 0.0;
};

/// side = plus: X U + A U = 0 with U = Id at the exit point.
/// side = minus: the same equation with U = Id at the influx point.
TransportPath fundamental_solution(const ConformalMetric& m, const AttenuationField& a,
                                   const BoundaryCoordinate& b, Side side,
                                   const IntegratorConfig& cfg = {});

/// U_+ at the influx point of b, i.e. C_{A,+}(b).
Mat scattering_value(const ConformalMetric& m, const AttenuationField& a,
                     const BoundaryCoordinate& b, const IntegratorConfig& cfg = {});

/// Influx-grid layout shared by boundary tables.
struct BoundaryGrid {
  int n_beta = 64;
  int n_mu = 32;
  double glancing_margin = 0.05;

  std::vector<BoundaryCoordinate> coordinates() const {
    return influx_grid(n_beta, n_mu, glancing_margin);
  }
};

struct GeodesicFailure {
  BoundaryCoordinate b;
  std::string what;
};

struct ScatteringData {
  Side side = Side::plus;
  int n = 1;
  BoundaryGrid layout;
  std::vector<BoundaryCoordinate> grid;
  std::vector<Mat> values;
  std::vector<double> condition;
  std::vector<GeodesicFailure> failures;

  double max_cond() const;
  /// Throws Error listing the failed coordinates, if any.
  void throw_if_failed() const;
  /// beta, mu, re_C_i_j, im_C_i_j (row-major entries), beta-major rows.
  void write_csv(std::ostream& os) const;
  /// {"n", "grid": [n_beta, n_mu], "max_cond", "side"}
  nlohmann::json summary() const;
};

/// side = plus: C_{A,+} on the influx grid. side = minus: C_{A,-} on the
/// outflux grid with the same coordinates.
ScatteringData scattering_data(const ConformalMetric& m, const AttenuationField& a,
                               const BoundaryGrid& grid, const TransportConfig& cfg = {},
                               Side side = Side::plus);

/// max over the grid of ||C_-(e) - C_+(alpha(e))^{-1}|| / max(1, ||C_-||),
/// with C_+ solved directly at alpha(e).
double scattering_minus_check(const ConformalMetric& m, const AttenuationField& a,
                              const BoundaryGrid& grid, const TransportConfig& cfg = {});

/// Source term f(x, theta) with values shaped like the transport state.
using Source = std::function<Mat(double x1, double x2, double theta)>;

/// u^f at p: X u + A u = -f, u = 0 at the exit point of the geodesic through p.
Mat transport_solution(const ConformalMetric& m, const StateAction& action, const Source& f,
                       const PhasePoint& p, const IntegratorConfig& cfg = {});

/// u^f sampled on an SM grid (one solve per node).
FiberFunction transport_solution_grid(const ConformalMetric& m, const StateAction& action,
                                      const Source& f, const SMGrid& grid,
                                      const TransportConfig& cfg = {});

/// I_A f = u^f at the influx points of the grid.
std::vector<Mat> attenuated_transform(const ConformalMetric& m, const StateAction& action,
                                      const Source& f, const std::vector<BoundaryCoordinate>& grid,
                                      const TransportConfig& cfg = {});

/// R(p) = C(p, tau_0(p))^{-1}, tau_0 the exit time from the engulfing disc.
Mat integrating_factor_at(const ConformalMetric& m, const AttenuationField& a, const PhasePoint& p,
                          const IntegratorConfig& cfg = {});

FiberFunction integrating_factor(const ConformalMetric& m, const AttenuationField& a,
                                 const SMGrid& grid, const TransportConfig& cfg = {});

/// ||X R + A R||_inf / max(1, ||R||_inf) on rings up to ring_limit, with X
/// applied on the grid.
double integrating_factor_grid_residual(const FiberFunction& R, const AttenuationField& a,
                                        int ring_limit);

/// Same residual at individual points, X by central flow differencing with
/// step h and R evaluated directly at the shifted points.
double integrating_factor_flow_residual(const ConformalMetric& m, const AttenuationField& a,
                                        const std::vector<PhasePoint>& points, double h,
                                        const IntegratorConfig& cfg = {});

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Compares R(p) * int_0^tau (R^{-1} f)(phi_t p) dt (R evaluated directly at
/// Gauss-Legendre nodes) with attenuated_transform; matrix action only.
/// Returns the max relative deviation.
double integral_formula_check(const ConformalMetric& m, const AttenuationField& a,
                              const Source& f, int state_cols,
                              const std::vector<BoundaryCoordinate>& grid,
                              const TransportConfig& cfg = {}, int quadrature_order = 32);

}  // namespace naxray
