#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "naxray/geometry.hpp"
#include "naxray/linalg.hpp"

namespace naxray {

/// Polar spatial grid (r_i = i/(n_r-1), phi_j = 2 pi j/n_phi) times a uniform
/// fibre grid theta_k = 2 pi k/n_theta.
struct SMGrid {
  int n_r = 64;
  int n_phi = 128;
  int n_theta = 256;

  double dr() const { return 1.0 / (n_r - 1); }
  double r(int i) const { return i * dr(); }
  double phi(int j) const { return kTwoPi * j / n_phi; }
  double theta(int k) const { return kTwoPi * k / n_theta; }
  int fibers() const { return n_r * n_phi; }
  /// Throws ParameterError unless n_theta is a power of two, n_phi a multiple
  /// of 4 and n_r >= 7.
  void validate() const;
  /// Last ring index where single-stencil outputs are central.
  int interior_ring_limit() const { return n_r - 4; }

  bool operator==(const SMGrid&) const = default;
};

using SMFunction = std::function<Mat(double x1, double x2, double theta)>;

/// Gridded function on SM with values in C^{rows x cols}.
class FiberFunction {
 public:
  FiberFunction() = default;
  FiberFunction(const SMGrid& grid, const ConformalMetric& metric, int rows, int cols);

  static FiberFunction sample(const SMGrid& grid, const ConformalMetric& metric, int rows,
                              int cols, const SMFunction& f);

  const SMGrid& grid() const { return grid_; }
  const ConformalMetric& metric() const { return metric_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int components() const { return rows_ * cols_; }

  std::size_t fiber_offset(int i, int j) const {
    return (static_cast<std::size_t>(i) * grid_.n_phi + j) * grid_.n_theta * components();
  }
  std::size_t offset(int i, int j, int k) const {
    return fiber_offset(i, j) + static_cast<std::size_t>(k) * components();
  }

  Mat at(int i, int j, int k) const;
  void set(int i, int j, int k, const Mat& value);

  std::vector<cd>& values() { return data_; }
  const std::vector<cd>& values() const { return data_; }

  FiberFunction& operator+=(const FiberFunction& o);
  FiberFunction& operator-=(const FiberFunction& o);
  FiberFunction& operator*=(cd s);

  /// Max-abs entry, optionally only over rings i <= ring_limit.
  double sup_norm(int ring_limit = -1) const;

 private:
  SMGrid grid_{};
  ConformalMetric metric_{};
  int rows_ = 1;
  int cols_ = 1;
  std::vector<cd> data_;
};

FiberFunction operator+(FiberFunction a, const FiberFunction& b);
FiberFunction operator-(FiberFunction a, const FiberFunction& b);
FiberFunction operator*(cd s, FiberFunction a);

/// Sample-wise matrix product, inverse, adjoint.
FiberFunction pointwise_product(const FiberFunction& a, const FiberFunction& b);
FiberFunction pointwise_inverse(const FiberFunction& a);
FiberFunction pointwise_adjoint(const FiberFunction& a);
/// Reflects the fibre variable: (x, theta) -> (x, -theta).
FiberFunction reflect_theta(const FiberFunction& a);

// ---------------------------------------------------------------------------
// Vertical Fourier analysis.
// ---------------------------------------------------------------------------

/// Per-fibre Fourier coefficients (same layout as the values) and per-mode
/// energy against dSigma^3. Mode k is stored at index k mod n_theta.
struct ModeSpectrum {
  SMGrid grid;
  int components = 1;
  std::vector<cd> coefficients;
  std::vector<double> energy;

  double energy_of(int k) const;
  double total() const;
};

ModeSpectrum mode_spectrum(const FiberFunction& u);

/// The k-th vertical Fourier component u_k (still a function on SM).
FiberFunction project_mode(const FiberFunction& u, int k);

/// Energy in modes k < 0 over total energy; 0 for the zero function.
double holomorphicity_ratio(const FiberFunction& u);
/// Energy in modes k > 0 over total energy.
double antiholomorphicity_ratio(const FiberFunction& u);
/// Energy in modes |k| > band over total energy.
double outside_band_ratio(const FiberFunction& u, int band);

// ---------------------------------------------------------------------------
// Frame operators. V is spectral in theta. Spatial derivatives are 7-point
// finite differences in r (reflected through the origin, one-sided closure
// at r = 1) and spectral in phi; the centre uses Cartesian line stencils.
// ---------------------------------------------------------------------------

/// Cartesian derivatives d/dx1, d/dx2 at fixed theta.
struct SpatialGradient {
  FiberFunction d1;
  FiberFunction d2;
};
SpatialGradient spatial_gradient(const FiberFunction& u);

FiberFunction apply_V(const FiberFunction& u);
FiberFunction apply_X(const FiberFunction& u);
FiberFunction apply_Xperp(const FiberFunction& u);
FiberFunction eta_plus(const FiberFunction& u);
FiberFunction eta_minus(const FiberFunction& u);

/// (u, v) = int_SM <u, v> dSigma^3. End-corrected trapezoid in r (exact for
/// polynomials of degree <= 7), spectral in both angles.
cd inner_product(const FiberFunction& u, const FiberFunction& v);

/// Quadrature weight of the spatial node (i, j) for dx1 dx2 (no e^{2 lambda}).
double spatial_weight(const SMGrid& grid, int i);

struct StructureResiduals {
  double xv_minus_xperp = 0.0;     // ||[X,V]u - X_perp u|| / ||u||
  double vxperp_minus_x = 0.0;     // ||[V,X_perp]u - X u|| / ||u||
  double xxperp_plus_kv = 0.0;     // ||[X,X_perp]u + K V u|| / ||u||
  double max() const;
};

/// Commutator identities on rings i <= n_r - 5, maximised over probes.
StructureResiduals check_structure_equations(const std::vector<FiberFunction>& probes);

// ---------------------------------------------------------------------------
// Off-grid evaluation: 6-point Lagrange in (r, phi), trigonometric in theta.
// ---------------------------------------------------------------------------

class FiberInterpolator {
 public:
  /// Modes whose coefficients never exceed mode_cutoff * max are dropped.
  explicit FiberInterpolator(const FiberFunction& u, double mode_cutoff = 1e-15);

  Mat operator()(double x1, double x2, double theta) const;
  int kept_modes() const { return static_cast<int>(modes_.size()); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  SMGrid grid_{};
  int rows_ = 1;
  int cols_ = 1;
  std::vector<int> modes_;
  // [fibre][kept mode][component]
  std::vector<cd> coeffs_;
};

// ---------------------------------------------------------------------------
// Export.
// ---------------------------------------------------------------------------

/// Columns r, phi, theta, re_0, im_0, re_1, im_1, ...; r-major, then phi,
/// then theta. Components are row-major matrix entries.
void write_csv(std::ostream& os, const FiberFunction& u);
/// "NXFF" magic, int32 n_r n_phi n_theta rows cols, then re/im doubles in the
/// CSV row order.
void write_binary(std::ostream& os, const FiberFunction& u);
FiberFunction read_binary(std::istream& is, const ConformalMetric& metric);

}  // namespace naxray
