#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "naxray/attenuation.hpp"
#include "naxray/loop.hpp"
#include "naxray/transport.hpp"

namespace naxray {

/// Matrix field u on M with u = Id on the unit circle, and its differential.
struct GaugeElement {
  int n = 1;
  MatrixField u;
  MatrixField du1;
  MatrixField du2;

  static GaugeElement identity(int n);
  /// u = Id + (1 - |x|^2)^2 P(x).
  static GaugeElement polynomial(const PolyMatrix& P);
  /// n = 1: u = exp((1 - |x|^2) s(x)).
  static GaugeElement exp_scalar(const PolyMatrix& s);
  /// polynomial() with a random gl(n) coefficient matrix polynomial.
  static GaugeElement random(int n, std::uint64_t seed, int degree = 2, double amplitude = 0.3);

  /// Max ||u - Id|| over `samples` points of the unit circle.
  double boundary_defect(int samples = 64) const;
};

/// Pointwise product (u w)(x), with d(uw) = du w + u dw.
GaugeElement operator*(const GaugeElement& u, const GaugeElement& w);

/// (A, Phi) . u = (u^{-1} du + u^{-1} A u, u^{-1} Phi u). Throws InputError
/// if u is numerically singular somewhere on the closed disc.
PairAttenuation gauge_apply(const PairAttenuation& pair, const GaugeElement& u);

/// Max relative deviation between the scattering data of pair and pair . u.
double gauge_invariance_check(const ConformalMetric& m, const PairAttenuation& pair,
                              const GaugeElement& u, const BoundaryGrid& grid,
                              const TransportConfig& cfg = {});

struct PseudoLinearization {
  double residual = 0.0;  // max ||C_A C_B^{-1} - Id - I_E(A - B)|| / max(1, ||C_A C_B^{-1}||)
  std::vector<Mat> lhs;   // C_A C_B^{-1}
  std::vector<Mat> rhs;   // Id + I_E(A - B)
};

PseudoLinearization pseudo_linearization(const ConformalMetric& m, const AttenuationField& a,
                                         const AttenuationField& b, const BoundaryGrid& grid,
                                         const TransportConfig& cfg = {});

inline double pseudo_linearization_residual(const ConformalMetric& m, const AttenuationField& a,
                                            const AttenuationField& b, const BoundaryGrid& grid,
                                            const TransportConfig& cfg = {}) {
  return pseudo_linearization(m, a, b, grid, cfg).residual;
}

// ---------------------------------------------------------------------------
// Gauge reconstruction from matching scattering data.
// ---------------------------------------------------------------------------

struct ReconstructionOptions {
  double input_tol = 1e-6;        // declared "equal data" tolerance (relative)
  double fiber_threshold = 1e-4;  // unreliable above this
  double gauge_threshold = 1e-3;  // pair . u vs pair B
  double transport_threshold = 1e-4;
  double planted_threshold = 1e-3;
  int ring_limit = -1;            // -1: last ring with central stencils
};

struct GaugeReconstruction {
  std::string verdict;  // "pass" | "fail" | "not-equivalent"
  bool unreliable = false;
  double scattering_mismatch = 0.0;
  double fiber_defect = 0.0;        // L2 energy of W outside mode 0, relative
  double gauge_defect = 0.0;        // sup of (A,Phi).u - (B,Psi) on the grid
  double transport_residual = 0.0;  // sup of XW + AW - WB + (A - B)
  double identity_defect = 0.0;     // sup ||u - Id||
  std::optional<double> planted_error;
  FiberFunction W;
  FiberFunction u;                  // W_0 + Id, constant along fibres
  FiberFunction error_field;        // |u - planted| per node (planted runs only)

  nlohmann::json defects() const;
};

/// W = U_A U_B^{-1} - Id on the SM grid from per-point solves to the exit,
/// u = W_0 + Id. If `planted` is given its sup-distance to u is reported.
GaugeReconstruction reconstruct_gauge(const ConformalMetric& m, const PairAttenuation& pair_a,
                                      const PairAttenuation& pair_b, const SMGrid& grid,
                                      const BoundaryGrid& boundary, const TransportConfig& cfg = {},
                                      const ReconstructionOptions& opt = {},
                                      const GaugeElement* planted = nullptr);

// ---------------------------------------------------------------------------
// Planted kernel elements of the attenuated transform.
// ---------------------------------------------------------------------------

struct PlantedLinearKernel {
  int n = 1;
  PolyMatrix q;  // p = (1 - |x|^2)^2 q
  Mat p(double x1, double x2) const;
  Mat dp1(double x1, double x2) const;
  Mat dp2(double x1, double x2) const;
  /// f = Phi p + dp(v) + A(v) p.
  Source source(const ConformalMetric& m, const PairAttenuation& pair) const;
};

struct KernelReport {
  double transform_sup = 0.0;      // ||I_{A,Phi} f|| on the influx grid
  double solution_error = 0.0;     // ||u^f + p|| on the SM grid
  double holomorphic = 0.0;        // holomorphicity ratio of u^f
  double antiholomorphic = 0.0;    // holomorphicity ratio of conj(u^f)
  double mode_band = 0.0;          // energy of f outside modes -1..1
  FiberFunction solution;
  FiberFunction error_field;

  nlohmann::json defects() const;
};

KernelReport plant_linear_kernel(const ConformalMetric& m, const PairAttenuation& pair,
                                 const PlantedLinearKernel& kernel, const SMGrid& grid,
                                 const BoundaryGrid& boundary, const TransportConfig& cfg = {});

// ---------------------------------------------------------------------------
// Unitarity and subgroups.
// ---------------------------------------------------------------------------

struct UnitarityReport {
  double unitarity_defect = 0.0;   // max ||C^* C - Id||
  double skew_defect = 0.0;        // max ||Phi + Phi^*|| over disc samples
  double identity_residual = 0.0;  // max ||C_Phi^* - C_{-Phi^*}^{-1}|| / max(1, ||C||)
  bool unitary() const { return unitarity_defect < 1e-7; }
  nlohmann::json defects() const;
};

/// A = 0, Higgs field Phi.
UnitarityReport unitarity_criterion(const ConformalMetric& m, int n, const MatrixField& phi,
                                    const BoundaryGrid& grid, const TransportConfig& cfg = {});

struct SubgroupReport {
  Algebra algebra = Algebra::gl;
  double group_defect = 0.0;  // U(n): ||C^*C - Id||, SO(n): ||C^T C - Id||, SL(n): |det - 1|
  double real_defect = 0.0;   // SO(n) only: max |Im C|
  double det_defect = 0.0;    // SU(n) and SL(n)
  nlohmann::json defects() const;
};

/// Throws InputError naming the worst sample if the pair leaves the
/// subalgebra (u, su, so or sl).
SubgroupReport subgroup_preservation(const ConformalMetric& m, const PairAttenuation& pair,
                                     Algebra algebra, const BoundaryGrid& grid,
                                     const TransportConfig& cfg = {});

// ---------------------------------------------------------------------------
// Conjugation of transforms by the holomorphic factor.
// ---------------------------------------------------------------------------

/// max over the influx grid of ||I_A f - F I_B(F^{-1} f)|| / max(1, ||I_A f||)
/// for vector sources f; F and B are interpolated from the grid.
double conjugation_residual(const ConformalMetric& m, const AttenuationField& a,
                            const FiberFunction& F, const AttenuationField& b, const Source& f,
                            const BoundaryGrid& grid, const TransportConfig& cfg = {});

/// Random n x 1 source with vertical modes -1, 0, 1 and polynomial
/// coefficients; cutoff m multiplies by (1 - |x|^2)_+^m.
Source random_mode_source(int n, std::uint64_t seed, int degree = 2, double amplitude = 0.5,
                          int cutoff = 0);

}  // namespace naxray
