#pragma once

#include <functional>
#include <vector>

#include "json.hpp"
#include "naxray/attenuation.hpp"
#include "naxray/fiber.hpp"

namespace naxray {

/// n x n matrices sampled at theta_k = 2 pi k / N.
class MatrixLoop {
 public:
  MatrixLoop() = default;
  explicit MatrixLoop(std::vector<Mat> samples);

  static MatrixLoop sample(int n_theta, const std::function<Mat(double)>& f);
  /// Inverse of coefficients(): c[k mod N] is the coefficient of e^{ik theta}.
  static MatrixLoop from_coefficients(const std::vector<Mat>& c);

  int size() const { return static_cast<int>(samples_.size()); }
  int n() const { return samples_.empty() ? 0 : static_cast<int>(samples_[0].rows()); }
  const Mat& operator[](int k) const { return samples_[static_cast<std::size_t>(k)]; }
  Mat& operator[](int k) { return samples_[static_cast<std::size_t>(k)]; }
  const std::vector<Mat>& samples() const { return samples_; }

  std::vector<Mat> coefficients() const;
  double min_abs_det() const;
  /// Fraction of Fourier energy in modes k < 0 (Nyquist counted negative).
  double negative_mode_ratio() const;
  double positive_mode_ratio() const;

  MatrixLoop adjoint() const;
  MatrixLoop inverse() const;
  MatrixLoop transpose() const;
  /// theta -> -theta.
  MatrixLoop reflected() const;

 private:
  std::vector<Mat> samples_;
};

MatrixLoop operator*(const MatrixLoop& a, const MatrixLoop& b);
MatrixLoop operator*(const MatrixLoop& a, const Mat& b);
double max_deviation(const MatrixLoop& a, const MatrixLoop& b);

struct SpectralFactorStats {
  int iterations = 0;
  double residual = 0.0;  // ||F F^* - S||_inf / ||S||_inf at the samples
};

/// F with F F^* = S, F and F^{-1} without negative modes, mode-0
/// coefficient lower triangular with positive diagonal. Newton (Wilson)
/// iteration with the iterate truncated to modes [0, N/2].
MatrixLoop spectral_factor(const MatrixLoop& S, double tol = 1e-13, int max_iter = 60,
                           SpectralFactorStats* stats = nullptr);

struct FiberFactorization {
  MatrixLoop F;
  MatrixLoop U;
  double recon = 0.0;    // ||F U - R||_inf
  double holF = 0.0;     // negative-mode ratio of F
  double holFinv = 0.0;  // negative-mode ratio of F^{-1}
  double unitU = 0.0;    // ||U^* U - Id||_inf
  double normU = 0.0;    // ||U(0) - Id||_inf
  int iterations = 0;
};

/// R = F U with F holomorphic with holomorphic inverse and U unitary,
/// U(theta = 0) = Id.
FiberFactorization factorize_fiber(const MatrixLoop& R, double tol = 1e-13, int max_iter = 60);

struct FactorizationOptions {
  double tol = 1e-13;
  int max_iter = 60;
  int threads = 1;
  /// Fibre-to-fibre jump ratio (max / median) above which a spike is flagged.
  double spike_factor = 50.0;
};

struct FactorizationResult {
  FiberFunction F;
  FiberFunction U;
  double recon_res = 0.0;
  double holF = 0.0;
  double holFinv = 0.0;
  double unitU = 0.0;
  double normU = 0.0;
  double max_gradient = 0.0;  // max |d F / dx| on the interior rings
  double jump_ratio = 0.0;    // max / median radial neighbour jump of F
  bool spike = false;
  int max_iterations = 0;

  nlohmann::json diagnostics() const;
};

/// Fibrewise factorization over the SM grid.
FactorizationResult factorize(const FiberFunction& R, const FactorizationOptions& opt = {});
/// Anti-holomorphic version, via theta -> -theta.
FactorizationResult anti_factorize(const FiberFunction& R, const FactorizationOptions& opt = {});

MatrixLoop fiber_loop(const FiberFunction& u, int i, int j);
void set_fiber_loop(FiberFunction& u, int i, int j, const MatrixLoop& loop);

struct TransformResult {
  FiberFunction B;        // -(X U) U^{-1}
  FiberFunction B_route;  // F^{-1} X F + F^{-1} A F
  double route_deviation = 0.0;
  double skew_defect = 0.0;   // ||B + B^*||_inf
  double outband = 0.0;       // energy ratio of modes |k| >= 2
  double mode_pairing = 0.0;  // max(||B_{-1}^* + B_1||, ||B_0^* + B_0||)
  int ring_limit = 0;

  /// Coefficient fields of modes -1, 0, 1 as an attenuation.
  AttenuationField attenuation() const;
};

/// Computes B from the factorization of an integrating factor of A.
/// Deviations are measured on rings <= ring_limit (default: the last ring
/// with central stencils). Throws InconsistencyError if the two routes
/// differ by more than cross_tol.
TransformResult transform_attenuation(const AttenuationField& a, const FactorizationResult& fact,
                                      double cross_tol = 1e-4, int ring_limit = -1);

struct ModeEquationResiduals {
  double res_minus1 = 0.0;  // eta_- F_0 + A_{-1} F_0 - F_0 B_{-1}
  double res_0 = 0.0;       // eta_- F_1 + A_{-1} F_1 + A_0 F_0 - F_1 B_{-1} - F_0 B_0
  double b_minus1_dev = 0.0;
  double b_0_dev = 0.0;
  FiberFunction B_minus1;   // solved from the equations
  FiberFunction B_0;
};

/// Throws DegeneracyError if F_0 is singular at a grid point.
ModeEquationResiduals mode_equation_residuals(const AttenuationField& a, const FiberFunction& F,
                                              const FiberFunction& B, int ring_limit = -1);

}  // namespace naxray
