#include "naxray/loop.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <sstream>

#include "naxray/fourier.hpp"
#include "naxray/parallel.hpp"

namespace naxray {

MatrixLoop::MatrixLoop(std::vector<Mat> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw ParameterError("empty loop");
  if (!fourier::is_power_of_two(size())) throw ParameterError("loop length must be a power of two");
}

MatrixLoop MatrixLoop::sample(int n_theta, const std::function<Mat(double)>& f) {
  std::vector<Mat> s(static_cast<std::size_t>(n_theta));
  for (int k = 0; k < n_theta; ++k) s[static_cast<std::size_t>(k)] = f(kTwoPi * k / n_theta);
  return MatrixLoop(std::move(s));
}

namespace {

/// Packs samples into (N, n*n) interleaved storage and transforms.
std::vector<cd> pack(const std::vector<Mat>& s) {
  const int n = static_cast<int>(s[0].rows());
  const int d = n * n;
  std::vector<cd> buf(s.size() * static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) buf[k * d + a * n + b] = s[k](a, b);
    }
  }
  return buf;
}

std::vector<Mat> unpack(const std::vector<cd>& buf, int N, int n) {
  const int d = n * n;
  std::vector<Mat> out(static_cast<std::size_t>(N), Mat(n, n));
  for (int k = 0; k < N; ++k) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) out[static_cast<std::size_t>(k)](a, b) = buf[static_cast<std::size_t>(k) * d + a * n + b];
    }
  }
  return out;
}

}  // namespace

std::vector<Mat> MatrixLoop::coefficients() const {
  const int N = size();
  const int n = this->n();
  std::vector<cd> buf = pack(samples_);
  fourier::transform(buf.data(), N, n * n, n * n, 1, -1);
  for (auto& v : buf) v /= static_cast<double>(N);
  return unpack(buf, N, n);
}

MatrixLoop MatrixLoop::from_coefficients(const std::vector<Mat>& c) {
  const int N = static_cast<int>(c.size());
  const int n = static_cast<int>(c[0].rows());
  std::vector<cd> buf = pack(c);
  fourier::transform(buf.data(), N, n * n, n * n, 1, +1);
  return MatrixLoop(unpack(buf, N, n));
}

double MatrixLoop::min_abs_det() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : samples_) m = std::min(m, std::abs(s.determinant()));
  return m;
}

namespace {

double mode_ratio(const MatrixLoop& l, bool negative) {
  const auto c = l.coefficients();
  const int N = l.size();
  double part = 0.0;
  double total = 0.0;
  for (int idx = 0; idx < N; ++idx) {
    const double e = c[static_cast<std::size_t>(idx)].squaredNorm();
    total += e;
    const int k = fourier::index_mode(idx, N);
    if (negative ? k < 0 : k > 0) part += e;
  }
  return total == 0.0 ? 0.0 : part / total;
}

}  // namespace

double MatrixLoop::negative_mode_ratio() const { return mode_ratio(*this, true); }
double MatrixLoop::positive_mode_ratio() const { return mode_ratio(*this, false); }

MatrixLoop MatrixLoop::adjoint() const {
  std::vector<Mat> s;
  s.reserve(samples_.size());
  for (const auto& m : samples_) s.emplace_back(m.adjoint());
  return MatrixLoop(std::move(s));
}

MatrixLoop MatrixLoop::inverse() const {
  std::vector<Mat> s;
  s.reserve(samples_.size());
  for (const auto& m : samples_) s.push_back(naxray::inverse(m));
  return MatrixLoop(std::move(s));
}

MatrixLoop MatrixLoop::transpose() const {
  std::vector<Mat> s;
  s.reserve(samples_.size());
  for (const auto& m : samples_) s.emplace_back(m.transpose());
  return MatrixLoop(std::move(s));
}

MatrixLoop MatrixLoop::reflected() const {
  const int N = size();
  std::vector<Mat> s(samples_.size());
  for (int k = 0; k < N; ++k) s[static_cast<std::size_t>(k)] = samples_[static_cast<std::size_t>((N - k) % N)];
  return MatrixLoop(std::move(s));
}

MatrixLoop operator*(const MatrixLoop& a, const MatrixLoop& b) {
  if (a.size() != b.size()) throw ParameterError("loop lengths differ");
  std::vector<Mat> s(static_cast<std::size_t>(a.size()));
  for (int k = 0; k < a.size(); ++k) s[static_cast<std::size_t>(k)] = a[k] * b[k];
  return MatrixLoop(std::move(s));
}

MatrixLoop operator*(const MatrixLoop& a, const Mat& b) {
  std::vector<Mat> s(static_cast<std::size_t>(a.size()));
  for (int k = 0; k < a.size(); ++k) s[static_cast<std::size_t>(k)] = a[k] * b;
  return MatrixLoop(std::move(s));
}

double max_deviation(const MatrixLoop& a, const MatrixLoop& b) {
  double d = 0.0;
  for (int k = 0; k < a.size(); ++k) d = std::max(d, sup_norm(a[k] - b[k]));
  return d;
}

// ---------------------------------------------------------------------------
// Wilson iteration
// ---------------------------------------------------------------------------

namespace {

double loop_sup(const MatrixLoop& l) {
  double s = 0.0;
  for (const auto& m : l.samples()) s = std::max(s, sup_norm(m));
  return s;
}

double factor_residual(const MatrixLoop& F, const MatrixLoop& S, double s_norm) {
  double r = 0.0;
  for (int k = 0; k < F.size(); ++k) r = std::max(r, sup_norm(F[k] * F[k].adjoint() - S[k]));
  return r / s_norm;
}

/// Keeps modes 1..N/2-1, half of the (self-adjoint) Nyquist mode and the
/// lower triangle of mode 0 with half its diagonal; zeroes the rest. Dropping
/// the Nyquist half entirely degrades Newton to linear convergence.
void causal_part(std::vector<Mat>& c) {
  const int N = static_cast<int>(c.size());
  const int n = static_cast<int>(c[0].rows());
  c[static_cast<std::size_t>(N / 2)] *= 0.5;
  for (int idx = N / 2 + 1; idx < N; ++idx) c[static_cast<std::size_t>(idx)].setZero();
  Mat& c0 = c[0];
  for (int a = 0; a < n; ++a) {
    c0(a, a) = 0.5 * c0(a, a).real();
    for (int b = a + 1; b < n; ++b) c0(a, b) = 0.0;
  }
}

void truncate_to_holomorphic(MatrixLoop& F) {
  auto c = F.coefficients();
  const int N = F.size();
  for (int idx = N / 2 + 1; idx < N; ++idx) c[static_cast<std::size_t>(idx)].setZero();
  F = MatrixLoop::from_coefficients(c);
}

}  // namespace

MatrixLoop spectral_factor(const MatrixLoop& S, double tol, int max_iter, SpectralFactorStats* stats) {
  const int N = S.size();
  const int n = S.n();
  if (N < 2) throw ParameterError("loop too short");
  for (int k = 0; k < N; ++k) {
    const Mat& s = S[k];
    if (sup_norm(s - s.adjoint()) > 1e-10 * std::max(1.0, sup_norm(s))) {
      throw InputError("spectral density is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    if (!(es.eigenvalues().minCoeff() > 0.0)) {
      std::ostringstream os;
      os << "spectral density is not positive definite at sample " << k;
      throw InputError(os.str());
    }
  }
  const double s_norm = loop_sup(S);

  Mat mean = zeros(n, n);
  for (const auto& s : S.samples()) mean += s;
  mean /= static_cast<double>(N);
  mean = 0.5 * (mean + mean.adjoint()).eval();
  const Mat L0 = Eigen::LLT<Mat>(mean).matrixL();
  MatrixLoop F(std::vector<Mat>(static_cast<std::size_t>(N), L0));

  double residual = factor_residual(F, S, s_norm);
  int it = 0;
  const Mat half = 0.5 * identity(n);
  while (residual > tol && it < max_iter) {
    ++it;
    std::vector<Mat> g(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      const Mat fi = naxray::inverse(F[k]);
      g[static_cast<std::size_t>(k)] = fi * S[k] * fi.adjoint();
    }
    auto c = MatrixLoop(std::move(g)).coefficients();
    causal_part(c);
    const MatrixLoop P = MatrixLoop::from_coefficients(c);
    std::vector<Mat> next(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) next[static_cast<std::size_t>(k)] = F[k] * (P[k] + half);
    MatrixLoop candidate(std::move(next));
    truncate_to_holomorphic(candidate);
    const double r = factor_residual(candidate, S, s_norm);
    if (!(r < 2.0 * residual) && it > 3) break;  // stagnated at round-off
    F = std::move(candidate);
    residual = r;
  }
  if (stats) *stats = {it, residual};
  if (!(residual <= tol)) {
    // Accept round-off stagnation a little above tol; fail otherwise.
    if (!(residual <= 100.0 * tol)) {
      throw ConvergenceError("spectral factorization did not converge", residual);
    }
  }
  return F;
}

FiberFactorization factorize_fiber(const MatrixLoop& R, double tol, int max_iter) {
  const int N = R.size();
  const int n = R.n();
  if (!(R.min_abs_det() > 0.0)) throw InputError("loop is singular at a sample");
  const MatrixLoop S = R * R.adjoint();
  SpectralFactorStats st;
  const MatrixLoop F0 = spectral_factor(S, tol, max_iter, &st);
  const Mat Q = naxray::inverse(F0[0]) * R[0];
  const double qdef = sup_norm(Q.adjoint() * Q - identity(n));
  if (qdef > 1e-8) {
    std::ostringstream os;
    os << "normalising factor is not unitary (defect " << qdef << ")";
    throw InconsistencyError(os.str());
  }
  FiberFactorization out;
  out.F = F0 * Q;
  const MatrixLoop Finv = out.F.inverse();
  out.U = Finv * R;
  out.recon = max_deviation(out.F * out.U, R);
  out.holF = out.F.negative_mode_ratio();
  out.holFinv = Finv.negative_mode_ratio();
  double ud = 0.0;
  for (int k = 0; k < N; ++k) ud = std::max(ud, sup_norm(out.U[k].adjoint() * out.U[k] - identity(n)));
  out.unitU = ud;
  out.normU = sup_norm(out.U[0] - identity(n));
  out.iterations = st.iterations;
  return out;
}

MatrixLoop fiber_loop(const FiberFunction& u, int i, int j) {
  std::vector<Mat> s(static_cast<std::size_t>(u.grid().n_theta));
  for (int k = 0; k < u.grid().n_theta; ++k) s[static_cast<std::size_t>(k)] = u.at(i, j, k);
  return MatrixLoop(std::move(s));
}

void set_fiber_loop(FiberFunction& u, int i, int j, const MatrixLoop& loop) {
  for (int k = 0; k < u.grid().n_theta; ++k) u.set(i, j, k, loop[k]);
}

nlohmann::json FactorizationResult::diagnostics() const {
  return {{"recon_res", recon_res},   {"holF", holF},     {"holFinv", holFinv},
          {"unitU", unitU},           {"normU", normU},   {"max_gradient", max_gradient},
          {"jump_ratio", jump_ratio}, {"spike", spike},   {"max_iterations", max_iterations}};
}

FactorizationResult factorize(const FiberFunction& R, const FactorizationOptions& opt) {
  if (R.rows() != R.cols()) throw ParameterError("factorization needs square values");
  const SMGrid& g = R.grid();
  FactorizationResult res;
  res.F = FiberFunction(g, R.metric(), R.rows(), R.cols());
  res.U = res.F;
  const long fibres = g.fibers();
  std::vector<FiberFactorization> diag(static_cast<std::size_t>(fibres));
  std::vector<std::string> errors(static_cast<std::size_t>(fibres));
  parallel_for(fibres, opt.threads, [&](long idx) {
    const int i = static_cast<int>(idx / g.n_phi);
    const int j = static_cast<int>(idx % g.n_phi);
    try {
      FiberFactorization f = factorize_fiber(fiber_loop(R, i, j), opt.tol, opt.max_iter);
      set_fiber_loop(res.F, i, j, f.F);
      set_fiber_loop(res.U, i, j, f.U);
      diag[static_cast<std::size_t>(idx)] = std::move(f);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "fibre (r=" << g.r(i) << ", phi=" << g.phi(j) << "): " << e.what();
      errors[static_cast<std::size_t>(idx)] = os.str();
    }
  });
  std::ostringstream failures;
  int nfail = 0;
  for (const auto& e : errors) {
    if (e.empty()) continue;
    if (nfail < 5) failures << (nfail ? "; " : "") << e;
    ++nfail;
  }
  if (nfail) {
    std::ostringstream os;
    os << nfail << " fibre factorization(s) failed: " << failures.str();
    throw Error(os.str());
  }
  for (const auto& d : diag) {
    res.recon_res = std::max(res.recon_res, d.recon);
    res.holF = std::max(res.holF, d.holF);
    res.holFinv = std::max(res.holFinv, d.holFinv);
    res.unitU = std::max(res.unitU, d.unitU);
    res.normU = std::max(res.normU, d.normU);
    res.max_iterations = std::max(res.max_iterations, d.iterations);
  }

  // Smoothness in x: gradient size and radial neighbour jumps.
  const SpatialGradient grad = spatial_gradient(res.F);
  const int limit = g.interior_ring_limit();
  res.max_gradient = std::max(grad.d1.sup_norm(limit), grad.d2.sup_norm(limit));
  std::vector<double> jumps;
  for (int i = 0; i + 1 < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      double jmp = 0.0;
      for (int k = 0; k < g.n_theta; ++k) jmp = std::max(jmp, sup_norm(res.F.at(i + 1, j, k) - res.F.at(i, j, k)));
      jumps.push_back(jmp);
    }
  }
  if (!jumps.empty()) {
    const double worst = *std::max_element(jumps.begin(), jumps.end());
    std::nth_element(jumps.begin(), jumps.begin() + static_cast<std::ptrdiff_t>(jumps.size() / 2), jumps.end());
    const double median = jumps[jumps.size() / 2];
    res.jump_ratio = median > 0.0 ? worst / median : (worst > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    res.spike = worst > 1e-12 && res.jump_ratio > opt.spike_factor;
  }
  return res;
}

FactorizationResult anti_factorize(const FiberFunction& R, const FactorizationOptions& opt) {
  FactorizationResult res = factorize(reflect_theta(R), opt);
  res.F = reflect_theta(res.F);
  res.U = reflect_theta(res.U);
  return res;
}

// ---------------------------------------------------------------------------
// The transformed attenuation
// ---------------------------------------------------------------------------

AttenuationField TransformResult::attenuation() const { return AttenuationField::from_grid(B, 1); }

TransformResult transform_attenuation(const AttenuationField& a, const FactorizationResult& fact,
                                      double cross_tol, int ring_limit) {
  const SMGrid& g = fact.F.grid();
  TransformResult out;
  out.ring_limit = ring_limit < 0 ? g.interior_ring_limit() : ring_limit;

  const FiberFunction Uinv = pointwise_inverse(fact.U);
  out.B = pointwise_product(apply_X(fact.U), Uinv);
  out.B *= -1.0;

  const FiberFunction Finv = pointwise_inverse(fact.F);
  const FiberFunction A = a.sample(g, fact.F.metric());
  out.B_route = pointwise_product(Finv, apply_X(fact.F) + pointwise_product(A, fact.F));

  const double scale = std::max(1.0, out.B.sup_norm(out.ring_limit));
  out.route_deviation = (out.B - out.B_route).sup_norm(out.ring_limit) / scale;
  out.skew_defect = (out.B + pointwise_adjoint(out.B)).sup_norm(out.ring_limit);
  out.outband = outside_band_ratio(out.B, 1);

  const FiberFunction bm1 = project_mode(out.B, -1);
  const FiberFunction b0 = project_mode(out.B, 0);
  const FiberFunction b1 = project_mode(out.B, 1);
  // B_{-1}^* (a mode +1 function) against -B_1, and B_0^* against -B_0.
  out.mode_pairing = std::max((pointwise_adjoint(bm1) + b1).sup_norm(out.ring_limit),
                              (pointwise_adjoint(b0) + b0).sup_norm(out.ring_limit));

  if (!(out.route_deviation <= cross_tol)) {
    std::ostringstream os;
    os << "the two routes for the transformed attenuation differ by " << out.route_deviation;
    throw InconsistencyError(os.str());
  }
  return out;
}

ModeEquationResiduals mode_equation_residuals(const AttenuationField& a, const FiberFunction& F,
                                              const FiberFunction& B, int ring_limit) {
  const SMGrid& g = F.grid();
  const int limit = ring_limit < 0 ? g.interior_ring_limit() : ring_limit;
  const FiberFunction A = a.sample(g, F.metric());
  const FiberFunction F0 = project_mode(F, 0);
  const FiberFunction F1 = project_mode(F, 1);
  const FiberFunction Am1 = project_mode(A, -1);
  const FiberFunction A0 = project_mode(A, 0);
  const FiberFunction Bm1 = project_mode(B, -1);
  const FiberFunction B0 = project_mode(B, 0);

  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      const double det = std::abs(F0.at(i, j, 0).determinant());
      if (!(det > 1e-12)) {
        std::ostringstream os;
        os << "F_0 is singular at r=" << g.r(i) << ", phi=" << g.phi(j);
        throw DegeneracyError(os.str());
      }
    }
  }

  ModeEquationResiduals out;
  const double scale = std::max(1.0, F.sup_norm(limit));
  const FiberFunction lhs_m1 = eta_minus(F0) + pointwise_product(Am1, F0);
  out.res_minus1 = (lhs_m1 - pointwise_product(F0, Bm1)).sup_norm(limit) / scale;
  const FiberFunction lhs_0 = eta_minus(F1) + pointwise_product(Am1, F1) + pointwise_product(A0, F0);
  out.res_0 = (lhs_0 - pointwise_product(F1, Bm1) - pointwise_product(F0, B0)).sup_norm(limit) / scale;

  const FiberFunction F0inv = pointwise_inverse(F0);
  out.B_minus1 = pointwise_product(F0inv, lhs_m1);
  out.B_0 = pointwise_product(F0inv, lhs_0 - pointwise_product(F1, out.B_minus1));
  const double bscale = std::max(1.0, B.sup_norm(limit));
  out.b_minus1_dev = (out.B_minus1 - Bm1).sup_norm(limit) / bscale;
  out.b_0_dev = (out.B_0 - B0).sup_norm(limit) / bscale;
  return out;
}

}  // namespace naxray
