#include "naxray/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "naxray/parallel.hpp"

namespace naxray {

namespace {

// Polar sample points of the closed unit disc, used for pointwise checks.
std::vector<std::pair<double, double>> disc_samples(int n_r = 17, int n_phi = 48) {
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  for (int i = 1; i < n_r; ++i) {
    const double r = static_cast<double>(i) / (n_r - 1);
    for (int j = 0; j < n_phi; ++j) {
      const double a = kTwoPi * j / n_phi;
      pts.emplace_back(r * std::cos(a), r * std::sin(a));
    }
  }
  return pts;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gauge elements
// ---------------------------------------------------------------------------

GaugeElement GaugeElement::identity(int n) {
  GaugeElement g;
  g.n = n;
  g.u = [n](double, double) { return naxray::identity(n); };
  g.du1 = [n](double, double) { return zeros(n, n); };
  g.du2 = g.du1;
  return g;
}

GaugeElement GaugeElement::polynomial(const PolyMatrix& P) {
  if (P.rows() != P.cols()) throw ParameterError("gauge polynomial must be square");
  GaugeElement g;
  g.n = P.rows();
  const int n = g.n;
  g.u = [P, n](double x1, double x2) {
    const double s = 1.0 - x1 * x1 - x2 * x2;
    return Mat(naxray::identity(n) + (s * s) * P.value(x1, x2));
  };
  g.du1 = [P](double x1, double x2) {
    const double s = 1.0 - x1 * x1 - x2 * x2;
    return Mat(-4.0 * x1 * s * P.value(x1, x2) + (s * s) * P.d1(x1, x2));
  };
  g.du2 = [P](double x1, double x2) {
    const double s = 1.0 - x1 * x1 - x2 * x2;
    return Mat(-4.0 * x2 * s * P.value(x1, x2) + (s * s) * P.d2(x1, x2));
  };
  return g;
}

GaugeElement GaugeElement::exp_scalar(const PolyMatrix& s) {
  if (s.rows() != 1 || s.cols() != 1) throw ParameterError("exp_scalar needs a scalar polynomial");
  GaugeElement g;
  g.n = 1;
  auto value = [s](double x1, double x2) {
    return std::exp((1.0 - x1 * x1 - x2 * x2) * s.value(x1, x2)(0, 0));
  };
  g.u = [value](double x1, double x2) {
    Mat m(1, 1);
    m(0, 0) = value(x1, x2);
    return m;
  };
  g.du1 = [s, value](double x1, double x2) {
    Mat m(1, 1);
    const double w = 1.0 - x1 * x1 - x2 * x2;
    m(0, 0) = value(x1, x2) * (-2.0 * x1 * s.value(x1, x2)(0, 0) + w * s.d1(x1, x2)(0, 0));
    return m;
  };
  g.du2 = [s, value](double x1, double x2) {
    Mat m(1, 1);
    const double w = 1.0 - x1 * x1 - x2 * x2;
    m(0, 0) = value(x1, x2) * (-2.0 * x2 * s.value(x1, x2)(0, 0) + w * s.d2(x1, x2)(0, 0));
    return m;
  };
  return g;
}

GaugeElement GaugeElement::random(int n, std::uint64_t seed, int degree, double amplitude) {
  std::mt19937_64 rng(seed);
  return polynomial(PolyMatrix::random(n, degree, amplitude, Algebra::gl, rng));
}

double GaugeElement::boundary_defect(int samples) const {
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double a = kTwoPi * k / samples;
    worst = std::max(worst, sup_norm(u(std::cos(a), std::sin(a)) - naxray::identity(n)));
  }
  return worst;
}

GaugeElement operator*(const GaugeElement& u, const GaugeElement& w) {
  if (u.n != w.n) throw ParameterError("gauge sizes differ");
  GaugeElement g;
  g.n = u.n;
  g.u = [u, w](double x1, double x2) { return Mat(u.u(x1, x2) * w.u(x1, x2)); };
  g.du1 = [u, w](double x1, double x2) {
    return Mat(u.du1(x1, x2) * w.u(x1, x2) + u.u(x1, x2) * w.du1(x1, x2));
  };
  g.du2 = [u, w](double x1, double x2) {
    return Mat(u.du2(x1, x2) * w.u(x1, x2) + u.u(x1, x2) * w.du2(x1, x2));
  };
  return g;
}

PairAttenuation gauge_apply(const PairAttenuation& pair, const GaugeElement& g) {
  if (pair.n != g.n) throw ParameterError("gauge and pair sizes differ");
  for (const auto& [x1, x2] : disc_samples()) {
    const Mat u = g.u(x1, x2);
    const double scale = std::pow(std::max(1.0, sup_norm(u)), g.n);
    if (!(std::abs(u.determinant()) > 1e-10 * scale)) {
      std::ostringstream os;
      os << "gauge element is singular near x=(" << x1 << ", " << x2 << ")";
      throw InputError(os.str());
    }
  }
  PairAttenuation out;
  out.n = pair.n;
  out.A1 = [pair, g](double x1, double x2) {
    const Mat u = g.u(x1, x2);
    return Mat(inverse(u) * (g.du1(x1, x2) + pair.A1(x1, x2) * u));
  };
  out.A2 = [pair, g](double x1, double x2) {
    const Mat u = g.u(x1, x2);
    return Mat(inverse(u) * (g.du2(x1, x2) + pair.A2(x1, x2) * u));
  };
  out.Phi = [pair, g](double x1, double x2) {
    const Mat u = g.u(x1, x2);
    return Mat(inverse(u) * pair.Phi(x1, x2) * u);
  };
  return out;
}

double gauge_invariance_check(const ConformalMetric& m, const PairAttenuation& pair,
                              const GaugeElement& u, const BoundaryGrid& grid,
                              const TransportConfig& cfg) {
  const AttenuationField a = AttenuationField::from_pair(pair, m);
  const AttenuationField b = AttenuationField::from_pair(gauge_apply(pair, u), m);
  const ScatteringData da = scattering_data(m, a, grid, cfg);
  const ScatteringData db = scattering_data(m, b, grid, cfg);
  da.throw_if_failed();
  db.throw_if_failed();
  double worst = 0.0;
  for (std::size_t i = 0; i < da.values.size(); ++i) {
    worst = std::max(worst, rel_deviation(db.values[i], da.values[i]));
  }
  return worst;
}

PseudoLinearization pseudo_linearization(const ConformalMetric& m, const AttenuationField& a,
                                         const AttenuationField& b, const BoundaryGrid& grid,
                                         const TransportConfig& cfg) {
  const auto coords = grid.coordinates();
  const StateAction action = endomorphism_action(a, b);
  const Source diff = [&a, &b](double x1, double x2, double theta) {
    return Mat(a(x1, x2, theta) - b(x1, x2, theta));
  };
  PseudoLinearization out;
  out.lhs.resize(coords.size());
  out.rhs.resize(coords.size());
  std::vector<double> dev(coords.size(), 0.0);
  parallel_for(static_cast<long>(coords.size()), cfg.threads, [&](long idx) {
    const auto i = static_cast<std::size_t>(idx);
    const Mat ca = scattering_value(m, a, coords[i], cfg.integrator);
    const Mat cb = scattering_value(m, b, coords[i], cfg.integrator);
    out.lhs[i] = ca * inverse(cb);
    out.rhs[i] = naxray::identity(a.n()) +
                 transport_solution(m, action, diff, influx_point(coords[i]), cfg.integrator);
    dev[i] = rel_deviation(out.rhs[i], out.lhs[i]);
  });
  out.residual = dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

nlohmann::json GaugeReconstruction::defects() const {
  nlohmann::json j = {{"scattering_mismatch", scattering_mismatch},
                      {"fiber_defect", fiber_defect},
                      {"gauge_defect", gauge_defect},
                      {"transport_residual", transport_residual},
                      {"identity_defect", identity_defect}};
  if (planted_error) j["planted_error"] = *planted_error;
  return j;
}

GaugeReconstruction reconstruct_gauge(const ConformalMetric& m, const PairAttenuation& pair_a,
                                      const PairAttenuation& pair_b, const SMGrid& grid,
                                      const BoundaryGrid& boundary, const TransportConfig& cfg,
                                      const ReconstructionOptions& opt,
                                      const GaugeElement* planted) {
  if (pair_a.n != pair_b.n) throw ParameterError("pairs have different sizes");
  const int n = pair_a.n;
  const AttenuationField a = AttenuationField::from_pair(pair_a, m);
  const AttenuationField b = AttenuationField::from_pair(pair_b, m);

  GaugeReconstruction out;
  {
    const ScatteringData da = scattering_data(m, a, boundary, cfg);
    const ScatteringData db = scattering_data(m, b, boundary, cfg);
    da.throw_if_failed();
    db.throw_if_failed();
    for (std::size_t i = 0; i < da.values.size(); ++i) {
      out.scattering_mismatch = std::max(out.scattering_mismatch, rel_deviation(db.values[i], da.values[i]));
    }
  }
  if (out.scattering_mismatch > 10.0 * opt.input_tol) {
    out.verdict = "not-equivalent";
    return out;
  }

  // W = C_A(p, tau)^{-1} C_B(p, tau) - Id.
  out.W = FiberFunction(grid, m, n, n);
  const auto rhs_a = [&a](const PhasePoint& q, const Mat& y) { return Mat(-(a(q) * y)); };
  const auto rhs_b = [&b](const PhasePoint& q, const Mat& y) { return Mat(-(b(q) * y)); };
  parallel_for(grid.fibers(), cfg.threads, [&](long idx) {
    const int i = static_cast<int>(idx / grid.n_phi);
    const int j = static_cast<int>(idx % grid.n_phi);
    const double x1 = grid.r(i) * std::cos(grid.phi(j));
    const double x2 = grid.r(i) * std::sin(grid.phi(j));
    for (int k = 0; k < grid.n_theta; ++k) {
      const PhasePoint p(x1, x2, grid.theta(k));
      PhasePoint q = p;
      Mat ca = naxray::identity(n);
      integrate_joint_to_exit(m, q, ca, 1.0, cfg.integrator, rhs_a);
      q = p;
      Mat cb = naxray::identity(n);
      integrate_joint_to_exit(m, q, cb, 1.0, cfg.integrator, rhs_b);
      const Mat w = ca.partialPivLu().solve(cb);
      out.W.set(i, j, k, Mat(w - naxray::identity(n)));
    }
  });

  const int limit = opt.ring_limit < 0 ? grid.interior_ring_limit() : opt.ring_limit;

  // Fibre constancy: energy outside mode 0 relative to max(||W||, ||Id||).
  {
    const ModeSpectrum sw = mode_spectrum(out.W);
    const FiberFunction id = FiberFunction::sample(grid, m, n, n, [n](double, double, double) {
      return naxray::identity(n);
    });
    const double e_id = mode_spectrum(id).total();
    const double e_tot = sw.total();
    out.fiber_defect = std::sqrt(std::max(0.0, e_tot - sw.energy_of(0)) / std::max(e_tot, e_id));
  }
  out.unreliable = out.fiber_defect > opt.fiber_threshold;

  // u = W_0 + Id on the spatial grid.
  const SMGrid sgrid{grid.n_r, grid.n_phi, 1};
  const FiberFunction w0 = project_mode(out.W, 0);
  out.u = FiberFunction(sgrid, m, n, n);
  for (int i = 0; i < grid.n_r; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const Mat u = w0.at(i, j, 0) + naxray::identity(n);
      out.u.set(i, j, 0, u);
      out.identity_defect = std::max(out.identity_defect, sup_norm(u - naxray::identity(n)));
    }
  }

  // Does u carry pair A to pair B?
  {
    const SpatialGradient du = spatial_gradient(out.u);
    double dev = 0.0;
    double scale = 1.0;
    for (int i = 0; i <= limit; ++i) {
      for (int j = 0; j < grid.n_phi; ++j) {
        const double x1 = grid.r(i) * std::cos(grid.phi(j));
        const double x2 = grid.r(i) * std::sin(grid.phi(j));
        const Mat u = out.u.at(i, j, 0);
        const auto lu = u.partialPivLu();
        const Mat a1 = lu.solve(Mat(du.d1.at(i, j, 0) + pair_a.A1(x1, x2) * u));
        const Mat a2 = lu.solve(Mat(du.d2.at(i, j, 0) + pair_a.A2(x1, x2) * u));
        const Mat ph = lu.solve(Mat(pair_a.Phi(x1, x2) * u));
        const Mat b1 = pair_b.A1(x1, x2);
        const Mat b2 = pair_b.A2(x1, x2);
        const Mat ps = pair_b.Phi(x1, x2);
        dev = std::max({dev, sup_norm(a1 - b1), sup_norm(a2 - b2), sup_norm(ph - ps)});
        scale = std::max({scale, sup_norm(b1), sup_norm(b2), sup_norm(ps)});
      }
    }
    out.gauge_defect = dev / scale;
  }

  // XW + AW - WB + (A - B) on the interior rings.
  {
    const FiberFunction A = a.sample(grid, m);
    const FiberFunction B = b.sample(grid, m);
    FiberFunction res = apply_X(out.W) + pointwise_product(A, out.W) - pointwise_product(out.W, B);
    res += A;
    res -= B;
    out.transport_residual = res.sup_norm(limit) / std::max(1.0, out.W.sup_norm(limit));
  }

  if (planted) {
    out.error_field = FiberFunction(sgrid, m, 1, 1);
    double worst = 0.0;
    for (int i = 0; i < grid.n_r; ++i) {
      for (int j = 0; j < grid.n_phi; ++j) {
        const double x1 = grid.r(i) * std::cos(grid.phi(j));
        const double x2 = grid.r(i) * std::sin(grid.phi(j));
        const double e = sup_norm(out.u.at(i, j, 0) - planted->u(x1, x2));
        Mat v(1, 1);
        v(0, 0) = e;
        out.error_field.set(i, j, 0, v);
        worst = std::max(worst, e);
      }
    }
    out.planted_error = worst;
  }

  bool ok = out.scattering_mismatch <= opt.input_tol && !out.unreliable &&
            out.gauge_defect <= opt.gauge_threshold &&
            out.transport_residual <= opt.transport_threshold;
  if (out.planted_error) ok = ok && *out.planted_error <= opt.planted_threshold;
  out.verdict = ok ? "pass" : "fail";
  return out;
}

// ---------------------------------------------------------------------------
// Planted kernel
// ---------------------------------------------------------------------------

Mat PlantedLinearKernel::p(double x1, double x2) const {
  const double s = 1.0 - x1 * x1 - x2 * x2;
  return (s * s) * q.value(x1, x2);
}

Mat PlantedLinearKernel::dp1(double x1, double x2) const {
  const double s = 1.0 - x1 * x1 - x2 * x2;
  return -4.0 * x1 * s * q.value(x1, x2) + (s * s) * q.d1(x1, x2);
}

Mat PlantedLinearKernel::dp2(double x1, double x2) const {
  const double s = 1.0 - x1 * x1 - x2 * x2;
  return -4.0 * x2 * s * q.value(x1, x2) + (s * s) * q.d2(x1, x2);
}

Source PlantedLinearKernel::source(const ConformalMetric& m, const PairAttenuation& pair) const {
  if (pair.n != q.rows()) throw ParameterError("kernel and pair sizes differ");
  const PlantedLinearKernel self = *this;
  return [self, m, pair](double x1, double x2, double theta) {
    const double e = std::exp(-m.sample(x1, x2).lambda);
    const Mat pv = self.p(x1, x2);
    const double c = e * std::cos(theta);
    const double s = e * std::sin(theta);
    return Mat(pair.Phi(x1, x2) * pv + c * (self.dp1(x1, x2) + pair.A1(x1, x2) * pv) +
               s * (self.dp2(x1, x2) + pair.A2(x1, x2) * pv));
  };
}

nlohmann::json KernelReport::defects() const {
  return {{"transform_sup", transform_sup},
          {"solution_error", solution_error},
          {"holomorphic", holomorphic},
          {"antiholomorphic", antiholomorphic},
          {"mode_band", mode_band}};
}

KernelReport plant_linear_kernel(const ConformalMetric& m, const PairAttenuation& pair,
                                 const PlantedLinearKernel& kernel, const SMGrid& grid,
                                 const BoundaryGrid& boundary, const TransportConfig& cfg) {
  const AttenuationField a = AttenuationField::from_pair(pair, m);
  const StateAction action = matrix_action(a, 1);
  const Source f = kernel.source(m, pair);
  KernelReport out;

  out.mode_band = outside_band_ratio(FiberFunction::sample(grid, m, pair.n, 1, f), 1);

  for (const Mat& v : attenuated_transform(m, action, f, boundary.coordinates(), cfg)) {
    out.transform_sup = std::max(out.transform_sup, sup_norm(v));
  }

  out.solution = transport_solution_grid(m, action, f, grid, cfg);
  out.error_field = FiberFunction(grid, m, pair.n, 1);
  for (int i = 0; i < grid.n_r; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const double x1 = grid.r(i) * std::cos(grid.phi(j));
      const double x2 = grid.r(i) * std::sin(grid.phi(j));
      const Mat p = kernel.p(x1, x2);
      for (int k = 0; k < grid.n_theta; ++k) {
        out.error_field.set(i, j, k, Mat(out.solution.at(i, j, k) + p));
      }
    }
  }
  out.solution_error = out.error_field.sup_norm();
  out.holomorphic = holomorphicity_ratio(out.solution);
  out.antiholomorphic = antiholomorphicity_ratio(out.solution);
  return out;
}

// ---------------------------------------------------------------------------
// Unitarity and subgroups
// ---------------------------------------------------------------------------

nlohmann::json UnitarityReport::defects() const {
  return {{"unitarity_defect", unitarity_defect},
          {"skew_defect", skew_defect},
          {"identity_residual", identity_residual}};
}

UnitarityReport unitarity_criterion(const ConformalMetric& m, int n, const MatrixField& phi,
                                    const BoundaryGrid& grid, const TransportConfig& cfg) {
  PairAttenuation pair = PairAttenuation::zero(n);
  pair.Phi = phi;
  PairAttenuation dual = PairAttenuation::zero(n);
  dual.Phi = [phi](double x1, double x2) { return Mat(-phi(x1, x2).adjoint()); };

  UnitarityReport out;
  for (const auto& [x1, x2] : disc_samples()) {
    const Mat v = phi(x1, x2);
    out.skew_defect = std::max(out.skew_defect, sup_norm(v + v.adjoint()));
  }
  const ScatteringData c = scattering_data(m, AttenuationField::from_pair(pair, m), grid, cfg);
  const ScatteringData d = scattering_data(m, AttenuationField::from_pair(dual, m), grid, cfg);
  c.throw_if_failed();
  d.throw_if_failed();
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const Mat& C = c.values[i];
    out.unitarity_defect = std::max(out.unitarity_defect, sup_norm(C.adjoint() * C - naxray::identity(n)));
    out.identity_residual = std::max(out.identity_residual, rel_deviation(inverse(d.values[i]), C.adjoint()));
  }
  return out;
}

nlohmann::json SubgroupReport::defects() const {
  return {{"group_defect", group_defect},
          {"real_defect", real_defect},
          {"det_defect", det_defect}};
}

SubgroupReport subgroup_preservation(const ConformalMetric& m, const PairAttenuation& pair,
                                     Algebra algebra, const BoundaryGrid& grid,
                                     const TransportConfig& cfg) {
  if (algebra == Algebra::gl || algebra == Algebra::hermitian) {
    throw ParameterError("subgroup check needs u, su, so or sl");
  }
  double worst = 0.0;
  std::pair<double, double> where{0.0, 0.0};
  std::string field;
  for (const auto& [x1, x2] : disc_samples()) {
    const std::pair<const char*, Mat> parts[] = {
        {"A1", pair.A1(x1, x2)}, {"A2", pair.A2(x1, x2)}, {"Phi", pair.Phi(x1, x2)}};
    for (const auto& [name, v] : parts) {
      const double d = algebra_defect(v, algebra) / std::max(1.0, sup_norm(v));
      if (d > worst) {
        worst = d;
        where = {x1, x2};
        field = name;
      }
    }
  }
  if (worst > 1e-12) {
    std::ostringstream os;
    os << "pair is not " << to_string(algebra) << "-valued: " << field << " at x=(" << where.first
       << ", " << where.second << ") has defect " << worst;
    throw InputError(os.str());
  }

  const ScatteringData c = scattering_data(m, AttenuationField::from_pair(pair, m), grid, cfg);
  c.throw_if_failed();
  SubgroupReport out;
  out.algebra = algebra;
  const int n = pair.n;
  for (const Mat& C : c.values) {
    switch (algebra) {
      case Algebra::u:
      case Algebra::su:
        out.group_defect = std::max(out.group_defect, sup_norm(C.adjoint() * C - naxray::identity(n)));
        break;
      case Algebra::so:
        out.group_defect = std::max(out.group_defect, sup_norm(C.transpose() * C - naxray::identity(n)));
        out.real_defect = std::max(out.real_defect, C.imag().cwiseAbs().maxCoeff());
        break;
      default:
        break;
    }
    if (algebra == Algebra::su || algebra == Algebra::sl || algebra == Algebra::so) {
      out.det_defect = std::max(out.det_defect, std::abs(C.determinant() - 1.0));
    }
    if (algebra == Algebra::sl) out.group_defect = out.det_defect;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conjugation identity
// ---------------------------------------------------------------------------

double conjugation_residual(const ConformalMetric& m, const AttenuationField& a,
                            const FiberFunction& F, const AttenuationField& b, const Source& f,
                            const BoundaryGrid& grid, const TransportConfig& cfg) {
  const auto Fi = std::make_shared<FiberInterpolator>(F);
  const auto Finv = std::make_shared<FiberInterpolator>(pointwise_inverse(F));
  const Source g = [Finv, &f](double x1, double x2, double theta) {
    return Mat((*Finv)(x1, x2, theta) * f(x1, x2, theta));
  };
  const auto coords = grid.coordinates();
  const Mat probe = f(0.0, 0.0, 0.0);
  const int cols = static_cast<int>(probe.cols());
  const auto lhs = attenuated_transform(m, matrix_action(a, cols), f, coords, cfg);
  const auto inner = attenuated_transform(m, matrix_action(b, cols), g, coords, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const PhasePoint p = influx_point(coords[i]);
    const Mat rhs = (*Fi)(p.x1, p.x2, p.theta) * inner[i];
    worst = std::max(worst, rel_deviation(rhs, lhs[i]));
  }
  return worst;
}

Source random_mode_source(int n, std::uint64_t seed, int degree, double amplitude, int cutoff) {
  std::mt19937_64 rng(seed);
  std::vector<PolyMatrix> c;
  for (int k = -1; k <= 1; ++k) c.push_back(PolyMatrix::random_vector(n, degree, amplitude, rng));
  return [c, cutoff](double x1, double x2, double theta) {
    Mat out = c[1].value(x1, x2);
    out += c[0].value(x1, x2) * std::exp(cd(0.0, -theta));
    out += c[2].value(x1, x2) * std::exp(cd(0.0, theta));
    return Mat(cutoff_factor(x1, x2, cutoff) * out);
  };
}

}  // namespace naxray
