#include "naxray/fiber.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "naxray/fourier.hpp"

namespace naxray {

void SMGrid::validate() const {
  if (n_r < 7) throw ParameterError("n_r must be at least 7");
  if (n_phi < 4 || n_phi % 4 != 0) throw ParameterError("n_phi must be a positive multiple of 4");
  if (!fourier::is_power_of_two(n_theta)) throw ParameterError("n_theta must be a power of two");
}

// ---------------------------------------------------------------------------
// FiberFunction
// ---------------------------------------------------------------------------

FiberFunction::FiberFunction(const SMGrid& grid, const ConformalMetric& metric, int rows, int cols)
    : grid_(grid), metric_(metric), rows_(rows), cols_(cols) {
  grid_.validate();
  if (rows < 1 || cols < 1 || rows > 4 || cols > 4) {
    throw ParameterError("fibre function values must be at most 4x4");
  }
  data_.assign(static_cast<std::size_t>(grid.fibers()) * grid.n_theta * components(), cd{});
}

FiberFunction FiberFunction::sample(const SMGrid& grid, const ConformalMetric& metric, int rows,
                                    int cols, const SMFunction& f) {
  FiberFunction u(grid, metric, rows, cols);
  for (int i = 0; i < grid.n_r; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const double x1 = grid.r(i) * std::cos(grid.phi(j));
      const double x2 = grid.r(i) * std::sin(grid.phi(j));
      for (int k = 0; k < grid.n_theta; ++k) {
        u.set(i, j, k, f(x1, x2, grid.theta(k)));
      }
    }
  }
  return u;
}

Mat FiberFunction::at(int i, int j, int k) const {
  Mat m(rows_, cols_);
  const std::size_t off = offset(i, j, k);
  for (int a = 0; a < rows_; ++a) {
    for (int b = 0; b < cols_; ++b) m(a, b) = data_[off + a * cols_ + b];
  }
  return m;
}

void FiberFunction::set(int i, int j, int k, const Mat& value) {
  if (value.rows() != rows_ || value.cols() != cols_) {
    throw ParameterError("value shape does not match the fibre function");
  }
  const std::size_t off = offset(i, j, k);
  for (int a = 0; a < rows_; ++a) {
    for (int b = 0; b < cols_; ++b) data_[off + a * cols_ + b] = value(a, b);
  }
}

namespace {

void require_same_shape(const FiberFunction& a, const FiberFunction& b) {
  if (!(a.grid() == b.grid()) || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ParameterError("fibre functions have mismatched grids or shapes");
  }
}

}  // namespace

FiberFunction& FiberFunction::operator+=(const FiberFunction& o) {
  require_same_shape(*this, o);
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
  return *this;
}

FiberFunction& FiberFunction::operator-=(const FiberFunction& o) {
  require_same_shape(*this, o);
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
  return *this;
}

FiberFunction& FiberFunction::operator*=(cd s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double FiberFunction::sup_norm(int ring_limit) const {
  const int last = ring_limit < 0 ? grid_.n_r - 1 : std::min(ring_limit, grid_.n_r - 1);
  const std::size_t end = fiber_offset(last, grid_.n_phi - 1) +
                          static_cast<std::size_t>(grid_.n_theta) * components();
  double s = 0.0;
  for (std::size_t n = 0; n < end; ++n) s = std::max(s, std::abs(data_[n]));
  return s;
}

FiberFunction operator+(FiberFunction a, const FiberFunction& b) { return a += b; }
FiberFunction operator-(FiberFunction a, const FiberFunction& b) { return a -= b; }
FiberFunction operator*(cd s, FiberFunction a) { return a *= s; }

namespace {

template <class Fn>
FiberFunction map_samples(const FiberFunction& a, int rows, int cols, Fn&& fn) {
  FiberFunction out(a.grid(), a.metric(), rows, cols);
  const SMGrid& g = a.grid();
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      for (int k = 0; k < g.n_theta; ++k) out.set(i, j, k, fn(i, j, k));
    }
  }
  return out;
}

}  // namespace

FiberFunction pointwise_product(const FiberFunction& a, const FiberFunction& b) {
  if (!(a.grid() == b.grid()) || a.cols() != b.rows()) {
    throw ParameterError("pointwise product: incompatible shapes");
  }
  return map_samples(a, a.rows(), b.cols(),
                     [&](int i, int j, int k) { return Mat(a.at(i, j, k) * b.at(i, j, k)); });
}

FiberFunction pointwise_inverse(const FiberFunction& a) {
  if (a.rows() != a.cols()) throw ParameterError("pointwise inverse needs square values");
  return map_samples(a, a.rows(), a.cols(),
                     [&](int i, int j, int k) { return inverse(a.at(i, j, k)); });
}

FiberFunction pointwise_adjoint(const FiberFunction& a) {
  return map_samples(a, a.cols(), a.rows(),
                     [&](int i, int j, int k) { return Mat(a.at(i, j, k).adjoint()); });
}

FiberFunction reflect_theta(const FiberFunction& a) {
  const int n = a.grid().n_theta;
  return map_samples(a, a.rows(), a.cols(),
                     [&](int i, int j, int k) { return a.at(i, j, (n - k) % n); });
}

// ---------------------------------------------------------------------------
// Quadrature and spectra
// ---------------------------------------------------------------------------

namespace {

/// End-corrected trapezoid weights on nodes 0..N (unit spacing). The first
/// and last k weights are fitted so that the rule integrates polynomials up
/// to degree 2k - 1 exactly; the rest are 1.
std::vector<double> end_corrected_weights(int n_nodes) {
  const int N = n_nodes - 1;
  const int k = std::min(4, n_nodes / 2);
  const double mid = 0.5 * N;
  Eigen::MatrixXd a(k, k);
  Eigen::VectorXd rhs(k);
  for (int m = 0; m < k; ++m) {
    const int p = 2 * m;
    // Exact integral of ((x - mid) / mid)^p over [0, N]; rows scaled by
    // mid^-p so the solve is not dominated by the high moments.
    double target = 2.0 * mid / (p + 1);
    for (int i = k; i <= N - k; ++i) target -= std::pow((i - mid) / mid, p);
    for (int c = 0; c < k; ++c) a(m, c) = 2.0 * std::pow((c - mid) / mid, p);
    rhs(m) = target;
  }
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(rhs);
  std::vector<double> out(static_cast<std::size_t>(n_nodes), 1.0);
  for (int c = 0; c < k; ++c) {
    out[static_cast<std::size_t>(c)] = w(c);
    out[static_cast<std::size_t>(N - c)] = w(c);
  }
  return out;
}

}  // namespace

double spatial_weight(const SMGrid& grid, int i) {
  static thread_local int cached_n = -1;
  static thread_local std::vector<double> cached;
  if (cached_n != grid.n_r) {
    cached = end_corrected_weights(grid.n_r);
    cached_n = grid.n_r;
  }
  return cached[static_cast<std::size_t>(i)] * grid.dr() * grid.r(i) * kTwoPi / grid.n_phi;
}

namespace {

/// dSigma^3 weight of the spatial node times the theta cell 2 pi / n_theta.
std::vector<double> fibre_weights(const FiberFunction& u) {
  const SMGrid& g = u.grid();
  std::vector<double> w(static_cast<std::size_t>(g.fibers()));
  for (int i = 0; i < g.n_r; ++i) {
    const double wi = spatial_weight(g, i);
    for (int j = 0; j < g.n_phi; ++j) {
      const double x1 = g.r(i) * std::cos(g.phi(j));
      const double x2 = g.r(i) * std::sin(g.phi(j));
      const double lam = u.metric().lambda(x1, x2);
      w[static_cast<std::size_t>(i) * g.n_phi + j] = wi * std::exp(2.0 * lam);
    }
  }
  return w;
}

/// Per-fibre theta coefficients c_k = (1/N) sum_j u_j e^{-i k theta_j}.
std::vector<cd> theta_coefficients(const FiberFunction& u) {
  std::vector<cd> c = u.values();
  const SMGrid& g = u.grid();
  const int d = u.components();
  for (int f = 0; f < g.fibers(); ++f) {
    cd* base = c.data() + static_cast<std::size_t>(f) * g.n_theta * d;
    fourier::transform(base, g.n_theta, d, d, 1, -1);
  }
  const double inv = 1.0 / g.n_theta;
  for (auto& v : c) v *= inv;
  return c;
}

/// Inverse of theta_coefficients, in place.
void theta_synthesis(std::vector<cd>& c, const SMGrid& g, int d) {
  for (int f = 0; f < g.fibers(); ++f) {
    cd* base = c.data() + static_cast<std::size_t>(f) * g.n_theta * d;
    fourier::transform(base, g.n_theta, d, d, 1, +1);
  }
}

}  // namespace

double ModeSpectrum::energy_of(int k) const {
  if (k < -grid.n_theta / 2 || k >= grid.n_theta / 2) return 0.0;
  return energy[static_cast<std::size_t>(fourier::mode_index(k, grid.n_theta))];
}

double ModeSpectrum::total() const {
  double s = 0.0;
  for (double e : energy) s += e;
  return s;
}

ModeSpectrum mode_spectrum(const FiberFunction& u) {
  ModeSpectrum s;
  s.grid = u.grid();
  s.components = u.components();
  s.coefficients = theta_coefficients(u);
  s.energy.assign(static_cast<std::size_t>(s.grid.n_theta), 0.0);
  const auto w = fibre_weights(u);
  const int d = s.components;
  for (int f = 0; f < s.grid.fibers(); ++f) {
    const cd* base = s.coefficients.data() + static_cast<std::size_t>(f) * s.grid.n_theta * d;
    for (int k = 0; k < s.grid.n_theta; ++k) {
      double e = 0.0;
      for (int c = 0; c < d; ++c) e += std::norm(base[k * d + c]);
      s.energy[static_cast<std::size_t>(k)] += kTwoPi * w[static_cast<std::size_t>(f)] * e;
    }
  }
  return s;
}

FiberFunction project_mode(const FiberFunction& u, int k) {
  const SMGrid& g = u.grid();
  if (k <= -g.n_theta / 2 || k >= g.n_theta / 2) {
    throw ParameterError("mode index outside the representable range");
  }
  std::vector<cd> c = theta_coefficients(u);
  const int d = u.components();
  const int keep = fourier::mode_index(k, g.n_theta);
  for (int f = 0; f < g.fibers(); ++f) {
    cd* base = c.data() + static_cast<std::size_t>(f) * g.n_theta * d;
    for (int idx = 0; idx < g.n_theta; ++idx) {
      if (idx == keep) continue;
      for (int comp = 0; comp < d; ++comp) base[idx * d + comp] = 0.0;
    }
  }
  theta_synthesis(c, g, d);
  FiberFunction out = u;
  out.values() = std::move(c);
  return out;
}

namespace {

template <class Pred>
double energy_ratio(const FiberFunction& u, Pred&& select) {
  const ModeSpectrum s = mode_spectrum(u);
  const double total = s.total();
  if (total == 0.0) return 0.0;
  double part = 0.0;
  for (int idx = 0; idx < s.grid.n_theta; ++idx) {
    if (select(fourier::index_mode(idx, s.grid.n_theta))) part += s.energy[static_cast<std::size_t>(idx)];
  }
  return part / total;
}

}  // namespace

double holomorphicity_ratio(const FiberFunction& u) {
  return energy_ratio(u, [](int k) { return k < 0; });
}

double antiholomorphicity_ratio(const FiberFunction& u) {
  return energy_ratio(u, [](int k) { return k > 0; });
}

double outside_band_ratio(const FiberFunction& u, int band) {
  return energy_ratio(u, [band](int k) { return std::abs(k) > band; });
}

cd inner_product(const FiberFunction& u, const FiberFunction& v) {
  require_same_shape(u, v);
  const auto w = fibre_weights(u);
  const SMGrid& g = u.grid();
  const int d = u.components();
  const double dtheta = kTwoPi / g.n_theta;
  cd total = 0.0;
  for (int f = 0; f < g.fibers(); ++f) {
    const std::size_t base = static_cast<std::size_t>(f) * g.n_theta * d;
    cd s = 0.0;
    for (std::size_t n = 0; n < static_cast<std::size_t>(g.n_theta) * d; ++n) {
      s += u.values()[base + n] * std::conj(v.values()[base + n]);
    }
    total += w[static_cast<std::size_t>(f)] * dtheta * s;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

FiberFunction apply_V(const FiberFunction& u) {
  const SMGrid& g = u.grid();
  const int d = u.components();
  std::vector<cd> c = theta_coefficients(u);
  for (int f = 0; f < g.fibers(); ++f) {
    cd* base = c.data() + static_cast<std::size_t>(f) * g.n_theta * d;
    for (int idx = 0; idx < g.n_theta; ++idx) {
      const int k = fourier::index_mode(idx, g.n_theta);
      const cd factor = (idx == g.n_theta / 2) ? cd{0.0} : cd{0.0, static_cast<double>(k)};
      for (int comp = 0; comp < d; ++comp) base[idx * d + comp] *= factor;
    }
  }
  theta_synthesis(c, g, d);
  FiberFunction out = u;
  out.values() = std::move(c);
  return out;
}

namespace {

/// Half-width of the radial stencils (order 2 * kHalfWidth).
constexpr int kHalfWidth = 3;

/// Fornberg weights for the first derivative at x0 on the given nodes.
std::vector<double> derivative_weights(const std::vector<double>& nodes, double x0) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

/// Radial stencil of ring i: first signed ring index and weights (already
/// divided by dr). Central where possible, one-sided near r = 1.
struct RadialStencil {
  int first;
  std::vector<double> w;
};

std::vector<RadialStencil> radial_stencils(const SMGrid& g) {
  const int last = g.n_r - 1;
  const int width = 2 * kHalfWidth + 1;
  std::vector<RadialStencil> out(static_cast<std::size_t>(g.n_r));
  for (int i = 0; i <= last; ++i) {
    const int first = std::min(i - kHalfWidth, last - width + 1);
    std::vector<double> nodes(width);
    for (int a = 0; a < width; ++a) nodes[a] = first + a;
    auto w = derivative_weights(nodes, i);
    for (double& x : w) x /= g.dr();
    out[static_cast<std::size_t>(i)] = {first, std::move(w)};
  }
  return out;
}

}  // namespace

SpatialGradient spatial_gradient(const FiberFunction& u) {
  const SMGrid& g = u.grid();
  if (g.n_r < 2 * kHalfWidth + 1) throw ParameterError("radial grid too small for the stencil");
  const int d = u.components();
  const int nt = g.n_theta;
  const std::size_t fibre_len = static_cast<std::size_t>(nt) * d;
  const std::size_t ring_len = fibre_len * g.n_phi;
  const int last = g.n_r - 1;
  const auto& v = u.values();

  // Fibre offset at signed ring index (negative rings reflect through the origin).
  const auto fibre = [&](int i, int j) -> std::size_t {
    if (i < 0) {
      i = -i;
      j = (j + g.n_phi / 2) % g.n_phi;
    }
    return u.fiber_offset(i, j);
  };

  const auto stencils = radial_stencils(g);
  std::vector<cd> dr(v.size());
  for (int i = 1; i <= last; ++i) {
    const RadialStencil& st = stencils[static_cast<std::size_t>(i)];
    for (int j = 0; j < g.n_phi; ++j) {
      cd* out = dr.data() + u.fiber_offset(i, j);
      for (std::size_t a = 0; a < st.w.size(); ++a) {
        const cd* src = v.data() + fibre(st.first + static_cast<int>(a), j);
        const double w = st.w[a];
        for (std::size_t n = 0; n < fibre_len; ++n) out[n] += w * src[n];
      }
    }
  }

  // Spectral d/dphi ring by ring.
  std::vector<cd> dphi(v);
  for (int i = 1; i <= last; ++i) {
    cd* base = dphi.data() + static_cast<std::size_t>(i) * ring_len;
    fourier::transform(base, g.n_phi, static_cast<int>(fibre_len), static_cast<int>(fibre_len), 1, -1);
    for (int idx = 0; idx < g.n_phi; ++idx) {
      const int m = fourier::index_mode(idx, g.n_phi);
      const cd factor = (idx == g.n_phi / 2) ? cd{0.0}
                                             : cd{0.0, static_cast<double>(m) / g.n_phi};
      for (std::size_t n = 0; n < fibre_len; ++n) base[idx * fibre_len + n] *= factor;
    }
    fourier::transform(base, g.n_phi, static_cast<int>(fibre_len), static_cast<int>(fibre_len), 1, +1);
  }

  SpatialGradient out{u, u};
  auto& o1 = out.d1.values();
  auto& o2 = out.d2.values();
  for (int i = 1; i <= last; ++i) {
    const double r = g.r(i);
    for (int j = 0; j < g.n_phi; ++j) {
      const double c = std::cos(g.phi(j));
      const double s = std::sin(g.phi(j));
      const std::size_t off = u.fiber_offset(i, j);
      for (std::size_t n = 0; n < fibre_len; ++n) {
        o1[off + n] = c * dr[off + n] - s / r * dphi[off + n];
        o2[off + n] = s * dr[off + n] + c / r * dphi[off + n];
      }
    }
  }

  // Centre: central line stencils along the x1 and x2 axes.
  const RadialStencil& c0 = stencils[0];
  const int q = g.n_phi / 4;
  for (int axis = 0; axis < 2; ++axis) {
    auto& o = axis == 0 ? o1 : o2;
    const int j_axis = axis == 0 ? 0 : q;
    std::vector<cd> acc(fibre_len, cd{});
    for (std::size_t a = 0; a < c0.w.size(); ++a) {
      const cd* src = v.data() + fibre(c0.first + static_cast<int>(a), j_axis);
      for (std::size_t n = 0; n < fibre_len; ++n) acc[n] += c0.w[a] * src[n];
    }
    for (int j = 0; j < g.n_phi; ++j) {
      std::copy(acc.begin(), acc.end(), o.begin() + static_cast<std::ptrdiff_t>(u.fiber_offset(0, j)));
    }
  }
  return out;
}

namespace {

struct FrameParts {
  FiberFunction x;
  FiberFunction xperp;
};

/// X u and X_perp u from the explicit isothermal formulas.
FrameParts frame_derivatives(const FiberFunction& u, bool want_x, bool want_xperp) {
  const SMGrid& g = u.grid();
  const int d = u.components();
  const SpatialGradient grad = spatial_gradient(u);
  const FiberFunction vu = apply_V(u);
  FrameParts out{want_x ? FiberFunction(g, u.metric(), u.rows(), u.cols()) : FiberFunction{},
                 want_xperp ? FiberFunction(g, u.metric(), u.rows(), u.cols()) : FiberFunction{}};
  std::vector<double> ct(static_cast<std::size_t>(g.n_theta)), st(static_cast<std::size_t>(g.n_theta));
  for (int k = 0; k < g.n_theta; ++k) {
    ct[static_cast<std::size_t>(k)] = std::cos(g.theta(k));
    st[static_cast<std::size_t>(k)] = std::sin(g.theta(k));
  }
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      const double x1 = g.r(i) * std::cos(g.phi(j));
      const double x2 = g.r(i) * std::sin(g.phi(j));
      const MetricSample ms = u.metric().sample(x1, x2);
      const double e = std::exp(-ms.lambda);
      for (int k = 0; k < g.n_theta; ++k) {
        const double c = ct[static_cast<std::size_t>(k)];
        const double s = st[static_cast<std::size_t>(k)];
        const std::size_t off = u.offset(i, j, k);
        for (int comp = 0; comp < d; ++comp) {
          const cd a = grad.d1.values()[off + comp];
          const cd b = grad.d2.values()[off + comp];
          const cd w = vu.values()[off + comp];
          if (want_x) {
            out.x.values()[off + comp] = e * (c * a + s * b + (-ms.d1 * s + ms.d2 * c) * w);
          }
          if (want_xperp) {
            out.xperp.values()[off + comp] = e * (s * a - c * b + (ms.d1 * c + ms.d2 * s) * w);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

FiberFunction apply_X(const FiberFunction& u) { return frame_derivatives(u, true, false).x; }

FiberFunction apply_Xperp(const FiberFunction& u) {
  return frame_derivatives(u, false, true).xperp;
}

FiberFunction eta_plus(const FiberFunction& u) {
  FrameParts p = frame_derivatives(u, true, true);
  p.xperp *= cd{0.0, 1.0};
  p.x += p.xperp;
  p.x *= 0.5;
  return p.x;
}

FiberFunction eta_minus(const FiberFunction& u) {
  FrameParts p = frame_derivatives(u, true, true);
  p.xperp *= cd{0.0, 1.0};
  p.x -= p.xperp;
  p.x *= 0.5;
  return p.x;
}

double StructureResiduals::max() const {
  return std::max({xv_minus_xperp, vxperp_minus_x, xxperp_plus_kv});
}

StructureResiduals check_structure_equations(const std::vector<FiberFunction>& probes) {
  StructureResiduals res;
  for (const auto& u : probes) {
    const SMGrid& g = u.grid();
    const int limit = g.n_r - 5;
    const double scale = u.sup_norm();
    if (scale == 0.0) continue;

    const FiberFunction vu = apply_V(u);
    const FrameParts fu = frame_derivatives(u, true, true);

    // [X, V]u - X_perp u
    FiberFunction r1 = apply_X(vu) - apply_V(fu.x) - fu.xperp;
    // [V, X_perp]u - X u
    FiberFunction r2 = apply_V(fu.xperp) - apply_Xperp(vu) - fu.x;
    // [X, X_perp]u + K V u
    FiberFunction r3 = apply_X(fu.xperp) - apply_Xperp(fu.x);
    for (int i = 0; i < g.n_r; ++i) {
      for (int j = 0; j < g.n_phi; ++j) {
        const double x1 = g.r(i) * std::cos(g.phi(j));
        const double x2 = g.r(i) * std::sin(g.phi(j));
        const double K = u.metric().sample(x1, x2).curvature();
        const std::size_t off = u.fiber_offset(i, j);
        for (std::size_t n = 0; n < static_cast<std::size_t>(g.n_theta) * u.components(); ++n) {
          r3.values()[off + n] += K * vu.values()[off + n];
        }
      }
    }
    res.xv_minus_xperp = std::max(res.xv_minus_xperp, r1.sup_norm(limit) / scale);
    res.vxperp_minus_x = std::max(res.vxperp_minus_x, r2.sup_norm(limit) / scale);
    res.xxperp_plus_kv = std::max(res.xxperp_plus_kv, r3.sup_norm(limit) / scale);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

FiberInterpolator::FiberInterpolator(const FiberFunction& u, double mode_cutoff)
    : grid_(u.grid()), rows_(u.rows()), cols_(u.cols()) {
  const int d = u.components();
  const int nt = grid_.n_theta;
  const std::vector<cd> c = theta_coefficients(u);
  std::vector<double> peak(static_cast<std::size_t>(nt), 0.0);
  double overall = 0.0;
  for (int f = 0; f < grid_.fibers(); ++f) {
    for (int idx = 0; idx < nt; ++idx) {
      for (int comp = 0; comp < d; ++comp) {
        const double a = std::abs(c[(static_cast<std::size_t>(f) * nt + idx) * d + comp]);
        peak[static_cast<std::size_t>(idx)] = std::max(peak[static_cast<std::size_t>(idx)], a);
        overall = std::max(overall, a);
      }
    }
  }
  for (int idx = 0; idx < nt; ++idx) {
    if (nt > 1 && idx == nt / 2) continue;
    if (peak[static_cast<std::size_t>(idx)] > mode_cutoff * overall || (overall == 0.0 && idx == 0)) {
      modes_.push_back(fourier::index_mode(idx, nt));
    }
  }
  if (modes_.empty()) modes_.push_back(0);
  const std::size_t km = modes_.size();
  coeffs_.assign(static_cast<std::size_t>(grid_.fibers()) * km * d, cd{});
  for (int f = 0; f < grid_.fibers(); ++f) {
    for (std::size_t m = 0; m < km; ++m) {
      const int idx = fourier::mode_index(modes_[m], nt);
      for (int comp = 0; comp < d; ++comp) {
        coeffs_[(static_cast<std::size_t>(f) * km + m) * d + comp] =
            c[(static_cast<std::size_t>(f) * nt + idx) * d + comp];
      }
    }
  }
}

namespace {

/// Lagrange weights at offset t from node 0 for nodes -2, ..., 3.
constexpr int kStencil = 6;

void lagrange_weights(double t, double w[kStencil]) {
  for (int a = 0; a < kStencil; ++a) {
    double num = 1.0, den = 1.0;
    for (int b = 0; b < kStencil; ++b) {
      if (b == a) continue;
      num *= t - (b - 2);
      den *= a - b;
    }
    w[a] = num / den;
  }
}

}  // namespace

Mat FiberInterpolator::operator()(double x1, double x2, double theta) const {
  const double r = std::hypot(x1, x2);
  const double phi = wrap_angle(std::atan2(x2, x1));
  const int last = grid_.n_r - 1;
  const double ur = r / grid_.dr();
  int i1 = static_cast<int>(std::floor(ur));
  i1 = std::min(i1, last - 3);  // node 0 of the stencil
  const double tr = ur - i1;
  const double up = phi / (kTwoPi / grid_.n_phi);
  const int j1 = static_cast<int>(std::floor(up));
  const double tp = up - j1;
  double wr[kStencil], wp[kStencil];
  lagrange_weights(tr, wr);
  lagrange_weights(tp, wp);

  const int d = rows_ * cols_;
  const std::size_t km = modes_.size();
  cd acc[4 * 4 * 64];
  const std::size_t need = km * d;
  std::vector<cd> heap;
  cd* sum = acc;
  if (need > sizeof(acc) / sizeof(acc[0])) {
    heap.assign(need, cd{});
    sum = heap.data();
  } else {
    std::fill(sum, sum + need, cd{});
  }

  for (int a = 0; a < kStencil; ++a) {
    int ri = i1 - 2 + a;
    const bool flip = ri < 0;
    if (flip) ri = -ri;
    for (int b = 0; b < kStencil; ++b) {
      int pj = j1 - 2 + b;
      if (flip) pj += grid_.n_phi / 2;
      pj = ((pj % grid_.n_phi) + grid_.n_phi) % grid_.n_phi;
      const double w = wr[a] * wp[b];
      const cd* src = coeffs_.data() + (static_cast<std::size_t>(ri) * grid_.n_phi + pj) * need;
      for (std::size_t n = 0; n < need; ++n) sum[n] += w * src[n];
    }
  }

  Mat out = Mat::Zero(rows_, cols_);
  for (std::size_t m = 0; m < km; ++m) {
    const cd e = std::polar(1.0, modes_[m] * theta);
    for (int comp = 0; comp < d; ++comp) out(comp / cols_, comp % cols_) += sum[m * d + comp] * e;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const FiberFunction& u) {
  const SMGrid& g = u.grid();
  const int d = u.components();
  os << "r,phi,theta";
  for (int c = 0; c < d; ++c) os << ",re_" << c << ",im_" << c;
  os << '\n';
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      for (int k = 0; k < g.n_theta; ++k) {
        os << fmt17(g.r(i)) << ',' << fmt17(g.phi(j)) << ',' << fmt17(g.theta(k));
        const std::size_t off = u.offset(i, j, k);
        for (int c = 0; c < d; ++c) {
          os << ',' << fmt17(u.values()[off + c].real()) << ',' << fmt17(u.values()[off + c].imag());
        }
        os << '\n';
      }
    }
  }
}

void write_binary(std::ostream& os, const FiberFunction& u) {
  os.write("NXFF", 4);
  const std::int32_t dims[5] = {u.grid().n_r, u.grid().n_phi, u.grid().n_theta, u.rows(), u.cols()};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (const cd& v : u.values()) {
    const double parts[2] = {v.real(), v.imag()};
    os.write(reinterpret_cast<const char*>(parts), sizeof parts);
  }
}

FiberFunction read_binary(std::istream& is, const ConformalMetric& metric) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NXFF", 4) != 0) throw ParameterError("not a fibre function file");
  std::int32_t dims[5];
  is.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!is) throw ParameterError("truncated fibre function header");
  FiberFunction u(SMGrid{dims[0], dims[1], dims[2]}, metric, dims[3], dims[4]);
  for (cd& v : u.values()) {
    double parts[2];
    is.read(reinterpret_cast<char*>(parts), sizeof parts);
    if (!is) throw ParameterError("truncated fibre function data");
    v = {parts[0], parts[1]};
  }
  return u;
}

}  // namespace naxray
