#include "naxray/attenuation.hpp"

#include <algorithm>
#include <memory>

namespace naxray {

Algebra algebra_from_string(const std::string& tag) {
  if (tag == "gl") return Algebra::gl;
  if (tag == "u") return Algebra::u;
  if (tag == "su") return Algebra::su;
  if (tag == "so") return Algebra::so;
  if (tag == "sl") return Algebra::sl;
  if (tag == "hermitian") return Algebra::hermitian;
  throw ParameterError("unknown algebra tag: " + tag);
}

std::string to_string(Algebra a) {
  switch (a) {
    case Algebra::gl: return "gl";
    case Algebra::u: return "u";
    case Algebra::su: return "su";
    case Algebra::so: return "so";
    case Algebra::sl: return "sl";
    case Algebra::hermitian: return "hermitian";
  }
  return "gl";
}

Mat project_to_algebra(const Mat& m, Algebra a) {
  const int n = static_cast<int>(m.rows());
  switch (a) {
    case Algebra::gl:
      return m;
    case Algebra::u:
      return 0.5 * (m - m.adjoint());
    case Algebra::su: {
      Mat s = 0.5 * (m - m.adjoint());
      return s - (s.trace() / static_cast<double>(n)) * identity(n);
    }
    case Algebra::so: {
      const Mat re = m.real().cast<cd>();
      return 0.5 * (re - re.transpose());
    }
    case Algebra::sl:
      return m - (m.trace() / static_cast<double>(n)) * identity(n);
    case Algebra::hermitian:
      return 0.5 * (m + m.adjoint());
  }
  return m;
}

double algebra_defect(const Mat& m, Algebra a) { return sup_norm(m - project_to_algebra(m, a)); }

// ---------------------------------------------------------------------------

PolyMatrix::PolyMatrix(int rows, int cols, int degree)
    : rows_(rows), cols_(cols), degree_(degree) {
  if (degree < 0) throw ParameterError("polynomial degree must be non-negative");
  coeffs_.assign(static_cast<std::size_t>((degree + 1) * (degree + 2) / 2), zeros(rows, cols));
}

int PolyMatrix::index(int a, int b) const {
  // Monomials ordered by total degree, then by the power of x2.
  const int t = a + b;
  return t * (t + 1) / 2 + b;
}

Mat& PolyMatrix::coefficient(int a, int b) { return coeffs_[static_cast<std::size_t>(index(a, b))]; }

const Mat& PolyMatrix::coefficient(int a, int b) const {
  return coeffs_[static_cast<std::size_t>(index(a, b))];
}

PolyMatrix PolyMatrix::constant(const Mat& c) {
  PolyMatrix p(static_cast<int>(c.rows()), static_cast<int>(c.cols()), 0);
  p.coefficient(0, 0) = c;
  return p;
}

namespace {

Mat gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = cd(re, im);
    }
  }
  return m;
}

}  // namespace

PolyMatrix PolyMatrix::random(int n, int degree, double amplitude, Algebra alg,
                              std::mt19937_64& rng) {
  PolyMatrix p(n, n, degree);
  for (int t = 0; t <= degree; ++t) {
    for (int b = 0; b <= t; ++b) {
      const Mat g = gaussian_matrix(n, n, rng);
      p.coefficient(t - b, b) = (amplitude / (1.0 + t)) * project_to_algebra(g, alg);
    }
  }
  return p;
}

PolyMatrix PolyMatrix::random_vector(int n, int degree, double amplitude, std::mt19937_64& rng) {
  PolyMatrix p(n, 1, degree);
  for (int t = 0; t <= degree; ++t) {
    for (int b = 0; b <= t; ++b) {
      p.coefficient(t - b, b) = (amplitude / (1.0 + t)) * gaussian_matrix(n, 1, rng);
    }
  }
  return p;
}

Mat PolyMatrix::value(double x1, double x2) const {
  Mat out = zeros(rows_, cols_);
  double pa = 1.0;
  for (int a = 0; a <= degree_; ++a) {
    double pb = 1.0;
    for (int b = 0; a + b <= degree_; ++b) {
      out += (pa * pb) * coefficient(a, b);
      pb *= x2;
    }
    pa *= x1;
  }
  return out;
}

Mat PolyMatrix::d1(double x1, double x2) const {
  Mat out = zeros(rows_, cols_);
  for (int a = 1; a <= degree_; ++a) {
    for (int b = 0; a + b <= degree_; ++b) {
      out += (a * std::pow(x1, a - 1) * std::pow(x2, b)) * coefficient(a, b);
    }
  }
  return out;
}

Mat PolyMatrix::d2(double x1, double x2) const {
  Mat out = zeros(rows_, cols_);
  for (int a = 0; a <= degree_; ++a) {
    for (int b = 1; a + b <= degree_; ++b) {
      out += (b * std::pow(x1, a) * std::pow(x2, b - 1)) * coefficient(a, b);
    }
  }
  return out;
}

double cutoff_factor(double x1, double x2, int m) {
  if (m <= 0) return 1.0;
  const double s = 1.0 - x1 * x1 - x2 * x2;
  return s > 0.0 ? std::pow(s, m) : 0.0;
}

// ---------------------------------------------------------------------------

PairAttenuation PairAttenuation::zero(int n) {
  const MatrixField z = [n](double, double) { return zeros(n, n); };
  return {n, z, z, z};
}

PairAttenuation PairAttenuation::constant_higgs(const Mat& phi) {
  const int n = static_cast<int>(phi.rows());
  PairAttenuation p = zero(n);
  p.Phi = [phi](double, double) { return phi; };
  return p;
}

Mat PairAttenuation::connection(const ConformalMetric& m, double x1, double x2, double theta) const {
  const double e = std::exp(-m.sample(x1, x2).lambda);
  return (e * std::cos(theta)) * A1(x1, x2) + (e * std::sin(theta)) * A2(x1, x2);
}

Mat PairAttenuation::eval(const ConformalMetric& m, double x1, double x2, double theta) const {
  return connection(m, x1, x2, theta) + Phi(x1, x2);
}

// ---------------------------------------------------------------------------

AttenuationField AttenuationField::constant(const Mat& c) {
  AttenuationField f(static_cast<int>(c.rows()));
  f.set_mode(0, [c](double, double) { return c; });
  return f;
}

AttenuationField AttenuationField::from_pair(const PairAttenuation& pair, const ConformalMetric& m) {
  AttenuationField f(pair.n);
  const cd I(0.0, 1.0);
  f.modes_[0] = pair.Phi;
  f.modes_[1] = [pair, m, I](double x1, double x2) {
    const double e = std::exp(-m.sample(x1, x2).lambda);
    return Mat((0.5 * e) * (pair.A1(x1, x2) - I * pair.A2(x1, x2)));
  };
  f.modes_[-1] = [pair, m, I](double x1, double x2) {
    const double e = std::exp(-m.sample(x1, x2).lambda);
    return Mat((0.5 * e) * (pair.A1(x1, x2) + I * pair.A2(x1, x2)));
  };
  f.direct_ = [pair, m](double x1, double x2, double theta) {
    return pair.eval(m, x1, x2, theta);
  };
  return f;
}

AttenuationField AttenuationField::from_grid(const FiberFunction& g, int band) {
  if (g.rows() != g.cols()) throw ParameterError("attenuation values must be square");
  AttenuationField f(g.rows());
  for (int k = -band; k <= band; ++k) {
    auto interp = std::make_shared<FiberInterpolator>(project_mode(g, k));
    f.modes_[k] = [interp](double x1, double x2) { return (*interp)(x1, x2, 0.0); };
  }
  return f;
}

void AttenuationField::set_mode(int k, MatrixField field) {
  modes_[k] = std::move(field);
  direct_ = nullptr;
}

std::vector<int> AttenuationField::support() const {
  std::vector<int> s;
  for (const auto& [k, _] : modes_) s.push_back(k);
  return s;
}

Mat AttenuationField::mode(int k, double x1, double x2) const {
  const auto it = modes_.find(k);
  if (it == modes_.end()) return zeros(n_, n_);
  return it->second(x1, x2);
}

Mat AttenuationField::operator()(double x1, double x2, double theta) const {
  if (direct_) return direct_(x1, x2, theta);
  Mat out = zeros(n_, n_);
  for (const auto& [k, f] : modes_) {
    if (k == 0) {
      out += f(x1, x2);
    } else {
      out += std::polar(1.0, k * theta) * f(x1, x2);
    }
  }
  return out;
}

FiberFunction AttenuationField::sample(const SMGrid& grid, const ConformalMetric& m) const {
  return FiberFunction::sample(grid, m, n_, n_, [this](double x1, double x2, double t) {
    return (*this)(x1, x2, t);
  });
}

AttenuationField AttenuationField::operator-(const AttenuationField& o) const {
  if (o.n_ != n_) throw ParameterError("attenuation sizes differ");
  AttenuationField out(n_);
  std::vector<int> ks = support();
  for (int k : o.support()) {
    if (!has_mode(k)) ks.push_back(k);
  }
  for (int k : ks) {
    out.modes_[k] = [a = *this, b = o, k](double x1, double x2) {
      return Mat(a.mode(k, x1, x2) - b.mode(k, x1, x2));
    };
  }
  if (direct_ || o.direct_) {
    out.direct_ = [a = *this, b = o](double x1, double x2, double t) {
      return Mat(a(x1, x2, t) - b(x1, x2, t));
    };
  }
  return out;
}

AttenuationField AttenuationField::adjoint() const {
  AttenuationField out(n_);
  for (const auto& [k, f] : modes_) {
    // (a_k e^{ik theta})^* = a_k^* e^{-ik theta}
    out.modes_[-k] = [f](double x1, double x2) { return Mat(f(x1, x2).adjoint()); };
  }
  if (direct_) {
    out.direct_ = [d = direct_](double x1, double x2, double t) { return Mat(d(x1, x2, t).adjoint()); };
  }
  return out;
}

AttenuationField AttenuationField::scaled(cd s) const {
  AttenuationField out(n_);
  for (const auto& [k, f] : modes_) {
    out.modes_[k] = [f, s](double x1, double x2) { return Mat(s * f(x1, x2)); };
  }
  if (direct_) {
    out.direct_ = [d = direct_, s](double x1, double x2, double t) { return Mat(s * d(x1, x2, t)); };
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ParameterError("matrix must be a non-empty array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  if (rows > 4 || cols > 4 || cols == 0) throw ParameterError("matrix larger than 4x4");
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ParameterError("ragged matrix rows");
    for (int c = 0; c < cols; ++c) {
      const auto& e = j[r][c];
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2) {
        m(r, c) = cd(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ParameterError("matrix entries must be numbers or [re, im]");
      }
    }
  }
  return m;
}

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

FieldSpec field_spec_from_json(const nlohmann::json& j) {
  FieldSpec s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw ParameterError("coefficient spec must be an object or null");
  if (j.contains("constant")) {
    s.kind = FieldSpec::Kind::constant;
    s.constant = matrix_from_json(j.at("constant"));
    return s;
  }
  s.kind = FieldSpec::Kind::random;
  s.algebra = algebra_from_string(j.value("algebra", std::string("gl")));
  s.degree = j.value("degree", 1);
  s.amplitude = j.value("amplitude", 0.3);
  if (s.degree < 0 || s.degree > 6) throw ParameterError("polynomial degree must lie in [0, 6]");
  if (!(s.amplitude >= 0)) throw ParameterError("amplitude must be non-negative");
  return s;
}

PairSpec pair_spec_from_json(const nlohmann::json& j) {
  PairSpec p;
  if (!j.is_object()) throw ParameterError("pair must be an object");
  p.n = j.value("n", 1);
  if (p.n < 1 || p.n > 4) throw ParameterError("pair size n must lie in [1, 4]");
  p.seed = j.value("seed", std::uint64_t{0});
  p.cutoff = j.value("cutoff", 0);
  if (p.cutoff < 0) throw ParameterError("cutoff power must be non-negative");
  const nlohmann::json a = j.value("A", nlohmann::json());
  if (a.is_object() && (a.contains("A1") || a.contains("A2"))) {
    p.A1 = field_spec_from_json(a.value("A1", nlohmann::json()));
    p.A2 = field_spec_from_json(a.value("A2", nlohmann::json()));
  } else {
    p.A1 = field_spec_from_json(a);
    p.A2 = p.A1;
  }
  p.Phi = field_spec_from_json(j.value("Phi", nlohmann::json()));
  for (const FieldSpec* f : {&p.A1, &p.A2, &p.Phi}) {
    if (f->kind == FieldSpec::Kind::constant && (f->constant.rows() != p.n || f->constant.cols() != p.n)) {
      throw ParameterError("constant coefficient does not match n");
    }
  }
  return p;
}

namespace {

MatrixField build_field(const FieldSpec& s, int n, int cutoff, std::mt19937_64& rng) {
  switch (s.kind) {
    case FieldSpec::Kind::zero:
      return [n](double, double) { return zeros(n, n); };
    case FieldSpec::Kind::constant:
      return [c = s.constant, cutoff](double x1, double x2) {
        return Mat(cutoff_factor(x1, x2, cutoff) * c);
      };
    case FieldSpec::Kind::random: {
      auto poly = std::make_shared<PolyMatrix>(PolyMatrix::random(n, s.degree, s.amplitude, s.algebra, rng));
      return [poly, cutoff](double x1, double x2) {
        return Mat(cutoff_factor(x1, x2, cutoff) * poly->value(x1, x2));
      };
    }
  }
  return [n](double, double) { return zeros(n, n); };
}

}  // namespace

PairAttenuation make_pair(const PairSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  PairAttenuation p;
  p.n = spec.n;
  p.A1 = build_field(spec.A1, spec.n, spec.cutoff, rng);
  p.A2 = build_field(spec.A2, spec.n, spec.cutoff, rng);
  p.Phi = build_field(spec.Phi, spec.n, spec.cutoff, rng);
  return p;
}

PairAttenuation random_pair(int n, std::uint64_t seed, Algebra alg, int degree, double amp_A,
                            double amp_Phi, int cutoff) {
  PairSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.cutoff = cutoff;
  for (FieldSpec* f : {&spec.A1, &spec.A2, &spec.Phi}) {
    f->kind = FieldSpec::Kind::random;
    f->algebra = alg;
    f->degree = degree;
  }
  spec.A1.amplitude = spec.A2.amplitude = amp_A;
  spec.Phi.amplitude = amp_Phi;
  return make_pair(spec);
}

}  // namespace naxray
