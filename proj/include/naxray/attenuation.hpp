#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "naxray/fiber.hpp"
#include "naxray/geometry.hpp"
#include "naxray/linalg.hpp"

namespace naxray {

/// Matrix-valued function of the base point.
using MatrixField = std::function<Mat(double x1, double x2)>;

/// Matrix Lie algebras used to constrain random coefficients.
enum class Algebra { gl, u, su, so, sl, hermitian };

Algebra algebra_from_string(const std::string& tag);
std::string to_string(Algebra a);

/// Orthogonal-ish projection of an arbitrary matrix into the algebra.
Mat project_to_algebra(const Mat& m, Algebra a);
/// Distance of m from the algebra (max-abs of m - projection).
double algebra_defect(const Mat& m, Algebra a);

/// Matrix polynomial sum_{a+b<=deg} c_{ab} x1^a x2^b with exact derivatives.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols, int degree);

  static PolyMatrix constant(const Mat& c);
  /// Gaussian coefficients scaled by amplitude / (1 + a + b), projected to alg.
  static PolyMatrix random(int n, int degree, double amplitude, Algebra alg, std::mt19937_64& rng);
  /// Column vector version (n x 1), unconstrained complex coefficients.
  static PolyMatrix random_vector(int n, int degree, double amplitude, std::mt19937_64& rng);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int degree() const { return degree_; }
  Mat& coefficient(int a, int b);
  const Mat& coefficient(int a, int b) const;

  Mat value(double x1, double x2) const;
  Mat d1(double x1, double x2) const;
  Mat d2(double x1, double x2) const;

 private:
  int index(int a, int b) const;
  int rows_ = 1;
  int cols_ = 1;
  int degree_ = 0;
  std::vector<Mat> coeffs_;
};

/// (1 - |x|^2)_+^m; m = 0 means no cutoff.
double cutoff_factor(double x1, double x2, int m);

/// The pair (A, Phi): a matrix 1-form A = A1 dx1 + A2 dx2 and a matrix field.
/// On SM, A(x, v) with v = e^{-lambda}(cos theta, sin theta), so the combined
/// function A(v) + Phi occupies the vertical modes -1, 0, 1.
struct PairAttenuation {
  int n = 1;
  MatrixField A1;
  MatrixField A2;
  MatrixField Phi;

  static PairAttenuation zero(int n);
  static PairAttenuation constant_higgs(const Mat& phi);

  /// A(v) + Phi at (x, theta).
  Mat eval(const ConformalMetric& m, double x1, double x2, double theta) const;
  /// A(v) alone.
  Mat connection(const ConformalMetric& m, double x1, double x2, double theta) const;
};

/// Smooth matrix function on SM with finitely many vertical modes:
/// sum_k a_k(x) e^{i k theta}.
class AttenuationField {
 public:
  AttenuationField() = default;
  explicit AttenuationField(int n) : n_(n) {}

  static AttenuationField zero(int n) { return AttenuationField(n); }
  static AttenuationField constant(const Mat& c);
  static AttenuationField from_pair(const PairAttenuation& pair, const ConformalMetric& m);
  /// Modes -band..band of a gridded function (coefficients interpolated in x).
  static AttenuationField from_grid(const FiberFunction& f, int band);

  int n() const { return n_; }
  void set_mode(int k, MatrixField f);
  bool has_mode(int k) const { return modes_.count(k) != 0; }
  std::vector<int> support() const;

  /// a_k(x); zero if k is not in the support.
  Mat mode(int k, double x1, double x2) const;
  Mat operator()(double x1, double x2, double theta) const;
  Mat operator()(const PhasePoint& p) const { return (*this)(p.x1, p.x2, p.theta); }

  FiberFunction sample(const SMGrid& grid, const ConformalMetric& m) const;

  AttenuationField operator-(const AttenuationField& o) const;
  /// Pointwise adjoint a(x, theta)^*.
  AttenuationField adjoint() const;
  AttenuationField scaled(cd s) const;

 private:
  int n_ = 1;
  std::map<int, MatrixField> modes_;
  // Fast path used instead of the mode sum when set.
  std::function<Mat(double, double, double)> direct_;
};

// ---------------------------------------------------------------------------
// Construction from JSON.
//
// Coefficient spec: null | {"constant": matrix} |
//   {"algebra": tag, "degree": d, "amplitude": a}
// Pair spec: {"n": n, "seed": s, "cutoff": m, "A": spec, "Phi": spec}
// Matrices are arrays of rows; entries are numbers or [re, im].
// ---------------------------------------------------------------------------

Mat matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Mat& m);

struct FieldSpec {
  enum class Kind { zero, constant, random } kind = Kind::zero;
  Mat constant;
  Algebra algebra = Algebra::gl;
  int degree = 1;
  double amplitude = 0.3;
};

FieldSpec field_spec_from_json(const nlohmann::json& j);

struct PairSpec {
  int n = 1;
  std::uint64_t seed = 0;
  int cutoff = 0;
  FieldSpec A1;
  FieldSpec A2;
  FieldSpec Phi;
};

PairSpec pair_spec_from_json(const nlohmann::json& j);

/// Builds the pair; random fields draw from one generator in the order
/// A1, A2, Phi.
PairAttenuation make_pair(const PairSpec& spec);

/// Random polynomial pair with given algebras; cutoff m multiplies every
/// coefficient by (1 - |x|^2)_+^m.
PairAttenuation random_pair(int n, std::uint64_t seed, Algebra alg, int degree,
                            double amp_A, double amp_Phi, int cutoff = 0);

}  // namespace naxray
