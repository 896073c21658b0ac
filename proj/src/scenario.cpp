#include "naxray/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "naxray/gauge.hpp"
#include "naxray/report.hpp"

namespace naxray {

namespace {

using nlohmann::json;

// Pass thresholds of the verify identities and of the other commands.
constexpr double kCocycleTol = 1e-6;
constexpr double kOutfluxTol = 1e-5;
constexpr double kPseudoTol = 1e-5;
constexpr double kGaugeTol = 1e-5;
constexpr double kIntegralTol = 1e-5;
constexpr double kUnitaryIdentityTol = 1e-6;
constexpr double kUnitaryTol = 1e-7;
constexpr double kSubgroupTol = 1e-7;
constexpr double kConjugationTol = 1e-4;
constexpr double kReconTol = 1e-7;
constexpr double kHolTol = 1e-8;
constexpr double kUnitUTol = 1e-8;
constexpr double kTransformTol = 1e-4;
constexpr double kKernelTransformTol = 1e-5;
constexpr double kKernelSolutionTol = 1e-3;
constexpr double kKernelHolTol = 1e-6;

int get_int(const json& j, const char* key, int fallback, int lo, int hi) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError(std::string("\"") + key + "\" must be an integer");
  }
  const long long x = v.get<long long>();
  if (x < lo || x > hi) {
    std::ostringstream os;
    os << "\"" << key << "\" must lie in [" << lo << ", " << hi << "], got " << x;
    throw ConfigError(os.str());
  }
  return static_cast<int>(x);
}

double get_positive(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  const double x = v.get<double>();
  if (!(x > 0) || !std::isfinite(x)) throw ConfigError(std::string("\"") + key + "\" must be positive");
  return x;
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& v = j.at(key);
  if (!v.is_object()) throw ConfigError(std::string("\"") + key + "\" must be an object");
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// File sink rooted at the output directory.
struct Outputs {
  std::filesystem::path dir;
  CommandResult* result;

  void text(const std::string& name, const std::string& body) {
    const auto path = dir / name;
    write_file(path, body);
    result->files.push_back(path);
  }
  void json_file(const std::string& name, const json& j) { text(name, dump_json(j)); }
};

json sm_grid_json(const SMGrid& g) { return json::array({g.n_r, g.n_phi, g.n_theta}); }
json boundary_json(const BoundaryGrid& b) { return json::array({b.n_beta, b.n_mu}); }

PairAttenuation pair_of(const ScenarioConfig& cfg) { return make_pair(cfg.pair); }

std::string verdict_of(bool ok) { return ok ? "pass" : "fail"; }

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

void cmd_validate(const ScenarioConfig& cfg, Outputs& out) {
  CommandResult& res = *out.result;
  const auto t0 = std::chrono::steady_clock::now();
  const SimplicityReport rep = validate_simplicity(cfg.metric);
  ExperimentReport r;
  r.experiment = "validate";
  r.inputs = {{"metric", cfg.metric.to_json()}};
  r.defects = {{"min_boundary_curvature", rep.min_boundary_curvature},
               {"min_jacobi", rep.min_jacobi},
               {"max_exit_time", rep.max_exit_time}};
  r.verdict = verdict_of(rep.simple());
  r.grid = json::array({rep.geodesics_sampled, rep.boundary_points_sampled});
  r.runtime_s = seconds_since(t0);
  out.json_file("validate.json", r.to_json());
  out.json_file("simplicity.json", rep.to_json());
  if (!rep.strictly_convex) res.messages.push_back("boundary is not strictly convex");
  if (!rep.non_trapping) res.messages.push_back("trapped geodesics found");
  if (!rep.no_conjugate_points) res.messages.push_back("conjugate points found");
  res.verdict = r.verdict;
  res.exit_code = rep.simple() ? 0 : 1;
}

void require_simple(const ScenarioConfig& cfg) {
  const SimplicityReport rep = validate_simplicity(cfg.metric);
  if (!rep.simple()) throw InputError("metric is not simple: " + rep.to_json().dump());
}

// ---------------------------------------------------------------------------
// scatter
// ---------------------------------------------------------------------------

void cmd_scatter(const ScenarioConfig& cfg, Outputs& out) {
  CommandResult& res = *out.result;
  require_simple(cfg);
  const std::string side_name = cfg.experiment_params.value("side", std::string("plus"));
  if (side_name != "plus" && side_name != "minus") throw ConfigError("side must be \"plus\" or \"minus\"");
  const Side side = side_name == "plus" ? Side::plus : Side::minus;
  const AttenuationField a = AttenuationField::from_pair(pair_of(cfg), cfg.metric);
  const ScatteringData data = scattering_data(cfg.metric, a, cfg.boundary, cfg.transport(), side);

  if (cfg.output.wants("csv")) {
    std::ostringstream os;
    data.write_csv(os);
    out.text("scattering.csv", os.str());
  }
  json summary = data.summary();
  json failures = json::array();
  for (const auto& f : data.failures) {
    failures.push_back({{"beta", f.b.beta}, {"mu", f.b.mu}, {"error", f.what}});
  }
  summary["failures"] = failures;
  out.json_file("scattering.json", summary);

  if (cfg.output.wants("svg")) {
    if (cfg.output.entry_row >= data.n || cfg.output.entry_col >= data.n) {
      throw ConfigError("heatmap entry is outside the matrix");
    }
    Heatmap h;
    h.rows = cfg.boundary.n_mu;
    h.cols = cfg.boundary.n_beta;
    h.values.assign(static_cast<std::size_t>(h.rows) * h.cols, 0.0);
    for (int ib = 0; ib < h.cols; ++ib) {
      for (int im = 0; im < h.rows; ++im) {
        const Mat& v = data.values[static_cast<std::size_t>(ib) * h.rows + im];
        h.at(im, ib) = std::abs(v(cfg.output.entry_row, cfg.output.entry_col));
      }
    }
    std::ostringstream title;
    title << "|C[" << cfg.output.entry_row << "," << cfg.output.entry_col << "]| over the influx boundary";
    h.title = title.str();
    h.x_label = "beta";
    h.y_label = "mu";
    h.x_min = data.grid.front().beta;
    h.x_max = data.grid.back().beta;
    h.y_min = data.grid.front().mu;
    h.y_max = data.grid.back().mu;
    std::ostringstream os;
    write_svg(os, h);
    out.text("scattering.svg", os.str());
  }
  for (const auto& f : data.failures) {
    std::ostringstream os;
    os << "geodesic (beta=" << format_real(f.b.beta) << ", mu=" << format_real(f.b.mu) << "): " << f.what;
    res.messages.push_back(os.str());
  }
  res.verdict = verdict_of(data.failures.empty());
  res.exit_code = data.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// factorize
// ---------------------------------------------------------------------------

void cmd_factorize(const ScenarioConfig& cfg, Outputs& out) {
  CommandResult& res = *out.result;
  const auto t0 = std::chrono::steady_clock::now();
  require_simple(cfg);
  const AttenuationField a = AttenuationField::from_pair(pair_of(cfg), cfg.metric);
  const FiberFunction R = integrating_factor(cfg.metric, a, cfg.grid, cfg.transport());
  const FactorizationResult fact = factorize(R, cfg.factorization());
  const TransformResult tr = transform_attenuation(a, fact, kTransformTol);
  const ModeEquationResiduals me = mode_equation_residuals(a, fact.F, tr.B);

  ExperimentReport r;
  r.experiment = "factorize";
  r.inputs = cfg.source;
  r.defects = fact.diagnostics();
  r.defects.erase("spike");
  r.defects["R_transport_residual"] = integrating_factor_grid_residual(R, a, tr.ring_limit);
  r.defects["skew_defect"] = tr.skew_defect;
  r.defects["outband"] = tr.outband;
  r.defects["route_deviation"] = tr.route_deviation;
  r.defects["mode_pairing"] = tr.mode_pairing;
  r.defects["mode_residual_minus1"] = me.res_minus1;
  r.defects["mode_residual_0"] = me.res_0;
  r.defects["mode_B_minus1_deviation"] = me.b_minus1_dev;
  r.defects["mode_B_0_deviation"] = me.b_0_dev;
  const bool ok = fact.recon_res <= kReconTol && fact.holF <= kHolTol && fact.holFinv <= kHolTol &&
                  fact.unitU <= kUnitUTol && tr.skew_defect <= kTransformTol && tr.outband <= kTransformTol &&
                  tr.route_deviation <= kTransformTol && me.res_minus1 <= kTransformTol &&
                  me.res_0 <= kTransformTol && !fact.spike;
  if (fact.spike) res.messages.push_back("fibre-to-fibre spike in F (possible branch switch)");
  r.verdict = verdict_of(ok);
  r.grid = sm_grid_json(cfg.grid);
  r.runtime_s = seconds_since(t0);
  json j = r.to_json();
  j["ring_limit"] = tr.ring_limit;
  out.json_file("factorize.json", j);

  if (cfg.output.wants("svg")) {
    const FiberFunction skew = tr.B + pointwise_adjoint(tr.B);
    std::ostringstream os;
    write_svg(os, fiber_heatmap(skew, "max over theta of |B + B*|", true));
    out.text("skew_defect.svg", os.str());
  }
  if (cfg.output.wants("csv")) {
    std::ostringstream os;
    write_node_csv(os, tr.B + pointwise_adjoint(tr.B));
    out.text("skew_defect.csv", os.str());
  }
  res.verdict = r.verdict;
  res.exit_code = ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct IdentityOutcome {
  json defects = json::object();
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

GaugeElement gauge_from(const json& p, int n) {
  const json g = p.value("gauge", json::object());
  if (g.value("identity", false)) return GaugeElement::identity(n);
  return GaugeElement::random(n, g.value("seed", std::uint64_t{1}), g.value("degree", 2), g.value("amplitude", 0.3));
}

IdentityOutcome run_identity(const std::string& name, const ScenarioConfig& cfg) {
  const ConformalMetric& m = cfg.metric;
  const PairAttenuation pair = pair_of(cfg);
  const AttenuationField a = AttenuationField::from_pair(pair, m);
  const TransportConfig tc = cfg.transport();
  const json& p = cfg.experiment_params;
  IdentityOutcome o;
  if (name == "cocycle") {
    o.residual = cocycle_residual(m, a, p.value("samples", 100), p.value("seed", std::uint64_t{1}), tc.integrator);
    o.threshold = kCocycleTol;
  } else if (name == "outflux_relation") {
    o.residual = scattering_minus_check(m, a, cfg.boundary, tc);
    o.threshold = kOutfluxTol;
  } else if (name == "pseudo_linearization") {
    const PairAttenuation other = cfg.pair_b ? make_pair(*cfg.pair_b) : pair;
    o.residual = pseudo_linearization_residual(m, a, AttenuationField::from_pair(other, m), cfg.boundary, tc);
    o.threshold = kPseudoTol;
  } else if (name == "gauge_invariance") {
    o.residual = gauge_invariance_check(m, pair, gauge_from(p, pair.n), cfg.boundary, tc);
    o.threshold = kGaugeTol;
  } else if (name == "integral_formula") {
    const Source f = random_mode_source(pair.n, p.value("source_seed", std::uint64_t{1}));
    o.residual = integral_formula_check(m, a, f, 1, cfg.boundary.coordinates(), tc);
    o.threshold = kIntegralTol;
  } else if (name == "unitarity") {
    const UnitarityReport u = unitarity_criterion(m, pair.n, pair.Phi, cfg.boundary, tc);
    o.defects = u.defects();
    o.residual = u.identity_residual;
    o.threshold = kUnitaryIdentityTol;
    // A skew Higgs field must give unitary data.
    if (u.skew_defect <= 1e-12 && u.unitarity_defect > kUnitaryTol) {
      o.defects["residual"] = o.residual;
      o.defects["threshold"] = o.threshold;
      o.pass = false;
      return o;
    }
  } else if (name == "subgroup") {
    const Algebra alg = algebra_from_string(p.value("algebra", std::string("u")));
    const SubgroupReport s = subgroup_preservation(m, pair, alg, cfg.boundary, tc);
    o.defects = s.defects();
    o.residual = std::max({s.group_defect, s.det_defect, s.real_defect});
    o.threshold = kSubgroupTol;
  } else if (name == "transform_conjugation") {
    const FiberFunction R = integrating_factor(m, a, cfg.grid, tc);
    const FactorizationResult fact = factorize(R, cfg.factorization());
    const TransformResult tr = transform_attenuation(a, fact, 1.0);
    const Source f = random_mode_source(pair.n, p.value("source_seed", std::uint64_t{1}));
    o.residual = conjugation_residual(m, a, fact.F, tr.attenuation(), f, cfg.boundary, tc);
    o.threshold = kConjugationTol;
  } else {
    throw ConfigError("unknown identity: " + name);
  }
  o.defects["residual"] = o.residual;
  o.defects["threshold"] = o.threshold;
  o.pass = o.residual <= o.threshold;
  return o;
}

void cmd_verify(const ScenarioConfig& cfg, Outputs& out) {
  CommandResult& res = *out.result;
  std::vector<std::string> names;
  if (cfg.experiment_params.contains("identities")) {
    const json& list = cfg.experiment_params.at("identities");
    if (!list.is_array()) throw ConfigError("\"identities\" must be an array of names");
    for (const auto& v : list) {
      if (!v.is_string()) throw ConfigError("\"identities\" must be an array of names");
      const std::string n = v.get<std::string>();
      const auto& known = verify_identities();
      if (std::find(known.begin(), known.end(), n) == known.end()) throw ConfigError("unknown identity: " + n);
      names.push_back(n);
    }
  } else {
    names = {"cocycle", "outflux_relation", "pseudo_linearization", "gauge_invariance", "integral_formula", "unitarity"};
  }
  if (cfg.pair_b) make_pair(*cfg.pair_b);
  require_simple(cfg);

  json summary = json::object();
  bool all = true;
  for (const auto& name : names) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport r;
    r.experiment = name;
    r.inputs = cfg.source;
    r.grid = name == "transform_conjugation" ? json::array({cfg.grid.n_r, cfg.grid.n_phi, cfg.grid.n_theta,
                                                            cfg.boundary.n_beta, cfg.boundary.n_mu})
                                             : boundary_json(cfg.boundary);
    json extra;
    try {
      const IdentityOutcome o = run_identity(name, cfg);
      r.defects = o.defects;
      r.verdict = verdict_of(o.pass);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      r.verdict = "fail";
      extra = e.what();
      res.messages.push_back(name + ": " + e.what());
    }
    r.runtime_s = seconds_since(t0);
    json j = r.to_json();
    if (!extra.is_null()) j["error"] = extra;
    out.json_file("verify_" + name + ".json", j);
    summary[name] = {{"verdict", r.verdict}, {"defects", r.defects}};
    if (r.verdict != "pass") {
      all = false;
      if (extra.is_null()) {
        std::ostringstream os;
        os << name << " failed: residual " << format_real(r.defects.value("residual", 0.0)) << " > "
           << format_real(r.defects.value("threshold", 0.0));
        res.messages.push_back(os.str());
      }
    }
  }
  out.json_file("verify.json", summary);
  res.verdict = verdict_of(all);
  res.exit_code = all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

void write_field(Outputs& out, const ScenarioConfig& cfg, const FiberFunction& f, const std::string& stem,
                 const std::string& title) {
  if (cfg.output.wants("csv")) {
    std::ostringstream os;
    write_node_csv(os, f);
    out.text(stem + ".csv", os.str());
  }
  if (cfg.output.wants("svg")) {
    std::ostringstream os;
    write_svg(os, fiber_heatmap(f, title, true));
    out.text(stem + ".svg", os.str());
  }
}

void cmd_reconstruct(const ScenarioConfig& cfg, Outputs& out) {
  CommandResult& res = *out.result;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string& exp = cfg.experiment;
  if (exp != "planted_gauge" && exp != "planted_kernel" && exp != "perturbation_witness") {
    throw ConfigError("reconstruct needs experiment.name in {planted_gauge, planted_kernel, perturbation_witness}");
  }
  require_simple(cfg);
  const json& p = cfg.experiment_params;
  const PairAttenuation pair = pair_of(cfg);
  ExperimentReport r;
  r.experiment = exp;
  r.inputs = cfg.source;
  r.grid = json::array({cfg.grid.n_r, cfg.grid.n_phi, cfg.grid.n_theta, cfg.boundary.n_beta, cfg.boundary.n_mu});
  ReconstructionOptions opt;
  opt.input_tol = p.contains("input_tol") ? get_positive(p, "input_tol", 1e-6) : 1e-6;

  bool ok = false;
  if (exp == "planted_kernel") {
    const json k = p.value("kernel", json::object());
    std::mt19937_64 rng(k.value("seed", std::uint64_t{1}));
    PlantedLinearKernel kernel{pair.n, PolyMatrix::random_vector(pair.n, k.value("degree", 2), k.value("amplitude", 0.5), rng)};
    const KernelReport kr = plant_linear_kernel(cfg.metric, pair, kernel, cfg.grid, cfg.boundary, cfg.transport());
    r.defects = kr.defects();
    ok = kr.transform_sup <= kKernelTransformTol && kr.solution_error <= kKernelSolutionTol &&
         kr.holomorphic <= kKernelHolTol && kr.antiholomorphic <= kKernelHolTol;
    r.verdict = verdict_of(ok);
    write_field(out, cfg, kr.error_field, "kernel_error", "max over theta of |u^f + p|");
  } else {
    PairAttenuation target;
    std::optional<GaugeElement> planted;
    if (exp == "planted_gauge") {
      planted = gauge_from(p, pair.n);
      target = gauge_apply(pair, *planted);
    } else {
      const json d = p.value("perturbation", json::object());
      const json entry = d.value("entry", json::array({0, 0}));
      const int i = entry.at(0).get<int>();
      const int j = entry.at(1).get<int>();
      if (i < 0 || j < 0 || i >= pair.n || j >= pair.n) throw ConfigError("perturbation entry is outside the matrix");
      const double delta = d.value("delta", 0.1);
      target = pair;
      target.Phi = [phi = pair.Phi, i, j, delta](double x1, double x2) {
        Mat v = phi(x1, x2);
        v(i, j) += delta;
        return v;
      };
    }
    const GaugeReconstruction rec = reconstruct_gauge(cfg.metric, pair, target, cfg.grid, cfg.boundary,
                                                      cfg.transport(), opt, planted ? &*planted : nullptr);
    r.defects = rec.defects();
    r.verdict = rec.verdict;
    if (rec.unreliable) res.messages.push_back("reconstruction unreliable: fibre-constancy defect above threshold");
    ok = exp == "planted_gauge" ? rec.verdict == "pass" : rec.verdict == "not-equivalent";
    if (planted && rec.planted_error) {
      write_field(out, cfg, rec.error_field, "gauge_error", "|recovered u - planted u|");
    }
  }
  r.runtime_s = seconds_since(t0);
  out.json_file("reconstruct.json", r.to_json());
  res.verdict = r.verdict;
  res.exit_code = ok ? 0 : 1;
}

}  // namespace

TransportConfig ScenarioConfig::transport() const {
  TransportConfig t;
  t.integrator.step = solver.step;
  t.integrator.root_tol = solver.root_tol;
  t.integrator.max_time = solver.max_time;
  t.threads = threads;
  return t;
}

FactorizationOptions ScenarioConfig::factorization() const {
  FactorizationOptions f;
  f.tol = solver.fact_tol;
  f.max_iter = solver.max_iter;
  f.threads = threads;
  return f;
}

const std::vector<std::string>& verify_identities() {
  static const std::vector<std::string> names{"cocycle",          "outflux_relation",
                                              "pseudo_linearization", "gauge_invariance",
                                              "integral_formula", "unitarity",
                                              "subgroup",         "transform_conjugation"};
  return names;
}

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ScenarioConfig c;
  c.source = j;
  try {
    if (!j.contains("metric")) throw ConfigError("configuration needs a \"metric\" section");
    c.metric = ConformalMetric::from_json(j.at("metric"));
    if (!(c.metric.epsilon() > 0)) throw ConfigError("metric epsilon must be positive");
    c.pair = pair_spec_from_json(j.contains("pair") ? j.at("pair") : json::object());
    if (j.contains("pair_b")) {
      c.pair_b = pair_spec_from_json(j.at("pair_b"));
      if (c.pair_b->n != c.pair.n) throw ConfigError("pair_b must have the same n as pair");
    }

    const json& g = section(j, "grids");
    c.grid.n_r = get_int(g, "n_r", c.grid.n_r, 7, kMaxRadialSamples);
    c.grid.n_phi = get_int(g, "n_phi", c.grid.n_phi, 4, kMaxAngularSamples);
    c.grid.n_theta = get_int(g, "n_theta", c.grid.n_theta, 1, kMaxThetaSamples);
    c.grid.validate();
    c.boundary.n_beta = get_int(g, "n_beta", c.boundary.n_beta, 1, kMaxBoundarySamples);
    c.boundary.n_mu = get_int(g, "n_mu", c.boundary.n_mu, 1, kMaxBoundarySamples);
    c.boundary.glancing_margin = get_positive(g, "glancing_margin", c.boundary.glancing_margin);
    if (c.boundary.glancing_margin >= kPi / 2 - kGlancingTolerance) {
      throw ConfigError("glancing_margin leaves no admissible directions");
    }

    const json& s = section(j, "solver");
    c.solver.step = get_positive(s, "step", c.solver.step);
    c.solver.root_tol = get_positive(s, "root_tol", c.solver.root_tol);
    c.solver.max_time = get_positive(s, "max_time", c.solver.max_time);
    c.solver.fact_tol = get_positive(s, "fact_tol", c.solver.fact_tol);
    c.solver.max_iter = get_int(s, "max_iter", c.solver.max_iter, 1, 10000);
    if (c.solver.step > 0.5) throw ConfigError("solver step must not exceed 0.5");

    const json& e = section(j, "experiment");
    c.experiment = e.value("name", std::string());
    c.experiment_params = e;

    const json& o = section(j, "output");
    c.output.directory = o.value("directory", c.output.directory);
    if (o.contains("formats")) {
      c.output.formats.clear();
      for (const auto& f : o.at("formats")) {
        const std::string name = f.get<std::string>();
        if (name != "csv" && name != "json" && name != "svg") throw ConfigError("unknown output format: " + name);
        c.output.formats.insert(name);
      }
    }
    if (o.contains("heatmap_entry")) {
      c.output.entry_row = o.at("heatmap_entry").at(0).get<int>();
      c.output.entry_col = o.at("heatmap_entry").at(1).get<int>();
      if (c.output.entry_row < 0 || c.output.entry_col < 0 || c.output.entry_row >= c.pair.n ||
          c.output.entry_col >= c.pair.n) {
        throw ConfigError("heatmap_entry is outside the matrix");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open configuration file " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

CommandResult run_command(const std::string& command, const ScenarioConfig& cfg) {
  static const std::map<std::string, std::function<void(const ScenarioConfig&, Outputs&)>> table{
      {"validate", cmd_validate},   {"scatter", cmd_scatter},         {"factorize", cmd_factorize},
      {"verify", cmd_verify},       {"reconstruct", cmd_reconstruct}};
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command: " + command);
  CommandResult result;
  Outputs out{cfg.output.directory, &result};
  out.json_file("config.json", cfg.source);
  try {
    it->second(cfg, out);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment parameter: ") + e.what());
  } catch (const Error& e) {
    result.exit_code = 1;
    result.verdict = "fail";
    result.messages.push_back(e.what());
    ExperimentReport r;
    r.experiment = command;
    r.inputs = cfg.source;
    r.verdict = "fail";
    json j = r.to_json();
    j["error"] = e.what();
    out.json_file(command + "_error.json", j);
  }
  return result;
}

}  // namespace naxray
