#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "naxray/attenuation.hpp"
#include "naxray/loop.hpp"
#include "naxray/transport.hpp"

namespace naxray {

/// Unusable configuration: parse errors, wrong types, out-of-range values.
struct ConfigError : Error {
  using Error::Error;
};

struct SolverSettings {
  double step = 1e-2;
  double root_tol = 1e-10;
  double max_time = 20.0;
  double fact_tol = 1e-13;
  int max_iter = 60;
};

struct OutputSettings {
  std::string directory = "naxray_out";
  std::set<std::string> formats{"csv", "json", "svg"};
  int entry_row = 0;  // scattering matrix entry shown in the heatmap
  int entry_col = 0;

  bool wants(const std::string& f) const { return formats.count(f) != 0; }
};

/// Bounds checked by parse_scenario.
inline constexpr int kMaxThetaSamples = 1024;
inline constexpr int kMaxRadialSamples = 1025;
inline constexpr int kMaxAngularSamples = 4096;
inline constexpr int kMaxBoundarySamples = 4096;

struct ScenarioConfig {
  nlohmann::json source;  // the parsed file, echoed into outputs
  ConformalMetric metric;
  PairSpec pair;
  std::optional<PairSpec> pair_b;
  SMGrid grid;
  BoundaryGrid boundary;
  SolverSettings solver;
  std::string experiment;
  nlohmann::json experiment_params = nlohmann::json::object();
  OutputSettings output;
  int threads = 1;

  TransportConfig transport() const;
  FactorizationOptions factorization() const;
};

/// Throws ConfigError.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct CommandResult {
  int exit_code = 0;  // 0 pass, 1 numeric failure
  std::string verdict;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"validate", "scatter", "factorize", "verify", "reconstruct"};
  return names;
}

/// Runs one command and writes its files under cfg.output.directory.
/// Numeric failures are reported through the exit code; ConfigError
/// propagates.
CommandResult run_command(const std::string& command, const ScenarioConfig& cfg);

/// Identities known to the verify command.
const std::vector<std::string>& verify_identities();

}  // namespace naxray
