#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "naxray/fiber.hpp"

namespace naxray {

/// %.17g; non-finite values become "nan", "inf", "-inf".
std::string format_real(double x);

/// JSON with every float printed at 17 significant digits. Non-finite floats
/// are written as null. Object keys come out sorted.
void write_json(std::ostream& os, const nlohmann::json& j, int indent = 2);
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// Writes text to a file, creating parent directories. Throws Error on I/O
/// failure.
void write_file(const std::filesystem::path& path, const std::string& text);

/// Row-major scalar field for plotting: value(row, col) with rows along y.
struct Heatmap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  bool log_scale = false;

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// Self-contained SVG (no external fonts, styles or images).
void write_svg(std::ostream& os, const Heatmap& h);

/// max over theta of |component| per spatial node, as an (r, phi) heatmap.
Heatmap fiber_heatmap(const FiberFunction& u, const std::string& title, bool log_scale);

/// Columns r, phi, value with the max over theta of the sup-norm per node.
void write_node_csv(std::ostream& os, const FiberFunction& u);

struct ExperimentReport {
  std::string experiment;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json defects = nlohmann::json::object();
  std::string verdict = "pass";
  nlohmann::json grid = nlohmann::json::array();
  double runtime_s = 0.0;

  nlohmann::json to_json() const;
};

}  // namespace naxray
