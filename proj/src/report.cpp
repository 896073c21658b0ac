#include "naxray/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "naxray/errors.hpp"

namespace naxray {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void emit(std::ostream& os, const nlohmann::json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_real(x) : "null");
      break;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        break;
      }
      os << '[' << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad;
        emit(os, v, indent, depth + 1);
      }
      os << nl << close << ']';
      break;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        break;
      }
      os << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << nlohmann::json(it.key()).dump() << (indent > 0 ? ": " : ":");
        emit(os, it.value(), indent, depth + 1);
      }
      os << nl << close << '}';
      break;
    }
    default:
      os << j.dump();
  }
}

// Viridis samples at 0, 1/8, ..., 1.
constexpr std::array<std::array<double, 3>, 9> kViridis = {{{68, 1, 84},
                                                            {71, 44, 122},
                                                            {59, 81, 139},
                                                            {44, 113, 142},
                                                            {33, 144, 141},
                                                            {39, 173, 129},
                                                            {92, 200, 99},
                                                            {170, 220, 50},
                                                            {253, 231, 37}}};

std::string colour(double t) {
  if (!std::isfinite(t)) return "#ff00ff";
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(t));
  const double f = t - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(kViridis[i][c] * (1 - f) + kViridis[i + 1][c] * f));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_json(std::ostream& os, const nlohmann::json& j, int indent) {
  emit(os, j, indent, 0);
  os << '\n';
}

std::string dump_json(const nlohmann::json& j, int indent) {
  std::ostringstream os;
  write_json(os, j, indent);
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

void write_svg(std::ostream& os, const Heatmap& h) {
  const double left = 70, top = 40, plot_w = 480, plot_h = 360, bar_w = 18;
  const double width = left + plot_w + 110, height = top + plot_h + 60;

  std::vector<double> v(h.values.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double x = h.values[i];
    if (h.log_scale) x = std::log10(std::max(x, 1e-300));
    v[i] = x;
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (h.log_scale) lo = std::max(lo, hi - 16.0);
  const double span = hi > lo ? hi - lo : 1.0;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
     << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(h.title) << "</text>\n";

  const double cw = plot_w / std::max(1, h.cols);
  const double ch = plot_h / std::max(1, h.rows);
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (int r = 0; r < h.rows; ++r) {
    for (int c = 0; c < h.cols; ++c) {
      const double t = (v[static_cast<std::size_t>(r) * h.cols + c] - lo) / span;
      // Row 0 at the bottom.
      const double y = top + plot_h - (r + 1) * ch;
      os << "<rect x=\"" << fmt(left + c * cw, "%.3f") << "\" y=\"" << fmt(y, "%.3f")
         << "\" width=\"" << fmt(cw + 0.02, "%.3f") << "\" height=\"" << fmt(ch + 0.02, "%.3f")
         << "\" fill=\"" << colour(t) << "\"/>\n";
    }
  }
  os << "</g>\n";
  os << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(plot_w)
     << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Axes: end labels only.
  const double base = top + plot_h;
  os << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(base + 16) << "\" text-anchor=\"start\">"
     << fmt(h.x_min, "%.4g") << "</text>\n";
  os << "<text x=\"" << fmt(left + plot_w) << "\" y=\"" << fmt(base + 16) << "\" text-anchor=\"end\">"
     << fmt(h.x_max, "%.4g") << "</text>\n";
  os << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(base + 34)
     << "\" text-anchor=\"middle\">" << escape_xml(h.x_label) << "</text>\n";
  os << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(base) << "\" text-anchor=\"end\">"
     << fmt(h.y_min, "%.4g") << "</text>\n";
  os << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(top + 10) << "\" text-anchor=\"end\">"
     << fmt(h.y_max, "%.4g") << "</text>\n";
  os << "<text x=\"18\" y=\"" << fmt(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << fmt(top + plot_h / 2) << ")\">" << escape_xml(h.y_label) << "</text>\n";

  // Colour bar.
  const double bx = left + plot_w + 20;
  const int steps = 64;
  for (int s = 0; s < steps; ++s) {
    const double y = top + plot_h - (s + 1) * plot_h / steps;
    os << "<rect x=\"" << fmt(bx) << "\" y=\"" << fmt(y, "%.3f") << "\" width=\"" << fmt(bar_w)
       << "\" height=\"" << fmt(plot_h / steps + 0.02, "%.3f") << "\" fill=\""
       << colour((s + 0.5) / steps) << "\"/>\n";
  }
  const std::string prefix = h.log_scale ? "1e" : "";
  os << "<text x=\"" << fmt(bx + bar_w + 4) << "\" y=\"" << fmt(top + 10) << "\">" << prefix
     << fmt(hi, "%.3g") << "</text>\n";
  os << "<text x=\"" << fmt(bx + bar_w + 4) << "\" y=\"" << fmt(top + plot_h) << "\">" << prefix
     << fmt(lo, "%.3g") << "</text>\n";
  os << "</svg>\n";
}

Heatmap fiber_heatmap(const FiberFunction& u, const std::string& title, bool log_scale) {
  const SMGrid& g = u.grid();
  Heatmap h;
  h.rows = g.n_r;
  h.cols = g.n_phi;
  h.values.assign(static_cast<std::size_t>(h.rows) * h.cols, 0.0);
  h.title = title;
  h.x_label = "phi";
  h.y_label = "r";
  h.x_min = 0.0;
  h.x_max = kTwoPi * (g.n_phi - 1) / g.n_phi;
  h.log_scale = log_scale;
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      double m = 0.0;
      for (int k = 0; k < g.n_theta; ++k) m = std::max(m, sup_norm(u.at(i, j, k)));
      h.at(i, j) = m;
    }
  }
  return h;
}

void write_node_csv(std::ostream& os, const FiberFunction& u) {
  const SMGrid& g = u.grid();
  os << "r,phi,value\n";
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      double m = 0.0;
      for (int k = 0; k < g.n_theta; ++k) m = std::max(m, sup_norm(u.at(i, j, k)));
      os << format_real(g.r(i)) << ',' << format_real(g.phi(j)) << ',' << format_real(m) << '\n';
    }
  }
}

nlohmann::json ExperimentReport::to_json() const {
  return {{"experiment", experiment}, {"inputs", inputs},   {"defects", defects},
          {"verdict", verdict},       {"grid", grid},       {"runtime_s", runtime_s}};
}

}  // namespace naxray
