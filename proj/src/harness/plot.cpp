#include "atos/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace atos {

namespace {

constexpr double kWidth = 760.0;
constexpr double kPanelHeight = 380.0;
constexpr double kLeft = 80.0, kRight = 170.0, kTop = 40.0, kBottom = 50.0;
constexpr double kFloor = 1e-16;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;  // (x, log10 subopt)
};

}  // namespace

std::string emit_svg_plot(const RunArtifact& run) {
  std::size_t nonempty = 0;
  std::size_t n_problems = 0;
  for (const SolverRun& r : run.runs) {
    nonempty += r.trace.empty() ? 0 : 1;
    n_problems = std::max(n_problems, r.problem_index + 1);
  }
  if (nonempty == 0) throw std::invalid_argument("emit_svg_plot: no trace has any rows");

  const double height = kPanelHeight * static_cast<double>(n_problems);
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
         "\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < n_problems; ++pi) {
    bool use_time = false;
    for (const SolverRun& r : run.runs) {
      if (r.problem_index != pi) continue;
      for (const TraceRecord& t : r.trace) use_time = use_time || t.wall_ns > 0;
    }
    std::vector<Series> series;
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (const SolverRun& r : run.runs) {
      if (r.problem_index != pi) continue;
      Series s{r.solver, {}};
      for (const TraceRecord& t : r.trace) {
        if (!t.subopt || !std::isfinite(*t.subopt)) continue;
        const double x = use_time ? static_cast<double>(t.wall_ns) * 1e-9
                                  : static_cast<double>(t.iter);
        const double y = std::log10(std::max(*t.subopt, kFloor));
        s.pts.emplace_back(x, y);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
      series.push_back(std::move(s));
    }
    const double y0 = kPanelHeight * static_cast<double>(pi);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kPanelHeight - kTop - kBottom;
    if (!std::isfinite(xmin)) {
      xmin = 0.0;
      xmax = 1.0;
      ymin = -1.0;
      ymax = 0.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax <= ymin) ymax = ymin + 1.0;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return y0 + kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::string title = "problem " + std::to_string(pi);
    if (pi < run.problems.size()) title += ": " + to_string(run.problems[pi].kind);
    svg += "<g>\n<text x=\"" + num(kLeft) + "\" y=\"" + num(y0 + 24) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) + "</text>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(y0 + kTop) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    const int decades = static_cast<int>(ymax - ymin);
    const int step = std::max(1, decades / 8);
    for (int d = static_cast<int>(ymin); d <= static_cast<int>(ymax); d += step) {
      const double y = sy(d);
      svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + pw) +
             "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
      svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
             std::to_string(d) + "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
      const double xv = xmin + (xmax - xmin) * k / 4.0;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", xv);
      svg += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(y0 + kTop + ph + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + buf +
             "</text>\n";
    }
    svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(y0 + kPanelHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           (use_time ? "time (s)" : "iteration") + "</text>\n";
    svg += "<text x=\"18\" y=\"" + num(y0 + kTop + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 18 " +
           num(y0 + kTop + ph / 2) + ")\">objective suboptimality</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
      const Series& s = series[si];
      const char* color = kColors[si % std::size(kColors)];
      if (s.pts.size() == 1) {
        svg += "<circle cx=\"" + num(sx(s.pts[0].first)) + "\" cy=\"" + num(sy(s.pts[0].second)) +
               "\" r=\"4\" fill=\"" + color + "\"/>\n";
      } else if (s.pts.size() > 1) {
        svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(color) +
               "\" points=\"";
        for (std::size_t k = 0; k < s.pts.size(); ++k) {
          if (k) svg += ' ';
          svg += num(sx(s.pts[k].first)) + "," + num(sy(s.pts[k].second));
        }
        svg += "\"/>\n";
      }
      const double ly = y0 + kTop + 14 + 18.0 * static_cast<double>(si);
      const double lx = kLeft + pw + 12;
      svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) +
             "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      svg += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) + "</text>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace atos
