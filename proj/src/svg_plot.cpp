#include "gcmlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 320.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 110.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf) == "-0.00" ? "0.00" : buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    default: out += c;
    }
  }
  return out;
}

} // namespace

std::string render_svg(const PlotPanel& panel) {
  double x_max = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
  for (const auto& s : panel.series) {
    for (const auto& [x, y] : s.points) {
      x_max = std::max(x_max, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_max <= 0.0) x_max = 1.0;
  const double pad = std::max(0.1 * (y_hi - y_lo), 1e-3);
  y_lo -= pad;
  y_hi += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + x / x_max * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(panel.title) + "</text>\n";
  // axes
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
         num(kLeft + plot_w) + "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y_lo + (y_hi - y_lo) * k / 4.0;
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + tick(yv) + "</text>\n";
    const double xv = x_max * k / 4.0;
    svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + plot_h + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + tick(xv) + "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">missing rate</text>\n";
  svg += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) + "\" transform=\"rotate(-90 16 " +
         num(kTop + plot_h / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(panel.y_label) + "</text>\n";
  // zero reference
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(kLeft + plot_w) +
         "\" y2=\"" + num(py(0.0)) + "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

  for (std::size_t s = 0; s < panel.series.size(); ++s) {
    const auto& series = panel.series[s];
    const char* color = kColors[s % std::size(kColors)];
    std::string pts;
    for (const auto& [x, y] : series.points) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(x)) + "," + num(py(y));
    }
    if (series.points.size() > 1) {
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    }
    for (const auto& [x, y] : series.points) {
      svg += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" +
             color + "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    svg += "<line x1=\"" + num(kLeft + plot_w + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kLeft + plot_w + 32) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kLeft + plot_w + 38) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<NamedPanel> bias_panels(std::span<const SummaryRow> rows, const std::string& parameter) {
  if (!param_from_name(parameter)) throw ValidationError("plot: unknown parameter '" + parameter + "'");

  std::set<std::pair<std::string, int>> keys;
  for (const auto& r : rows) {
    if (r.parameter == parameter) keys.insert({r.mechanism, r.n});
  }
  if (keys.empty()) throw ValidationError("plot: no summary rows for parameter '" + parameter + "'");

  std::vector<NamedPanel> panels;
  for (const std::string mech : {"MAR", "MNAR"}) {
    for (const auto& [m, n] : keys) {
      if (m != mech) continue;
      std::optional<double> complete;
      std::string bias_type = "relative";
      std::map<int, PlotSeries> by_method;
      for (const auto& r : rows) {
        if (r.parameter != parameter || r.mechanism != mech || r.n != n || !r.bias) continue;
        bias_type = r.bias_type;
        if (r.method == "COMPLETE") {
          complete = *r.bias;
          continue;
        }
        const auto method = method_from_name(r.method);
        const int rank = method ? static_cast<int>(*method) : 100;
        auto& series = by_method[rank];
        series.label = r.method;
        series.points.emplace_back(r.rate, *r.bias);
      }
      PlotPanel panel;
      panel.title = parameter + " | " + mech + " | N = " + std::to_string(n);
      panel.y_label = bias_type == "raw" ? "bias" : "relative bias";
      for (auto& [rank, series] : by_method) {
        if (complete) series.points.emplace_back(0.0, *complete);
        std::sort(series.points.begin(), series.points.end());
        panel.series.push_back(std::move(series));
      }
      if (panel.series.empty() && complete) panel.series.push_back({"COMPLETE", {{0.0, *complete}}});
      panels.push_back({parameter + "_" + mech + "_N" + std::to_string(n), std::move(panel)});
    }
  }
  return panels;
}

} // namespace gcmlab
