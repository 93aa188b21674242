#ifndef GCMLAB_SVG_PLOT_HPP
#define GCMLAB_SVG_PLOT_HPP

#include <span>
#include <string>
#include <vector>

#include "gcmlab/csv_io.hpp"

namespace gcmlab {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points; ///< (rate, bias), sorted by rate
};

struct PlotPanel {
  std::string title;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Standalone SVG line chart with a dashed zero reference line. Output is a
/// pure function of the panel.
std::string render_svg(const PlotPanel& panel);

struct NamedPanel {
  std::string file_stem; ///< e.g. beta_S_MAR_N300
  PlotPanel panel;
};

/// One panel per (mechanism, N) for `parameter`: bias against missing rate,
/// one series per analysis method, each anchored at the complete-data point
/// when present. Throws ValidationError for an unknown parameter or when no
/// row matches.
std::vector<NamedPanel> bias_panels(std::span<const SummaryRow> rows, const std::string& parameter);

} // namespace gcmlab

#endif // GCMLAB_SVG_PLOT_HPP
