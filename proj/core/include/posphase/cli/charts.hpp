#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posphase/csv.hpp"

namespace posphase::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Fixed y range; otherwise padded data range.
  std::optional<std::pair<double, double>> y_range;
};

// Self-contained SVG documents; output depends only on the arguments.
std::string line_chart_svg(const Axes& axes, const std::vector<Series>& series);
// Grouped bars: one group per category, one bar per series (series.y is
// indexed like `categories`; x is ignored).
std::string bar_chart_svg(const Axes& axes, const std::vector<std::string>& categories,
                          const std::vector<Series>& series);
// values[r][c] in [lo, hi] shaded white→blue, annotated with the value.
std::string heatmap_svg(const Axes& axes, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::vector<double>>& values, double lo = 0,
                        double hi = 1);

// Figure renderers reading the CSV tables written by the pipelines.
// Sweep: one line per model_id, accuracy against k.
std::string sweep_chart(const CsvTable& sweep);
// Histogram: labelled (k, count, fraction) tables, bars of fraction per k.
std::string histogram_chart(const std::vector<std::pair<std::string, CsvTable>>& histograms);
// Globality: one line per (model_id, layer, head_rank) against k.
std::string globality_chart(const CsvTable& globality);
// Matrix: one heatmap of mean_acc per task_id, keyed by task_id.
std::map<std::string, std::string> matrix_charts(const CsvTable& matrix);

}  // namespace posphase::cli
