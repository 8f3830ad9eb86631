#include "posphase/cli/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "posphase/errors.hpp"

namespace posphase::cli {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;
constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
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

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

void open_svg(std::ostringstream& out, const Axes& axes) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(axes.title) << "</text>\n";
}

void axis_labels(std::ostringstream& out, const Axes& axes) {
  out << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\"" << num(kHeight - 18)
      << "\" text-anchor=\"middle\">" << escape(axes.x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << num(kTop + kPlotH / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(kTop + kPlotH / 2) << ")\">" << escape(axes.y_label) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 18 * static_cast<double>(i);
    out << "<rect x=\"" << num(kLeft + kPlotW + 12) << "\" y=\"" << num(y - 8)
        << "\" width=\"12\" height=\"10\" fill=\"" << color(i) << "\"/>\n"
        << "<text x=\"" << num(kLeft + kPlotW + 30) << "\" y=\"" << num(y + 1) << "\">"
        << escape(series[i].label) << "</text>\n";
  }
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void y_axis(std::ostringstream& out, double lo, double hi) {
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const double y = kTop + kPlotH - kPlotH * i / 4.0;
    out << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + kPlotW) << "\" y1=\"" << num(y)
        << "\" y2=\"" << num(y) << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
        << tick(v) << "</text>\n";
  }
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kPlotW)
      << "\" height=\"" << num(kPlotH) << "\" fill=\"none\" stroke=\"black\"/>\n";
}

double to_double(const std::string& field, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw IoError("CSV column '" + column + "' has non-numeric value '" + field + "'");
  }
}

}  // namespace

std::string line_chart_svg(const Axes& axes, const std::vector<Series>& series) {
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ShapeError("line chart: x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        first = false;
      }
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (!(x_lo < x_hi)) x_hi = x_lo + 1;
  std::tie(y_lo, y_hi) = axes.y_range ? *axes.y_range : padded(y_lo, y_hi);
  const auto px = [&](double x) { return kLeft + kPlotW * (x - x_lo) / (x_hi - x_lo); };
  const auto py = [&](double y) { return kTop + kPlotH - kPlotH * (y - y_lo) / (y_hi - y_lo); };

  std::ostringstream out;
  open_svg(out, axes);
  y_axis(out, y_lo, y_hi);
  for (int i = 0; i <= 4; ++i) {
    const double v = x_lo + (x_hi - x_lo) * i / 4.0;
    out << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kTop + kPlotH + 18)
        << "\" text-anchor=\"middle\">" << tick(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < series[i].x.size(); ++j) {
      if (j) out << ' ';
      out << num(px(series[i].x[j])) << ',' << num(py(series[i].y[j]));
    }
    out << "\"/>\n";
    for (std::size_t j = 0; j < series[i].x.size(); ++j) {
      out << "<circle cx=\"" << num(px(series[i].x[j])) << "\" cy=\"" << num(py(series[i].y[j]))
          << "\" r=\"3\" fill=\"" << color(i) << "\"/>\n";
    }
  }
  axis_labels(out, axes);
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart_svg(const Axes& axes, const std::vector<std::string>& categories,
                          const std::vector<Series>& series) {
  double y_hi = 0;
  for (const auto& s : series) {
    if (s.y.size() != categories.size()) throw ShapeError("bar chart: series length differs");
    for (double v : s.y) y_hi = std::max(y_hi, v);
  }
  const auto [lo, hi] = axes.y_range ? *axes.y_range : std::pair{0.0, y_hi > 0 ? y_hi * 1.05 : 1.0};
  const double group = kPlotW / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double bar = 0.8 * group / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  const auto py = [&](double y) { return kTop + kPlotH - kPlotH * (y - lo) / (hi - lo); };

  std::ostringstream out;
  open_svg(out, axes);
  y_axis(out, lo, hi);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group * static_cast<double>(c);
    out << "<text x=\"" << num(gx + group / 2) << "\" y=\"" << num(kTop + kPlotH + 18)
        << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double top = py(std::max(series[s].y[c], lo));
      out << "<rect x=\"" << num(gx + 0.1 * group + bar * static_cast<double>(s)) << "\" y=\""
          << num(top) << "\" width=\"" << num(bar) << "\" height=\"" << num(kTop + kPlotH - top)
          << "\" fill=\"" << color(s) << "\"/>\n";
    }
  }
  axis_labels(out, axes);
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_svg(const Axes& axes, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::vector<double>>& values, double lo, double hi) {
  if (values.size() != row_labels.size()) throw ShapeError("heatmap: row count differs");
  for (const auto& row : values) {
    if (row.size() != col_labels.size()) throw ShapeError("heatmap: column count differs");
  }
  const double cw = kPlotW / static_cast<double>(std::max<std::size_t>(col_labels.size(), 1));
  const double ch = kPlotH / static_cast<double>(std::max<std::size_t>(row_labels.size(), 1));
  std::ostringstream out;
  open_svg(out, axes);
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    const double y = kTop + ch * static_cast<double>(r);
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + ch / 2 + 4)
        << "\" text-anchor=\"end\">" << escape(row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const double t = std::clamp((values[r][c] - lo) / (hi - lo), 0.0, 1.0);
      const int red = static_cast<int>(std::lround(255 - 224 * t));
      const int green = static_cast<int>(std::lround(255 - 136 * t));
      const int blue = static_cast<int>(std::lround(255 - 75 * t));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", red, green, blue);
      const double x = kLeft + cw * static_cast<double>(c);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw)
          << "\" height=\"" << num(ch) << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n"
          << "<text x=\"" << num(x + cw / 2) << "\" y=\"" << num(y + ch / 2 + 4)
          << "\" text-anchor=\"middle\" fill=\"" << (t > 0.6 ? "white" : "black") << "\">"
          << num(values[r][c]) << "</text>\n";
    }
  }
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    out << "<text x=\"" << num(kLeft + cw * (static_cast<double>(c) + 0.5)) << "\" y=\""
        << num(kTop + kPlotH + 18) << "\" text-anchor=\"middle\">" << escape(col_labels[c])
        << "</text>\n";
  }
  axis_labels(out, axes);
  out << "</svg>\n";
  return out.str();
}

std::string sweep_chart(const CsvTable& sweep) {
  const auto model = sweep.column("model_id"), k = sweep.column("k"), value = sweep.column("value");
  const auto metric = sweep.column("metric");
  std::vector<Series> series;
  for (const auto& row : sweep.rows) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.label == row[model]; });
    if (it == series.end()) it = series.insert(series.end(), Series{row[model], {}, {}});
    it->x.push_back(to_double(row[k], "k"));
    it->y.push_back(to_double(row[value], "value"));
  }
  const std::string metric_name = sweep.rows.empty() ? "value" : sweep.rows[0][metric];
  return line_chart_svg({"Phase-shift sweep", "shift k", metric_name, std::pair{0.0, 1.0}}, series);
}

std::string histogram_chart(const std::vector<std::pair<std::string, CsvTable>>& histograms) {
  std::vector<std::string> categories;
  std::vector<Series> series;
  for (const auto& [label, table] : histograms) {
    const auto k = table.column("k"), fraction = table.column("fraction");
    std::vector<std::string> ks;
    Series s{label, {}, {}};
    for (const auto& row : table.rows) {
      ks.push_back(row[k]);
      s.y.push_back(to_double(row[fraction], "fraction"));
    }
    if (categories.empty()) categories = ks;
    if (ks != categories) throw UsageError("histograms use different shift lists");
    series.push_back(std::move(s));
  }
  return bar_chart_svg({"Best phase per sentence", "shift k", "fraction of sentences",
                        std::pair{0.0, 1.0}},
                       categories, series);
}

std::string globality_chart(const CsvTable& globality) {
  const auto model = globality.column("model_id"), layer = globality.column("layer");
  const auto rank = globality.column("head_rank"), k = globality.column("k");
  const auto value = globality.column("value");
  std::vector<Series> series;
  for (const auto& row : globality.rows) {
    const std::string label = row[model] + " L" + row[layer] + " r" + row[rank];
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.label == label; });
    if (it == series.end()) it = series.insert(series.end(), Series{label, {}, {}});
    it->x.push_back(to_double(row[k], "k"));
    it->y.push_back(to_double(row[value], "value"));
  }
  for (auto& s : series) {
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
    Series sorted{s.label, {}, {}};
    for (auto i : order) {
      sorted.x.push_back(s.x[i]);
      sorted.y.push_back(s.y[i]);
    }
    s = std::move(sorted);
  }
  return line_chart_svg({"Attention globality", "shift k", "globality", std::nullopt}, series);
}

std::map<std::string, std::string> matrix_charts(const CsvTable& matrix) {
  const auto task = matrix.column("task_id"), kt = matrix.column("k_train");
  const auto ke = matrix.column("k_eval"), mean = matrix.column("mean_acc");
  std::map<std::string, std::string> out;
  std::vector<std::string> tasks;
  for (const auto& row : matrix.rows) {
    if (std::find(tasks.begin(), tasks.end(), row[task]) == tasks.end()) tasks.push_back(row[task]);
  }
  for (const auto& t : tasks) {
    std::vector<std::string> rows, cols;
    for (const auto& row : matrix.rows) {
      if (row[task] != t) continue;
      if (std::find(rows.begin(), rows.end(), row[kt]) == rows.end()) rows.push_back(row[kt]);
      if (std::find(cols.begin(), cols.end(), row[ke]) == cols.end()) cols.push_back(row[ke]);
    }
    std::vector<std::vector<double>> values(rows.size(), std::vector<double>(cols.size(), 0.0));
    for (const auto& row : matrix.rows) {
      if (row[task] != t) continue;
      const auto r = std::find(rows.begin(), rows.end(), row[kt]) - rows.begin();
      const auto c = std::find(cols.begin(), cols.end(), row[ke]) - cols.begin();
      values[r][c] = to_double(row[mean], "mean_acc");
    }
    out[t] = heatmap_svg({"Cross-phase accuracy: " + t, "evaluation shift", "training shift",
                          std::nullopt},
                         rows, cols, values);
  }
  return out;
}

}  // namespace posphase::cli
