#include "colt/svg_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "colt/error.hpp"

namespace colt {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMargin = 56;

struct Series {
  std::string method;
  std::vector<std::pair<double, double>> points;
};

const char* method_color(const std::string& method) {
  if (method == "lth") return "#2ca02c";
  if (method == "colt") return "#d62728";
  if (method == "dense") return "#1f77b4";
  if (method == "random") return "#9467bd";
  return "#7f7f7f";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string render(const std::vector<Series>& series, const std::string& x_label,
                   const std::string& y_label) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  auto px = [&](double x) {
    return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin);
  };
  auto py = [&](double y) {
    return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
     << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
     << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << kHeight / 2 << ")\">" << y_label << "</text>\n";

  os << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16
     << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xmin) << "</text>\n";
  os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
     << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xmax) << "</text>\n";
  os << "<text x=\"" << kMargin - 6 << "\" y=\"" << kHeight - kMargin + 4
     << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymin) << "</text>\n";
  os << "<text x=\"" << kMargin - 6 << "\" y=\"" << kMargin + 4
     << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymax) << "</text>\n";

  int legend_y = kMargin - 34;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    std::ostringstream pts;
    for (const auto& [x, y] : s.points) {
      pts << fmt(px(x)) << "," << fmt(py(y)) << " ";
    }
    os << "<polyline fill=\"none\" stroke=\"" << method_color(s.method)
       << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      os << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
         << "\" r=\"2.5\" fill=\"" << method_color(s.method) << "\"/>\n";
    }
    legend_y += 16;
    os << "<rect x=\"" << kWidth - kMargin - 120 << "\" y=\"" << legend_y - 9
       << "\" width=\"10\" height=\"10\" fill=\"" << method_color(s.method) << "\"/>\n";
    os << "<text x=\"" << kWidth - kMargin - 104 << "\" y=\"" << legend_y
       << "\" font-size=\"12\">" << s.method << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<Series> group_by_method(const std::vector<TraceRow>& rows,
                                    bool accuracy_vs_sparsity) {
  std::vector<Series> series;
  std::map<std::string, size_t> index;
  for (const auto& row : rows) {
    double x = 0.0, y = 0.0;
    if (accuracy_vs_sparsity) {
      double acc;
      if (row.full_acc_pct) {
        acc = *row.full_acc_pct;
      } else if (row.partition1_acc_pct && row.partition2_acc_pct) {
        acc = (*row.partition1_acc_pct + *row.partition2_acc_pct) / 2.0;
      } else if (row.partition1_acc_pct) {
        acc = *row.partition1_acc_pct;
      } else {
        continue;
      }
      x = row.sparsity_all_pct;
      y = acc;
    } else {
      x = row.round;
      y = row.sparsity_all_pct;
    }
    auto [it, inserted] = index.try_emplace(row.method, series.size());
    if (inserted) series.push_back(Series{row.method, {}});
    series[it->second].points.emplace_back(x, y);
  }
  for (auto& s : series) {
    std::sort(s.points.begin(), s.points.end());
  }
  return series;
}

}  // namespace

std::string render_accuracy_svg(const std::vector<TraceRow>& rows) {
  return render(group_by_method(rows, true), "sparsity (% of all params)", "accuracy (%)");
}

std::string render_rounds_svg(const std::vector<TraceRow>& rows) {
  return render(group_by_method(rows, false), "pruning round", "sparsity (% of all params)");
}

void write_svg(const std::string& svg, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << svg;
  if (!f) throw IoError("short write to '" + path + "'");
}

}  // namespace colt
