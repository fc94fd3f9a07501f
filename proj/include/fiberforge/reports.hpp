#pragma once

// CSV tables and standalone SVG line charts for loss curves and error sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fiberforge/evaluation.hpp"
#include "fiberforge/neuralnet.hpp"
#include "fiberforge/numfmt.hpp"

namespace fiberforge {

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string loss_csv(const LossCurve& curve) {
  std::string s = "epoch,training_loss,validation_loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    s += std::to_string(i + 1) + "," + to_decimal(curve[i].training) + "," +
         to_decimal(curve[i].validation) + "\n";
  return s;
}

/// One report per batch size.
struct LabeledReport {
  std::size_t batch_size = 0;
  const ErrorReport* report = nullptr;
};

inline std::string error_csv(std::span<const LabeledReport> reports) {
  std::string s = "task,batch_size,cell_id,feature,mean_signed_pct,mean_abs_pct,n\n";
  for (const auto& lr : reports)
    for (const auto& st : lr.report->stats)
      s += std::string(direction_name(lr.report->direction)) + "," + std::to_string(lr.batch_size) +
           "," + std::string(st.cell.id()) + "," + st.feature + "," + to_decimal(st.mean_signed_pct) +
           "," + to_decimal(st.mean_abs_pct) + "," + std::to_string(st.n) + "\n";
  return s;
}

/// Per-record spread of the signed errors behind each error_csv row.
inline std::string error_dispersion_csv(std::span<const LabeledReport> reports) {
  std::string s = "task,batch_size,cell_id,feature,sd_signed_pct,n\n";
  for (const auto& lr : reports)
    for (const auto& st : lr.report->stats)
      s += std::string(direction_name(lr.report->direction)) + "," + std::to_string(lr.batch_size) +
           "," + std::string(st.cell.id()) + "," + st.feature + "," + to_decimal(st.sd_signed_pct) +
           "," + std::to_string(st.n) + "\n";
  return s;
}

inline std::string confusion_csv(std::span<const LabeledReport> reports) {
  std::string s = "batch_size,true_bath,pred_bath,count\n";
  static constexpr const char* kBath[] = {"0", "5"};
  for (const auto& lr : reports) {
    if (!lr.report->confusion) continue;
    const auto& c = *lr.report->confusion;
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t p = 0; p < 2; ++p)
        s += std::to_string(lr.batch_size) + "," + kBath[t] + "," + kBath[p] + "," +
             std::to_string(c.counts[t][p]) + "\n";
  }
  return s;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
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

}  // namespace detail

/// Minimal SVG 1.1 line chart on a fixed 800x600 canvas: title, axes with five
/// ticks each, one polyline per series and a legend on the right.
inline std::string svg_line_chart(std::string_view title, std::string_view x_label,
                                  std::string_view y_label, std::span<const Series> series) {
  constexpr double kW = 800, kH = 600, kLeft = 90, kRight = 620, kTop = 60, kBottom = 520;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  if (y0 == y1) {
    const double pad = std::abs(y0) > 0 ? std::abs(y0) * 0.1 : 1.0;
    y0 -= pad, y1 += pad;
  } else {
    const double pad = (y1 - y0) * 0.05;
    y0 -= pad, y1 += pad;
  }
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); };
  auto py = [&](double y) { return kBottom - (y - y0) / (y1 - y0) * (kBottom - kTop); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
    << detail::xml_escape(title) << "</text>\n";
  o << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\"" << kBottom << "\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kLeft << "\" y2=\"" << kTop << "\"/>\n"
    << "</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << detail::fmt("%.2f", px(xv)) << "\" y=\"" << kBottom + 18
      << "\" text-anchor=\"middle\">" << detail::fmt("%.4g", xv) << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << detail::fmt("%.2f", py(yv) + 4)
      << "\" text-anchor=\"end\">" << detail::fmt("%.4g", yv) << "</text>\n";
  }
  o << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 45 << "\" text-anchor=\"middle\">"
    << detail::xml_escape(x_label) << "</text>\n"
    << "<text x=\"20\" y=\"" << (kTop + kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (kTop + kBottom) / 2 << ")\">" << detail::xml_escape(y_label) << "</text>\n"
    << "</g>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto& [x, y] = series[i].points[k];
      o << (k ? " " : "") << detail::fmt("%.2f", px(x)) << ',' << detail::fmt("%.2f", py(y));
    }
    o << "\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(i);
    o << "<line x1=\"640\" y1=\"" << ly << "\" x2=\"665\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"672\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(series[i].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline std::string loss_svg(const LossCurve& curve, std::string_view title) {
  std::vector<Series> s{{"training", {}}, {"validation", {}}};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    s[0].points.emplace_back(static_cast<double>(i + 1), curve[i].training);
    s[1].points.emplace_back(static_cast<double>(i + 1), curve[i].validation);
  }
  return svg_line_chart(title, "epoch", "mean squared error (standardized)", s);
}

/// Signed mean percentage error of one output against batch size, one line per cell.
inline std::string error_vs_batch_svg(std::span<const LabeledReport> reports, std::string_view feature) {
  std::vector<Series> s;
  for (const Cell& c : kAllCells) {
    Series line{std::string(c.id()), {}};
    for (const auto& lr : reports)
      line.points.emplace_back(static_cast<double>(lr.batch_size),
                               lr.report->at(c, feature).mean_signed_pct);
    s.push_back(std::move(line));
  }
  const std::string title = std::string(feature) + " mean error vs batch size";
  return svg_line_chart(title, "batch size", "mean signed error (%)", s);
}

}  // namespace fiberforge
