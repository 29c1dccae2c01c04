#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "fosmpc/errors.hpp"

namespace fosmpc {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void svg_polyline(std::ofstream& out, const Eigen::VectorXd& y, double y_min,
                         double y_max, double x0, double panel_w, double panel_top,
                         double panel_h, const char* color) {
  const Eigen::Index T = y.size();
  if (T < 2) return;
  const double span = std::max(y_max - y_min, 1e-12);
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
  for (Eigen::Index k = 0; k < T; ++k) {
    const double px = x0 + panel_w * static_cast<double>(k) / static_cast<double>(T - 1);
    const double py = panel_top + panel_h * (1.0 - (y[k] - y_min) / span);
    out << svg_num(px) << ',' << svg_num(py) << ' ';
  }
  out << "\"/>\n";
}

}  // namespace detail

// One 960x320 panel per channel, stacked vertically: reference trajectory in
// blue, actuated trajectory in red, applied input (first input channel) in
// yellow, all sharing the panel's vertical scale.
inline void write_overlay_svg(const std::string& path, const Eigen::MatrixXd& reference,
                              const Eigen::MatrixXd& actuated, const Eigen::MatrixXd& inputs) {
  if (reference.rows() != actuated.rows() || reference.cols() != actuated.cols())
    throw std::invalid_argument("overlay series must have matching shapes");
  const Eigen::Index n = reference.cols();
  const double panel_w = 900.0, panel_h = 260.0, margin = 30.0;
  const double total_w = panel_w + 2 * margin;
  const double total_h = n * (panel_h + 2 * margin);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write SVG: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::svg_num(total_w)
      << "\" height=\"" << detail::svg_num(total_h) << "\" viewBox=\"0 0 "
      << detail::svg_num(total_w) << ' ' << detail::svg_num(total_h) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const bool have_input = inputs.rows() == reference.rows() && inputs.cols() > 0;
  for (Eigen::Index ch = 0; ch < n; ++ch) {
    const double top = ch * (panel_h + 2 * margin) + margin;
    double lo = std::min(reference.col(ch).minCoeff(), actuated.col(ch).minCoeff());
    double hi = std::max(reference.col(ch).maxCoeff(), actuated.col(ch).maxCoeff());
    if (have_input) {
      lo = std::min(lo, inputs.col(0).minCoeff());
      hi = std::max(hi, inputs.col(0).maxCoeff());
    }
    out << "<rect x=\"" << detail::svg_num(margin) << "\" y=\"" << detail::svg_num(top)
        << "\" width=\"" << detail::svg_num(panel_w) << "\" height=\""
        << detail::svg_num(panel_h) << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    if (lo < 0.0 && hi > 0.0) {
      const double zero_y = top + panel_h * (1.0 - (0.0 - lo) / std::max(hi - lo, 1e-12));
      out << "<line x1=\"" << detail::svg_num(margin) << "\" y1=\"" << detail::svg_num(zero_y)
          << "\" x2=\"" << detail::svg_num(margin + panel_w) << "\" y2=\""
          << detail::svg_num(zero_y) << "\" stroke=\"#eeeeee\"/>\n";
    }
    out << "<text x=\"" << detail::svg_num(margin + 4) << "\" y=\""
        << detail::svg_num(top + 14) << "\" font-size=\"12\" fill=\"#444444\">channel "
        << (ch + 1) << "</text>\n";
    detail::svg_polyline(out, reference.col(ch), lo, hi, margin, panel_w, top, panel_h,
                         "#1f77b4");
    detail::svg_polyline(out, actuated.col(ch), lo, hi, margin, panel_w, top, panel_h,
                         "#d62728");
    if (have_input)
      detail::svg_polyline(out, inputs.col(0), lo, hi, margin, panel_w, top, panel_h,
                           "#e6b800");
  }
  out << "</svg>\n";
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace fosmpc
