#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "distmfa/dataset.hpp"
#include "distmfa/mfa.hpp"
#include "distmfa/wasserstein.hpp"

namespace distmfa {

/// Axis pair and glyph styling for the SVG renderers. Axes are 0-based.
struct PlotOptions {
  Eigen::Index axis_a = 0;
  Eigen::Index axis_b = 1;
  bool labels = true;
  bool mean_shading = true;
};

namespace detail {

inline const char* plot_color(std::size_t i) {
  static const char* palette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

inline std::string svg_open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"720\" "
         "viewBox=\"0 0 960 720\" font-family=\"sans-serif\">\n"
         "<desc>" + escape_xml(title) + "</desc>\n"
         "<rect x=\"0\" y=\"0\" width=\"960\" height=\"720\" fill=\"#ffffff\"/>\n";
}

inline std::string text_at(double x, double y, const std::string& s, int size,
                           const char* anchor = "middle", const char* fill = "#333333") {
  return "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(y) + "\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
         "\">" + escape_xml(s) + "</text>\n";
}

inline std::string line_at(double x1, double y1, double x2, double y2,
                           const char* stroke, const char* extra = "") {
  return "<line x1=\"" + svg_num(x1) + "\" y1=\"" + svg_num(y1) + "\" x2=\"" +
         svg_num(x2) + "\" y2=\"" + svg_num(y2) + "\" stroke=\"" + stroke + "\"" +
         extra + "/>\n";
}

inline std::string axis_label(const MfaModel& m, Eigen::Index axis) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "Dim %ld (%.2f%%)", static_cast<long>(axis + 1),
                m.percent_inertia[axis]);
  return std::string(buf);
}

inline void check_plane(const MfaModel& m, const PlotOptions& o) {
  require(o.axis_a >= 0 && o.axis_a < m.axis_count() && o.axis_b >= 0 &&
              o.axis_b < m.axis_count(),
          "plot: axis outside the retained rank");
  require(o.axis_a != o.axis_b, "plot: the two axes must differ");
}

// shared frame for the correlation-circle style plots
inline std::string circle_frame(const MfaModel& m, const PlotOptions& o,
                                const std::string& title) {
  const double cx = 360.0, cy = 360.0, r = 290.0;
  std::string s = svg_open(title);
  s += text_at(cx, 28, title, 18);
  s += "<circle cx=\"" + svg_num(cx) + "\" cy=\"" + svg_num(cy) + "\" r=\"" +
       svg_num(r) + "\" fill=\"none\" stroke=\"#999999\"/>\n";
  s += line_at(cx - r, cy, cx + r, cy, "#cccccc");
  s += line_at(cx, cy - r, cx, cy + r, "#cccccc");
  s += text_at(cx, cy + r + 34, axis_label(m, o.axis_a), 14);
  s += "<g transform=\"translate(" + svg_num(cx - r - 18) + "," + svg_num(cy) +
       ") rotate(-90)\">" + text_at(0, 0, axis_label(m, o.axis_b), 14) + "</g>\n";
  return s;
}

struct GlyphShape {
  std::vector<std::pair<double, double>> points;  // (value, density)
  double min_v = 0.0, max_v = 0.0, max_d = 0.0;
  double mean = 0.0;  // aligned to the anchor when drawn
};

// Density outline through the bin midpoints, dropped to zero across support
// gaps; point masses become capped spikes.
inline GlyphShape glyph_shape(const Histogram& h) {
  GlyphShape g;
  g.min_v = h.min();
  g.max_v = h.max();
  g.mean = summarize(h).mean;
  std::vector<double> density(h.size(), -1.0);
  double max_finite = 0.0;
  for (std::size_t l = 0; l < h.size(); ++l) {
    const Bin& b = h.bins()[l];
    if (b.hi > b.lo) {
      density[l] = b.weight / (b.hi - b.lo);
      max_finite = std::max(max_finite, density[l]);
    }
  }
  const double spike = max_finite > 0.0 ? 1.25 * max_finite : 1.0;
  g.points.emplace_back(h.bins().front().lo, 0.0);
  for (std::size_t l = 0; l < h.size(); ++l) {
    const Bin& b = h.bins()[l];
    if (l > 0 && b.lo > h.bins()[l - 1].hi) {
      g.points.emplace_back(h.bins()[l - 1].hi, 0.0);
      g.points.emplace_back(b.lo, 0.0);
    }
    const double d = density[l] >= 0.0 ? density[l] : spike;
    g.points.emplace_back((b.lo + b.hi) / 2.0, d);
    g.max_d = std::max(g.max_d, d);
  }
  g.points.emplace_back(h.bins().back().hi, 0.0);
  return g;
}

}  // namespace detail

/// Fan plot: per block, the polygon of (corr with axis a, corr with axis b)
/// over the quantile columns, anchored at the origin. Flat columns are left
/// out and listed in the element description.
inline std::string render_fan_svg(const MfaModel& m, const PlotOptions& o) {
  detail::check_plane(m, o);
  std::string s = detail::circle_frame(m, o, "Quantile fans");
  const double cx = 360.0, cy = 360.0, r = 290.0;
  std::string skipped;
  for (std::size_t j = 0; j < m.block_ids.size(); ++j) {
    const Eigen::MatrixXd& corr = m.column_axis_corr[j];
    const char* color = detail::plot_color(j);
    std::string pts = detail::svg_num(cx) + "," + detail::svg_num(cy);
    std::vector<std::pair<double, double>> dots;
    for (Eigen::Index l = 0; l < corr.rows(); ++l) {
      const double ca = corr(l, o.axis_a), cb = corr(l, o.axis_b);
      if (!std::isfinite(ca) || !std::isfinite(cb)) {
        skipped += (skipped.empty() ? "" : ", ") + m.block_ids[j] + ":q" +
                   std::to_string(l);
        continue;
      }
      const double x = cx + ca * r, y = cy - cb * r;
      pts += " " + detail::svg_num(x) + "," + detail::svg_num(y);
      dots.emplace_back(x, y);
    }
    s += "<polygon points=\"" + pts + "\" fill=\"" + color +
         "\" fill-opacity=\"0.25\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    for (const auto& [x, y] : dots) {
      s += "<circle cx=\"" + detail::svg_num(x) + "\" cy=\"" + detail::svg_num(y) +
           "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    if (o.labels && !dots.empty()) {
      s += detail::text_at(dots.front().first, dots.front().second - 6,
                           "q0", 11, "middle", color);
      s += detail::text_at(dots.back().first, dots.back().second - 6,
                           "q" + std::to_string(corr.rows() - 1), 11, "middle", color);
    }
    s += "<rect x=\"730\" y=\"" + detail::svg_num(80.0 + 24.0 * static_cast<double>(j)) +
         "\" width=\"14\" height=\"14\" fill=\"" + color + "\"/>\n";
    s += detail::text_at(752, 92.0 + 24.0 * static_cast<double>(j),
                         m.block_ids[j], 13, "start");
  }
  if (!skipped.empty())
    s += "<desc>omitted flat columns: " + detail::escape_xml(skipped) + "</desc>\n";
  return s + "</svg>\n";
}

/// Correlation circle of each block's leading partial axes against the chosen
/// global plane.
inline std::string render_circle_svg(const MfaModel& m, const PlotOptions& o) {
  detail::check_plane(m, o);
  std::string s = detail::circle_frame(m, o, "Partial axes");
  const double cx = 360.0, cy = 360.0, r = 290.0;
  for (std::size_t jj = 0; jj < m.active_blocks.size(); ++jj) {
    const std::size_t j = m.active_blocks[jj];
    const Eigen::MatrixXd& corr = m.partial_axis_corr[jj];
    const char* color = detail::plot_color(j);
    for (Eigen::Index d = 0; d < corr.rows(); ++d) {
      const double x = cx + corr(d, o.axis_a) * r;
      const double y = cy - corr(d, o.axis_b) * r;
      s += detail::line_at(cx, cy, x, y, color, " stroke-width=\"1.5\"");
      // arrowhead
      const double dx = x - cx, dy = y - cy;
      const double len = std::max(1e-9, std::sqrt(dx * dx + dy * dy));
      const double ux = dx / len, uy = dy / len;
      s += "<polygon points=\"" + detail::svg_num(x) + "," + detail::svg_num(y) + " " +
           detail::svg_num(x - 9 * ux + 4 * uy) + "," +
           detail::svg_num(y - 9 * uy - 4 * ux) + " " +
           detail::svg_num(x - 9 * ux - 4 * uy) + "," +
           detail::svg_num(y - 9 * uy + 4 * ux) + "\" fill=\"" + color + "\"/>\n";
      if (o.labels) {
        s += detail::text_at(x + 10 * ux, y + 10 * uy - 4,
                             m.block_ids[j] + ".F" + std::to_string(d + 1), 12,
                             ux < 0 ? "end" : "start", color);
      }
    }
  }
  return s + "</svg>\n";
}

namespace detail {

struct PlaneFrame {
  double x0 = 90.0, x1 = 900.0, y0 = 70.0, y1 = 640.0;
  double min_a = 0.0, max_a = 0.0, min_b = 0.0, max_b = 0.0;
  double map_x(double a) const {
    return x0 + (a - min_a) / (max_a - min_a) * (x1 - x0);
  }
  double map_y(double b) const {
    return y1 - (b - min_b) / (max_b - min_b) * (y1 - y0);
  }
};

inline PlaneFrame plane_frame(const MfaModel& m, const PlotOptions& o) {
  PlaneFrame f;
  const Eigen::VectorXd a = m.individual_coords.col(o.axis_a);
  const Eigen::VectorXd b = m.individual_coords.col(o.axis_b);
  f.min_a = std::min(0.0, a.minCoeff());
  f.max_a = std::max(0.0, a.maxCoeff());
  f.min_b = std::min(0.0, b.minCoeff());
  f.max_b = std::max(0.0, b.maxCoeff());
  const double pad_a = 0.15 * std::max(1e-9, f.max_a - f.min_a);
  const double pad_b = 0.25 * std::max(1e-9, f.max_b - f.min_b);
  f.min_a -= pad_a;
  f.max_a += pad_a;
  f.min_b -= pad_b;
  f.max_b += pad_b;
  return f;
}

inline std::string plane_grid(const MfaModel& m, const PlotOptions& o,
                              const PlaneFrame& f, const std::string& title) {
  std::string s = svg_open(title);
  s += text_at(480, 30, title, 18);
  s += "<rect x=\"" + svg_num(f.x0) + "\" y=\"" + svg_num(f.y0) + "\" width=\"" +
       svg_num(f.x1 - f.x0) + "\" height=\"" + svg_num(f.y1 - f.y0) +
       "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
  s += line_at(f.map_x(0.0), f.y0, f.map_x(0.0), f.y1, "#dddddd");
  s += line_at(f.x0, f.map_y(0.0), f.x1, f.map_y(0.0), "#dddddd");
  s += text_at((f.x0 + f.x1) / 2, f.y1 + 40, axis_label(m, o.axis_a), 14);
  s += "<g transform=\"translate(" + svg_num(f.x0 - 50) + "," +
       svg_num((f.y0 + f.y1) / 2) + ") rotate(-90)\">" +
       text_at(0, 0, axis_label(m, o.axis_b), 14) + "</g>\n";
  return s;
}

// One density glyph with its mean on the anchor; sign -1 mirrors it downward.
inline std::string draw_glyph(const GlyphShape& g, double anchor_x, double baseline_y,
                              double hscale, double vscale, double sign,
                              const std::string& fill, const std::string& stroke,
                              double opacity) {
  std::string pts;
  for (const auto& [v, d] : g.points) {
    if (!pts.empty()) pts += " ";
    pts += svg_num(anchor_x + (v - g.mean) * hscale) + "," +
           svg_num(baseline_y - sign * d * vscale);
  }
  char op[16];
  std::snprintf(op, sizeof(op), "%.2f", opacity);
  return "<polygon points=\"" + pts + "\" fill=\"" + fill + "\" fill-opacity=\"" +
         op + "\" stroke=\"" + stroke + "\" stroke-width=\"1.2\"/>\n";
}

// Gray level for a mean inside [lo, hi]: higher means are darker.
inline std::string mean_gray(double mean, double lo, double hi) {
  const double t = hi > lo ? (mean - lo) / (hi - lo) : 0.5;
  const int level = 224 - static_cast<int>(std::lround(178.0 * t));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", level, level, level);
  return buf;
}

}  // namespace detail

/// Factor plane with one density glyph per unit, its mean sitting on the
/// unit's global coordinates. Glyph widths share one value scale so spreads
/// compare across units; mean shading fills each glyph with a gray level,
/// darker for higher means.
inline std::string render_plane_svg(const MfaModel& m, const DistributionalTable& table,
                                    const std::string& variable, const PlotOptions& o) {
  detail::check_plane(m, o);
  validate_table(table);
  detail::require(static_cast<Eigen::Index>(table.unit_ids.size()) == m.units(),
                  "plane plot: unit count mismatch between table and model");
  const std::size_t j = variable_index(table, variable);

  detail::PlaneFrame f = detail::plane_frame(m, o);
  std::string s = detail::plane_grid(m, o, f, "Individual plane: " + variable);

  std::vector<detail::GlyphShape> shapes;
  double max_span = 0.0, max_d = 0.0;
  double lo_mean = std::numeric_limits<double>::infinity(), hi_mean = -lo_mean;
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    shapes.push_back(detail::glyph_shape(table.cells[i][j]));
    max_span = std::max(max_span, shapes.back().max_v - shapes.back().min_v);
    max_d = std::max(max_d, shapes.back().max_d);
    lo_mean = std::min(lo_mean, shapes.back().mean);
    hi_mean = std::max(hi_mean, shapes.back().mean);
  }
  const double hscale = 110.0 / std::max(1e-12, max_span);
  const double vscale = 62.0 / std::max(1e-12, max_d);

  const std::string color = detail::plot_color(j);
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    const double ax = f.map_x(m.individual_coords(static_cast<Eigen::Index>(i), o.axis_a));
    const double ay = f.map_y(m.individual_coords(static_cast<Eigen::Index>(i), o.axis_b));
    if (o.mean_shading) {
      s += detail::draw_glyph(shapes[i], ax, ay, hscale, vscale, 1.0,
                              detail::mean_gray(shapes[i].mean, lo_mean, hi_mean),
                              "#444444", 0.85);
    } else {
      s += detail::draw_glyph(shapes[i], ax, ay, hscale, vscale, 1.0, color, color, 0.18);
    }
    s += "<circle cx=\"" + detail::svg_num(ax) + "\" cy=\"" + detail::svg_num(ay) +
         "\" r=\"2.5\" fill=\"#222222\"/>\n";
    if (o.labels)
      s += detail::text_at(ax, ay + 16, table.unit_ids[i], 11);
  }
  return s + "</svg>\n";
}

/// Mirrored factor plane: the first variable's glyphs point up, the second's
/// point down from the same anchors.
inline std::string render_plane_mirrored_svg(const MfaModel& m,
                                             const DistributionalTable& table,
                                             const std::string& upper,
                                             const std::string& lower,
                                             const PlotOptions& o) {
  detail::check_plane(m, o);
  validate_table(table);
  detail::require(static_cast<Eigen::Index>(table.unit_ids.size()) == m.units(),
                  "plane plot: unit count mismatch between table and model");
  const std::size_t ju = variable_index(table, upper);
  const std::size_t jl = variable_index(table, lower);

  detail::PlaneFrame f = detail::plane_frame(m, o);
  std::string s = detail::plane_grid(m, o, f,
                                     "Individual plane: " + upper + " / " + lower);

  double max_span = 0.0, max_d = 0.0;
  std::vector<detail::GlyphShape> up, down;
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    up.push_back(detail::glyph_shape(table.cells[i][ju]));
    down.push_back(detail::glyph_shape(table.cells[i][jl]));
    for (const detail::GlyphShape* g : {&up.back(), &down.back()}) {
      max_span = std::max(max_span, g->max_v - g->min_v);
      max_d = std::max(max_d, g->max_d);
    }
  }
  const double hscale = 110.0 / std::max(1e-12, max_span);
  const double vscale = 48.0 / std::max(1e-12, max_d);

  const std::string cu = detail::plot_color(ju), cl = detail::plot_color(jl);
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    const double ax = f.map_x(m.individual_coords(static_cast<Eigen::Index>(i), o.axis_a));
    const double ay = f.map_y(m.individual_coords(static_cast<Eigen::Index>(i), o.axis_b));
    s += detail::draw_glyph(up[i], ax, ay, hscale, vscale, 1.0, cu, cu, 0.18);
    s += detail::draw_glyph(down[i], ax, ay, hscale, vscale, -1.0, cl, cl, 0.18);
    s += "<circle cx=\"" + detail::svg_num(ax) + "\" cy=\"" + detail::svg_num(ay) +
         "\" r=\"2.5\" fill=\"#222222\"/>\n";
    if (o.labels) s += detail::text_at(ax + 8, ay - 6, table.unit_ids[i], 11, "start");
  }
  s += "<rect x=\"730\" y=\"80\" width=\"14\" height=\"14\" fill=\"" +
       std::string(detail::plot_color(ju)) + "\"/>\n" +
       detail::text_at(752, 92, upper + " (up)", 13, "start") +
       "<rect x=\"730\" y=\"104\" width=\"14\" height=\"14\" fill=\"" +
       std::string(detail::plot_color(jl)) + "\"/>\n" +
       detail::text_at(752, 116, lower + " (down)", 13, "start");
  return s + "</svg>\n";
}

/// Bar-and-line summary of the eigenvalue spectrum: percent bars, cumulative
/// polyline, both against a 0-100 axis.
inline std::string render_scree_svg(const MfaModel& m) {
  const Eigen::Index L = m.axis_count();
  const double x0 = 90.0, x1 = 900.0, y0 = 70.0, y1 = 630.0;
  std::string s = detail::svg_open("Eigenvalue spectrum");
  s += detail::text_at(480, 30, "Eigenvalue spectrum", 18);
  s += detail::line_at(x0, y1, x1, y1, "#444444");
  s += detail::line_at(x0, y0, x0, y1, "#444444");
  for (int tick = 0; tick <= 100; tick += 20) {
    const double y = y1 - (y1 - y0) * tick / 100.0;
    s += detail::line_at(x0 - 5, y, x0, y, "#444444");
    s += detail::text_at(x0 - 10, y + 4, std::to_string(tick), 11, "end");
    if (tick > 0) s += detail::line_at(x0, y, x1, y, "#eeeeee");
  }
  const double slot = (x1 - x0) / static_cast<double>(L);
  const double bar = std::min(60.0, 0.6 * slot);
  std::string cumulative;
  for (Eigen::Index a = 0; a < L; ++a) {
    const double cx = x0 + slot * (static_cast<double>(a) + 0.5);
    const double h = (y1 - y0) * m.percent_inertia[a] / 100.0;
    s += "<rect x=\"" + detail::svg_num(cx - bar / 2) + "\" y=\"" +
         detail::svg_num(y1 - h) + "\" width=\"" + detail::svg_num(bar) +
         "\" height=\"" + detail::svg_num(h) + "\" fill=\"#1f77b4\"/>\n";
    char lab[32];
    std::snprintf(lab, sizeof(lab), "%.1f%%", m.percent_inertia[a]);
    s += detail::text_at(cx, y1 - h - 8, lab, 11);
    s += detail::text_at(cx, y1 + 18, std::to_string(a + 1), 12);
    const double cy = y1 - (y1 - y0) * m.cumulative_percent[a] / 100.0;
    if (!cumulative.empty()) cumulative += " ";
    cumulative += detail::svg_num(cx) + "," + detail::svg_num(cy);
    s += "<circle cx=\"" + detail::svg_num(cx) + "\" cy=\"" + detail::svg_num(cy) +
         "\" r=\"3\" fill=\"#d62728\"/>\n";
  }
  s += "<polyline points=\"" + cumulative +
       "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  s += detail::text_at((x0 + x1) / 2, y1 + 44, "component", 14);
  return s + "</svg>\n";
}

}  // namespace distmfa
