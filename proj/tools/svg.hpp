#pragma once

// Line plots written directly as SVG. The canvas is fixed at 640x400 and all
// coordinates are printed with two decimals, so equal inputs give equal bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "nevlab/error.hpp"
#include "table.hpp"

namespace nevlab::cli {

struct PlotSpec {
  std::string x = "r";
  std::vector<std::string> y;
  bool log_x = false;
  bool log_y = false;
  std::string shade;  ///< column whose non-zero rows are shaded; empty for none
  std::string title;
};

namespace svg_detail {

constexpr double W = 640, H = 400, L = 70, R = 20, T = 36, B = 48;
constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

inline std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double t(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (t(v) - t(lo)) / (t(hi) - t(lo)); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int a = static_cast<int>(std::floor(std::log10(lo) + 1e-9));
      const int b = static_cast<int>(std::ceil(std::log10(hi) - 1e-9));
      const int step = std::max(1, (b - a) / 8);
      for (int e = a; e <= b; e += step) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) out.push_back(v);
      }
      if (out.size() >= 2) return out;
      out.clear();
    }
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step)
      out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
  }
};

inline Axis make_axis(const std::vector<std::vector<double>>& series, bool log, const std::string& name) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series)
    for (double v : s)
      if (std::isfinite(v) && (!log || v > 0.0)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) throw DataError("column '" + name + "' has no plottable values");
  if (hi == lo) {
    const double pad = log ? 0.0 : (lo == 0.0 ? 1.0 : 0.05 * std::abs(lo));
    if (log) {
      lo /= 2.0;
      hi *= 2.0;
    } else {
      lo -= pad;
      hi += pad;
    }
  } else if (!log) {
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

}  // namespace svg_detail

inline std::string plot_svg(const Table& table, const PlotSpec& spec) {
  using namespace svg_detail;
  if (spec.y.empty()) throw ConfigError("plot needs at least one y column");
  const auto xs = table.numbers(spec.x);
  std::vector<std::vector<double>> ys;
  for (const auto& name : spec.y) ys.push_back(table.numbers(name));
  std::vector<double> shade;
  if (!spec.shade.empty()) shade = table.numbers(spec.shade);

  const Axis ax = make_axis({xs}, spec.log_x, spec.x);
  std::string yname;
  for (const auto& n : spec.y) yname += (yname.empty() ? "" : ", ") + n;
  const Axis ay = make_axis(ys, spec.log_y, yname);
  auto px = [&](double v) { return L + ax.frac(v) * (W - L - R); };
  auto py = [&](double v) { return H - B - ay.frac(v) * (H - T - B); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    out += "<text x=\"" + f2(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + escape(spec.title) +
           "</text>\n";

  // shaded rows: each covers the half-gaps to its neighbours
  if (!shade.empty()) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!(shade[i] != 0.0) || !std::isfinite(xs[i])) continue;
      if (spec.log_x && !(xs[i] > 0.0)) continue;
      const double c = px(xs[i]);
      const double a = i > 0 ? 0.5 * (px(xs[i - 1]) + c) : c;
      const double b = i + 1 < xs.size() ? 0.5 * (c + px(xs[i + 1])) : c;
      out += "<rect x=\"" + f2(std::max(L, a)) + "\" y=\"" + f2(T) + "\" width=\"" +
             f2(std::max(1.0, std::min(W - R, b) - std::max(L, a))) + "\" height=\"" + f2(H - T - B) +
             "\" fill=\"#bbbbbb\" fill-opacity=\"0.4\"/>\n";
    }
  }

  // axes and ticks
  out += "<rect x=\"" + f2(L) + "\" y=\"" + f2(T) + "\" width=\"" + f2(W - L - R) + "\" height=\"" + f2(H - T - B) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : ax.ticks()) {
    const double x = px(v);
    out += "<line x1=\"" + f2(x) + "\" y1=\"" + f2(H - B) + "\" x2=\"" + f2(x) + "\" y2=\"" + f2(H - B + 5) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + f2(x) + "\" y=\"" + f2(H - B + 17) + "\" text-anchor=\"middle\">" + tick_label(v) +
           "</text>\n";
  }
  for (double v : ay.ticks()) {
    const double y = py(v);
    out += "<line x1=\"" + f2(L - 5) + "\" y1=\"" + f2(y) + "\" x2=\"" + f2(L) + "\" y2=\"" + f2(y) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + f2(L - 8) + "\" y=\"" + f2(y + 4) + "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
  }
  out += "<text x=\"" + f2(L + 0.5 * (W - L - R)) + "\" y=\"" + f2(H - 10) + "\" text-anchor=\"middle\">" +
         escape(spec.x) + (spec.log_x ? " (log)" : "") + "</text>\n";
  out += "<text x=\"16\" y=\"" + f2(T + 0.5 * (H - T - B)) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         f2(T + 0.5 * (H - T - B)) + ")\">" + escape(yname) + (spec.log_y ? " (log)" : "") + "</text>\n";

  // series; non-finite or non-positive (log) values break the line
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const char* color = palette[k % std::size(palette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i], y = ys[k][i];
      const bool ok = std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
      if (!ok) {
        flush();
        continue;
      }
      pts += (pts.empty() ? "" : " ") + f2(px(x)) + "," + f2(py(y));
      out += "<circle cx=\"" + f2(px(x)) + "\" cy=\"" + f2(py(y)) + "\" r=\"2\" fill=\"" + color + "\"/>\n";
    }
    flush();
    const double ly = T + 14 + 14 * k;
    out += "<line x1=\"" + f2(W - R - 120) + "\" y1=\"" + f2(ly) + "\" x2=\"" + f2(W - R - 100) + "\" y2=\"" + f2(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + f2(W - R - 95) + "\" y=\"" + f2(ly + 4) + "\">" + escape(spec.y[k]) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace nevlab::cli
