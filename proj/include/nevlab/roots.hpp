#pragma once

// Zeros of holomorphic expressions inside a disc.
//
// Polynomials go through companion-matrix eigenvalues. Expressions with
// exponential terms are handled by the argument principle on a quadtree of
// squares: a square whose winding number is zero is discarded, a square
// holding one zero seeds a Newton iteration, and a square that shrinks below
// the resolution while holding k zeros is reported as one zero of
// multiplicity k. Every result is checked against the winding number of the
// whole disc boundary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/poly.hpp"

namespace nevlab {

struct ZeroSet {
  std::vector<Root> interior;  ///< zeros with |z| < R, with multiplicity
  std::vector<Root> boundary;  ///< zeros on |z| = R within a relative 1e-9
  int winding = 0;             ///< argument-principle count for |z| < R
  int total() const {
    int s = 0;
    for (const auto& r : interior) s += r.multiplicity;
    return s;
  }
};

namespace detail {

struct ContourZero {};  // a zero sits on the contour being integrated

/// Change of arg g along the segment a -> b, refined until each piece turns
/// by less than pi/4 and g'/g predicts a small step.
inline double arg_change(const HoloExpr& g, const HoloExpr& dg, cplx a, cplx b, const ScaledComplex& ga,
                         const ScaledComplex& gb, int depth) {
  if (ga.is_zero() || gb.is_zero()) throw ContourZero{};
  const cplx m = 0.5 * (a + b);
  const auto gm_eval = g.evaluate(m);
  if (gm_eval.vanishes(1e-13)) throw ContourZero{};
  const ScaledComplex gm = gm_eval.value;
  const double d1 = std::arg(ratio(gm, ga));
  const double d2 = std::arg(ratio(gb, gm));
  const double direct = std::arg(ratio(gb, ga));
  const double step = std::abs(ratio(dg(m), gm)) * std::abs(b - a);
  const bool fine = std::abs(d1) < std::numbers::pi / 4 && std::abs(d2) < std::numbers::pi / 4 &&
                    std::abs(d1 + d2 - direct) < 1e-3 && step < 0.5;
  if (fine) return d1 + d2;
  if (depth <= 0) throw ContourZero{};
  return arg_change(g, dg, a, m, ga, gm, depth - 1) + arg_change(g, dg, m, b, gm, gb, depth - 1);
}

inline int winding_polygon(const HoloExpr& g, const HoloExpr& dg, const std::vector<cplx>& vertices) {
  double total = 0.0;
  std::vector<ScaledComplex> vals;
  for (auto v : vertices) {
    const auto e = g.evaluate(v);
    if (e.vanishes(1e-13)) throw ContourZero{};
    vals.push_back(e.value);
  }
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const std::size_t j = (i + 1) % vertices.size();
    total += arg_change(g, dg, vertices[i], vertices[j], vals[i], vals[j], 40);
  }
  const double w = total / (2.0 * std::numbers::pi);
  const double rounded = std::round(w);
  if (std::abs(w - rounded) > 1e-3) throw ContourZero{};
  return static_cast<int>(rounded);
}

inline int winding_square(const HoloExpr& g, const HoloExpr& dg, cplx lo, double side) {
  return winding_polygon(g, dg, {lo, lo + side, lo + cplx(side, side), lo + cplx(0.0, side)});
}

/// Newton iteration on g^{(m-1)}; returns false unless it converges inside
/// the w x h box at lo.
inline bool newton(const std::vector<HoloExpr>& derivs, int m, cplx& z, cplx lo, double w, double h) {
  const HoloExpr& q = derivs[m - 1];
  const HoloExpr& dq = derivs[m];
  const double slack = 0.25 * std::max(w, h);
  for (int it = 0; it < 80; ++it) {
    const ScaledComplex d = dq(z);
    if (d.is_zero()) return false;
    const cplx step = ratio(q(z), d);
    z -= step;
    if (z.real() < lo.real() - slack || z.real() > lo.real() + w + slack || z.imag() < lo.imag() - slack ||
        z.imag() > lo.imag() + h + slack)
      return false;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) break;
  }
  // the zero counted in this box must be the one Newton reached
  const double eps = 1e-9 * std::max(w, h);
  return z.real() >= lo.real() - eps && z.real() <= lo.real() + w + eps && z.imag() >= lo.imag() - eps &&
         z.imag() <= lo.imag() + h + eps;
}

inline bool newton(const std::vector<HoloExpr>& derivs, int m, cplx& z, cplx lo, double side) {
  return newton(derivs, m, z, lo, side, side);
}

struct QuadtreeSearch {
  const HoloExpr& g;
  std::vector<HoloExpr> derivs;  // g, g', g'', ...
  double resolution;
  std::vector<Root> found;
  int budget = 200000;

  QuadtreeSearch(const HoloExpr& g_, double res) : g(g_), resolution(res) { derivs = {g, g.derivative()}; }

  const HoloExpr& derivative(int k) {
    while (static_cast<int>(derivs.size()) <= k) derivs.push_back(derivs.back().derivative());
    return derivs[k];
  }

  // A cluster of count zeros that Newton on g^{(count-1)} collapses to one
  // point, confirmed by the winding number of a small square around it.
  bool multiple_zero(cplx lo, double w, double h, int count) {
    derivative(count);
    cplx z = lo + cplx(0.5 * w, 0.5 * h);
    if (!newton(derivs, count, z, lo, w, h)) return false;
    const double s = std::min(0.25 * std::min(w, h), 10.0 * resolution);
    try {
      if (winding_square(g, derivs[1], z - cplx(0.5 * s, 0.5 * s), s) != count) return false;
    } catch (const ContourZero&) {
      return false;
    }
    found.push_back({z, count});
    return true;
  }

  void search(cplx lo, double side, int count) {
    if (--budget < 0) throw CountingError("zero search exceeded its square budget");
    if (count == 0) return;
    if (count > 1 && side >= resolution && multiple_zero(lo, side, side, count)) return;
    if (count == 1 || side < resolution) {
      derivative(count);
      cplx z = lo + cplx(0.5 * side, 0.5 * side);
      if (newton(derivs, count, z, lo, side)) {
        found.push_back({z, count});
        return;
      }
      if (side < resolution) {
        found.push_back({lo + cplx(0.5 * side, 0.5 * side), count});
        return;
      }
    }
    // split at a slightly off-centre point so symmetric zero sets do not
    // land on the cut lines; retry other cut fractions on contact
    static constexpr double fractions[] = {0.5123, 0.4871, 0.5379, 0.4617, 0.5711};
    for (double frac : fractions) {
      try {
        const double s1 = side * frac, s2 = side - s1;
        // four sub-rectangles, treated as squares of their own extents
        struct Cell {
          cplx lo;
          double w, h;
        };
        const Cell cells[4] = {{lo, s1, s1},
                               {lo + cplx(s1, 0.0), s2, s1},
                               {lo + cplx(0.0, s1), s1, s2},
                               {lo + cplx(s1, s1), s2, s2}};
        int counts[4];
        int sum = 0;
        for (int c = 0; c < 4; ++c) {
          const auto& cell = cells[c];
          counts[c] = winding_polygon(g, derivs[1], {cell.lo, cell.lo + cell.w, cell.lo + cplx(cell.w, cell.h),
                                                      cell.lo + cplx(0.0, cell.h)});
          sum += counts[c];
        }
        if (sum != count) continue;
        for (int c = 0; c < 4; ++c) {
          const auto& cell = cells[c];
          search_rect(cell.lo, cell.w, cell.h, counts[c]);
        }
        return;
      } catch (const ContourZero&) {
        continue;
      }
    }
    throw CountingError("could not isolate zeros near " + std::to_string(lo.real()) + "+" +
                        std::to_string(lo.imag()) + "i");
  }

  // Rectangles are searched by embedding them in their bounding square after
  // counting; the count is exact for the rectangle itself.
  void search_rect(cplx lo, double w, double h, int count) {
    if (count == 0) return;
    if (std::abs(w - h) <= 1e-12 * std::max(w, h)) {
      search(lo, w, count);
      return;
    }
    if (count > 1 && std::max(w, h) >= resolution && multiple_zero(lo, w, h, count)) return;
    // split the long side so that the pieces are closer to square
    static constexpr double fractions[] = {0.5, 0.4871, 0.5379};
    for (double frac : fractions) {
      try {
        cplx lo2;
        double w1, h1, w2, h2;
        if (w > h) {
          w1 = w * frac;
          w2 = w - w1;
          h1 = h2 = h;
          lo2 = lo + w1;
        } else {
          h1 = h * frac;
          h2 = h - h1;
          w1 = w2 = w;
          lo2 = lo + cplx(0.0, h1);
        }
        const int c1 = winding_polygon(g, derivs[1], {lo, lo + w1, lo + cplx(w1, h1), lo + cplx(0.0, h1)});
        const int c2 = count - c1;
        if (c2 < 0) continue;
        if (std::max(w, h) < resolution) {
          search(lo, std::max(w, h), count);
          return;
        }
        if (w > h && std::abs(w1 - h) < 1e-12 * h && std::abs(w2 - h) < 1e-12 * h) {
          search(lo, h, c1);
          search(lo2, h, c2);
        } else {
          search_rect(lo, w1, h1, c1);
          search_rect(lo2, w2, h2, c2);
        }
        return;
      } catch (const ContourZero&) {
        continue;
      }
    }
    throw CountingError("could not split a rectangle without touching a zero near " + std::to_string(lo.real()) +
                        "+" + std::to_string(lo.imag()) + "i (" + std::to_string(w) + " x " + std::to_string(h) +
                        ", count " + std::to_string(count) + ")");
  }
};

/// Change of arg g along the arc R e^{it}, t in [t0, t1], refined like
/// arg_change but with every node on the circle itself.
inline double arg_change_arc(const HoloExpr& g, const HoloExpr& dg, double R, double t0, double t1,
                             const ScaledComplex& ga, const ScaledComplex& gb, int depth) {
  if (ga.is_zero() || gb.is_zero()) throw ContourZero{};
  const double tm = 0.5 * (t0 + t1);
  const cplx m = std::polar(R, tm);
  const auto gm_eval = g.evaluate(m);
  if (gm_eval.vanishes(1e-13)) throw ContourZero{};
  const ScaledComplex gm = gm_eval.value;
  const double d1 = std::arg(ratio(gm, ga));
  const double d2 = std::arg(ratio(gb, gm));
  const double direct = std::arg(ratio(gb, ga));
  const double step = std::abs(ratio(dg(m), gm)) * R * (t1 - t0);
  const bool fine = std::abs(d1) < std::numbers::pi / 4 && std::abs(d2) < std::numbers::pi / 4 &&
                    std::abs(d1 + d2 - direct) < 1e-3 && step < 0.5;
  if (fine) return d1 + d2;
  if (depth <= 0) throw ContourZero{};
  return arg_change_arc(g, dg, R, t0, tm, ga, gm, depth - 1) + arg_change_arc(g, dg, R, tm, t1, gm, gb, depth - 1);
}

inline int winding_circle(const HoloExpr& g, const HoloExpr& dg, double R) {
  const int n = 64;
  std::vector<ScaledComplex> vals(n + 1);
  std::vector<double> t(n + 1);
  for (int k = 0; k <= n; ++k) {
    t[k] = 2.0 * std::numbers::pi * (k + 0.25) / n;
    const auto e = g.evaluate(std::polar(R, t[k]));
    if (e.vanishes(1e-13)) throw ContourZero{};
    vals[k] = e.value;
  }
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += arg_change_arc(g, dg, R, t[k], t[k + 1], vals[k], vals[k + 1], 40);
  const double w = total / (2.0 * std::numbers::pi);
  const double rounded = std::round(w);
  if (std::abs(w - rounded) > 1e-3) throw ContourZero{};
  return static_cast<int>(rounded);
}

}  // namespace detail

/// Zeros of g in the open disc |z| < R with multiplicity, certified against
/// the argument principle on the boundary circle.
inline ZeroSet zeros_in_disc(const HoloExpr& g, double R) {
  if (g.is_zero()) throw ConfigError("zeros of an identically zero expression");
  if (!(R > 0.0)) throw RangeError("zeros_in_disc needs R > 0");
  ZeroSet out;
  std::vector<Root> candidates;
  const bool single_term = g.terms().size() == 1;
  if (single_term) {
    // p(z) e^{q(z)} vanishes exactly where p does
    candidates = polynomial_roots(g.terms()[0].coeff);
  } else {
    const double side = 2.0 * R * 1.01;
    const cplx lo(-R * 1.01 + 1e-3 * R * 0.731, -R * 1.01 + 1e-3 * R * 0.413);
    detail::QuadtreeSearch qs(g, 1e-7 * std::max(1.0, R));
    int count = -1;
    for (double grow : {1.0, 1.003, 1.011}) {
      try {
        count = detail::winding_square(g, qs.derivs[1], lo * grow, side * grow);
        qs.search(lo * grow, side * grow, count);
        break;
      } catch (const detail::ContourZero&) {
        qs.found.clear();
        continue;
      }
    }
    if (count < 0) throw CountingError("zero search could not start");
    candidates = std::move(qs.found);
  }
  for (const auto& r : candidates) {
    const double a = std::abs(r.z);
    if (std::abs(a - R) <= 1e-9 * R)
      out.boundary.push_back(r);
    else if (a < R)
      out.interior.push_back(r);
  }
  // certify the interior count
  const HoloExpr dg = g.derivative();
  int wind;
  try {
    wind = detail::winding_circle(g, dg, R);
  } catch (const detail::ContourZero&) {
    if (out.boundary.empty()) throw CountingError("argument principle on |z|=R failed without a boundary zero");
    // zeros on the circle: count those strictly inside a slightly smaller disc
    try {
      wind = detail::winding_circle(g, dg, R * (1.0 - 1e-8));
    } catch (const detail::ContourZero&) {
      throw CountingError("argument principle failed near the boundary circle");
    }
  }
  out.winding = wind;
  if (wind != out.total())
    throw CountingError("zero finder found " + std::to_string(out.total()) + " zeros but the argument principle gives " +
                        std::to_string(wind));
  std::sort(out.interior.begin(), out.interior.end(), [](const Root& a, const Root& b) {
    return a.z.real() != b.z.real() ? a.z.real() < b.z.real() : a.z.imag() < b.z.imag();
  });
  return out;
}

}  // namespace nevlab
