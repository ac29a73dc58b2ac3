#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "regretlab/error.hpp"
#include "regretlab/norms.hpp"

namespace regretlab {

/// Grid controls shared by the comparator and supremum optimizers.
struct GridSpec {
  std::size_t points = 64;  // per axis
  std::size_t passes = 3;   // local refinement passes
  double shrink = 4.0;      // step shrink factor per pass
  std::size_t local_points = 9;
};

/// n geometrically spaced points from lo to hi inclusive (lo, hi > 0).
inline Vec log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ParameterError("log_grid: need 0 < lo <= hi");
  if (n == 0) return {};
  if (n == 1 || lo == hi) return Vec(n == 1 ? 1 : n, lo);
  Vec g(n);
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(llo + step * static_cast<double>(i));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline Vec linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

struct Optimum2d {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// Maximizes f over the box [xlo,xhi]×[ylo,yhi] by a log-spaced grid followed
/// by coordinate-wise local scans in log space. Ties keep the first point
/// found (lexicographic in the grid order).
inline Optimum2d maximize_log_box(const std::function<double(double, double)>& f, double xlo, double xhi, double ylo,
                                  double yhi, const GridSpec& spec) {
  const Vec xs = log_grid(xlo, xhi, spec.points);
  const Vec ys = log_grid(ylo, yhi, spec.points);
  Optimum2d best{xs[0], ys[0], -kInf};
  for (double x : xs)
    for (double y : ys) {
      const double v = f(x, y);
      if (v > best.value) best = {x, y, v};
    }
  double hx = spec.points > 1 ? (std::log(xhi) - std::log(xlo)) / static_cast<double>(spec.points - 1) : 0.0;
  double hy = spec.points > 1 ? (std::log(yhi) - std::log(ylo)) / static_cast<double>(spec.points - 1) : 0.0;
  const auto half = static_cast<std::ptrdiff_t>(spec.local_points / 2);
  for (std::size_t pass = 0; pass < spec.passes; ++pass) {
    hx /= spec.shrink;
    hy /= spec.shrink;
    for (int axis = 0; axis < 2; ++axis) {
      const double h = axis == 0 ? hx : hy;
      const double centre = std::log(axis == 0 ? best.x : best.y);
      const double lo = std::log(axis == 0 ? xlo : ylo);
      const double hi = std::log(axis == 0 ? xhi : yhi);
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        if (k == 0) continue;
        const double c = std::exp(clip(centre + h * static_cast<double>(k), lo, hi));
        const double v = axis == 0 ? f(c, best.y) : f(best.x, c);
        if (v > best.value) {
          if (axis == 0)
            best.x = c;
          else
            best.y = c;
          best.value = v;
        }
      }
    }
  }
  return best;
}

struct Optimum1d {
  double x = 0.0;
  double value = 0.0;
};

/// Minimizes a convex function of a scalar on [lo, hi]: grid scan, then
/// bisection on the sign of the one-sided slope inside the bracketing cells.
inline Optimum1d minimize_convex_scalar(const std::function<double(double)>& f, double lo, double hi,
                                        std::size_t grid = 201, std::size_t bisection_steps = 30) {
  if (grid < 2) grid = 2;
  const Vec qs = linear_grid(lo, hi, grid);
  std::size_t best = 0;
  double best_v = f(qs[0]);
  for (std::size_t i = 1; i < qs.size(); ++i) {
    const double v = f(qs[i]);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double l = qs[best > 0 ? best - 1 : 0];
  double r = qs[std::min(best + 1, qs.size() - 1)];
  for (std::size_t s = 0; s < bisection_steps && r > l; ++s) {
    const double m = 0.5 * (l + r);
    const double delta = (r - l) * 1e-6;
    if (f(m + delta) < f(m))
      l = m;
    else
      r = m;
  }
  const double m = 0.5 * (l + r);
  const double vm = f(m);
  if (vm < best_v) return {m, vm};
  return {qs[best], best_v};
}

}  // namespace regretlab
