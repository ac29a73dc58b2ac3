#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "regretlab/error.hpp"

namespace regretlab {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// ℓ_p norm for p in [1, ∞]. p = 2 goes through l2_norm so that callers
/// relying on bit-identical Euclidean results get them.
inline double lp_norm(std::span<const double> v, double p) {
  if (p == 2.0) return l2_norm(v);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x) / m, p);
  return m * std::pow(s, 1.0 / p);
}

/// Hölder conjugate: 1/p + 1/q = 1.
inline double holder_conjugate(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

inline double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

inline bool l1_norm_le(std::span<const double> v, double radius) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s <= radius;
}

/// Euclidean projection onto the ℓ₁ ball (Duchi et al. 2008, sort-based).
inline void project_l1_ball(std::span<double> v, double radius) {
  if (l1_norm_le(v, radius)) return;
  Vec u(v.size());
  std::transform(v.begin(), v.end(), u.begin(), [](double x) { return std::abs(x); });
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  for (double& x : v) x = std::copysign(std::max(std::abs(x) - tau, 0.0), x);
}

/// Euclidean projection onto B_p(radius) for p ∈ {1, 2, ∞}; other p use a
/// radial rescale, which is the Bregman projection for the matching
/// p-norm potential.
inline void project_ball(std::span<double> v, double p, double radius) {
  if (p == 1.0) {
    project_l1_ball(v, radius);
    return;
  }
  if (std::isinf(p)) {
    for (double& x : v) x = clip(x, -radius, radius);
    return;
  }
  const double n = lp_norm(v, p);
  if (n > radius) {
    const double scale = radius / n;
    for (double& x : v) x *= scale;
  }
}

}  // namespace regretlab
