#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/game_core.hpp"
#include "regretlab/optimize.hpp"
#include "regretlab/rng.hpp"
#include "regretlab/strategy_classes.hpp"

namespace regretlab {

enum class NoiseKind { kRademacher, kGaussian };

inline const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  bool exact = false;
};

inline nlohmann::json to_json(const Estimate& e) {
  return {{"value", e.value}, {"stderr", e.stderr_}, {"samples", e.samples}, {"exact", e.exact}};
}

/// Per-sample relaxation values. Sample k of two different prefixes uses the
/// same noise at every shared future position, so differences are paired.
struct SampleSet {
  Vec values;
  bool exact = false;  // values are an exhaustive, equally weighted enumeration

  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
  Estimate estimate() const {
    Estimate e;
    e.samples = values.size();
    e.exact = exact;
    e.value = mean();
    if (!exact && values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - e.value) * (v - e.value);
      e.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return e;
  }
};

struct McControls {
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  /// Exact enumeration over the future signs when T - t is at most this.
  std::size_t exhaustive_depth = 12;
  NoiseKind noise = NoiseKind::kRademacher;
};

// ---------------------------------------------------------------------------
// Random walks over addressed noise
// ---------------------------------------------------------------------------

/// Extremes of the partial sums of a walk read backwards.
struct WalkSummary {
  double total = 0.0;
  double max = -kInf;  // over non-empty partial sums
  double min = kInf;
};

namespace detail {

struct ByteWalk {
  std::array<std::int8_t, 256> total{};
  std::array<std::int8_t, 256> max{};
  std::array<std::int8_t, 256> min{};
};

/// For each byte of sign bits (bit j is position base + j), the walk from
/// bit 7 down to bit 0.
inline const ByteWalk& byte_walk() {
  static const ByteWalk table = [] {
    ByteWalk w;
    for (int v = 0; v < 256; ++v) {
      int s = 0, mx = INT_MIN, mn = INT_MAX;
      for (int j = 7; j >= 0; --j) {
        s += ((v >> j) & 1) ? 1 : -1;
        mx = std::max(mx, s);
        mn = std::min(mn, s);
      }
      w.total[v] = static_cast<std::int8_t>(s);
      w.max[v] = static_cast<std::int8_t>(mx);
      w.min[v] = static_cast<std::int8_t>(mn);
    }
    return w;
  }();
  return table;
}

}  // namespace detail

/// Walks ε_hi, ε_hi + ε_{hi-1}, ..., Σ_{lo..hi} ε for the Rademacher signs of
/// `sample`, scaled by `scale`. Empty when lo > hi.
inline WalkSummary sign_walk_backward(const NoiseField& noise, std::uint64_t sample, std::uint64_t lo, std::uint64_t hi,
                                      double scale) {
  WalkSummary out;
  if (lo > hi) return out;
  const auto& tab = detail::byte_walk();
  std::int64_t sum = 0, mx = INT64_MIN, mn = INT64_MAX;
  std::uint64_t cached = UINT64_MAX;
  Philox4x32::Counter block{};
  std::uint64_t pos = hi;
  while (true) {
    const std::uint64_t bidx = pos >> 7;
    if (bidx != cached) {
      block = noise.sign_block(sample, bidx);
      cached = bidx;
    }
    const std::uint32_t word = block[(pos >> 5) & 3u];
    if ((pos & 7u) == 7u && pos >= lo + 7) {
      const unsigned byte = (word >> (8 * ((pos >> 3) & 3u))) & 0xFFu;
      mx = std::max<std::int64_t>(mx, sum + tab.max[byte]);
      mn = std::min<std::int64_t>(mn, sum + tab.min[byte]);
      sum += tab.total[byte];
      if (pos < lo + 8) break;
      pos -= 8;
    } else {
      sum += ((word >> (pos & 31u)) & 1u) ? 1 : -1;
      mx = std::max(mx, sum);
      mn = std::min(mn, sum);
      if (pos == lo) break;
      --pos;
    }
  }
  out.total = scale * static_cast<double>(sum);
  out.max = scale * static_cast<double>(mx);
  out.min = scale * static_cast<double>(mn);
  return out;
}

inline WalkSummary gaussian_walk_backward(const NoiseField& noise, std::uint64_t sample, std::uint64_t lo,
                                          std::uint64_t hi, double scale) {
  WalkSummary out;
  if (lo > hi) return out;
  double sum = 0.0;
  for (std::uint64_t pos = hi;; --pos) {
    sum += scale * noise.gaussian(sample, pos);
    out.max = std::max(out.max, sum);
    out.min = std::min(out.min, sum);
    if (pos == lo) break;
  }
  out.total = sum;
  return out;
}

/// Walk over an explicit sign mask (bit j ↔ position lo + j), for exhaustive
/// enumeration.
inline WalkSummary mask_walk_backward(std::uint64_t mask, std::size_t n, double scale) {
  WalkSummary out;
  double sum = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    sum += ((mask >> j) & 1u) ? scale : -scale;
    out.max = std::max(out.max, sum);
    out.min = std::min(out.min, sum);
  }
  out.total = sum;
  return out;
}

// ---------------------------------------------------------------------------
// Max-suffix relaxation for the full-history class over B₁(1)
// ---------------------------------------------------------------------------

/// max/min over s ≤ t of -Σ_{i=s}^{t} z_i (non-empty suffixes of the prefix).
struct PrefixSuffixRange {
  bool any = false;
  double max = -kInf;
  double min = kInf;
};

inline PrefixSuffixRange prefix_suffix_range(const History& prefix) {
  PrefixSuffixRange r;
  double s = 0.0;
  for (std::size_t i = prefix.size(); i >= 1; --i) {
    s -= prefix.scalar(static_cast<std::ptrdiff_t>(i));
    r.max = std::max(r.max, s);
    r.min = std::min(r.min, s);
    r.any = true;
  }
  return r;
}

/// max_s |Σ_{i=s}^T a_i| given the prefix range (shifted by the future
/// total) and the future walk.
inline double b1_suffix_max(const PrefixSuffixRange& p, const WalkSummary& future) {
  double v = 0.0;
  if (future.max > -kInf) v = std::max(future.max, -future.min);
  if (p.any) v = std::max(v, std::max(p.max + future.total, -(p.min + future.total)));
  return v;
}

inline double noise_scale(NoiseKind k) { return k == NoiseKind::kRademacher ? 2.0 : kSqrt2Pi; }

/// Per-sample values of max_{1≤s≤T} |Σ_{i=s}^T a_i| with a_s = -z_s for s ≤ t
/// and the scaled noise for s > t.
inline SampleSet rel_b1_samples(const History& prefix, std::size_t T, const McControls& mc) {
  const std::size_t t = prefix.size();
  if (t > T) throw DimensionError("rel_b1: prefix longer than the horizon");
  const PrefixSuffixRange pr = prefix_suffix_range(prefix);
  const std::size_t n = T - t;
  SampleSet out;
  if (n == 0) {
    out.values = {b1_suffix_max(pr, WalkSummary{})};
    out.exact = true;
    return out;
  }
  if (mc.noise == NoiseKind::kRademacher && n <= mc.exhaustive_depth && n < 63) {
    const std::uint64_t count = std::uint64_t{1} << n;
    out.values.reserve(count);
    for (std::uint64_t m = 0; m < count; ++m) out.values.push_back(b1_suffix_max(pr, mask_walk_backward(m, n, 2.0)));
    out.exact = true;
    return out;
  }
  if (mc.samples == 0) throw ParameterError("rel_b1: samples must be positive");
  const NoiseField noise(mc.seed, Stream::kRelaxation);
  const double scale = noise_scale(mc.noise);
  out.values.reserve(mc.samples);
  for (std::size_t k = 0; k < mc.samples; ++k) {
    const WalkSummary w = mc.noise == NoiseKind::kRademacher ? sign_walk_backward(noise, k, t + 1, T, scale)
                                                            : gaussian_walk_backward(noise, k, t + 1, T, scale);
    out.values.push_back(b1_suffix_max(pr, w));
  }
  return out;
}

inline Estimate rel_b1(const History& prefix, std::size_t T, const McControls& mc) {
  return rel_b1_samples(prefix, T, mc).estimate();
}

// ---------------------------------------------------------------------------
// Relaxation for the Beta-MAP class
// ---------------------------------------------------------------------------

/// Supremum over (α, β) in the box of
///   2 Σ_{s>t} ε_s (s+α-2)/(s+α+β-3) - L(α+β) + c·r(α+β)
/// where L and r only depend on g = α+β-2. With a = α-1, b = β-1 the noise
/// term is 2A - 2b·Σ_{s>t} ε_s/(s-1+g), affine in b for fixed g, so the
/// supremum is a 1-D search over g with b at an endpoint.
class BetaSupSolver {
 public:
  BetaSupSolver(BetaBox box, std::size_t T, GridSpec grid = {}) : box_(box), T_(T), grid_(grid) {
    box_.validate();
    g_lo_ = box_.a_lo() + box_.b_lo();
    g_hi_ = box_.a_hi() + box_.b_hi();
    const std::size_t n = std::max<std::size_t>(grid_.points, 4);
    if (g_hi_ <= 1.0) {
      g_ = log_grid(g_lo_, g_hi_, n);
    } else {
      const std::size_t low = std::max<std::size_t>(n / 3, 2);
      g_ = log_grid(g_lo_, 1.0, low + 1);
      g_.pop_back();
      for (double v : log_grid(1.0, g_hi_, n - low)) g_.push_back(v);
    }
    // The feasible b interval changes shape at these two points; optima
    // often sit exactly there.
    for (double k : {box_.a_lo() + box_.b_hi(), box_.a_hi() + box_.b_lo()})
      if (k > g_lo_ && k < g_hi_) g_.push_back(k);
    std::sort(g_.begin(), g_.end());
    g_.erase(std::unique(g_.begin(), g_.end()), g_.end());
    inv_.resize(static_cast<Eigen::Index>(g_.size()), static_cast<Eigen::Index>(T_));
    for (std::size_t i = 0; i < g_.size(); ++i)
      for (std::size_t s = 1; s <= T_; ++s)
        inv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s - 1)) = 1.0 / (static_cast<double>(s - 1) + g_[i]);
  }

  const Vec& g_grid() const { return g_; }
  const BetaBox& box() const { return box_; }
  std::size_t horizon() const { return T_; }
  const GridSpec& grid() const { return grid_; }

  /// Column s-1 holds 1/(s-1+g_i).
  const Eigen::MatrixXd& inverse_table() const { return inv_; }

  double b_low(double g) const { return std::max(box_.b_lo(), g - box_.a_hi()); }
  double b_high(double g) const { return std::min(box_.b_hi(), g - box_.a_lo()); }

  /// The optimal b for a given noise slope S_ε(g).
  double best_b(double g, double slope) const { return slope > 0.0 ? b_low(g) : b_high(g); }

  /// Σ_{s≤t} |S_{s-1}/(s-1+g) - z_s| over the prefix.
  static double prefix_loss(const History& prefix, double g) {
    double ones = 0.0, total = 0.0;
    for (std::size_t s = 1; s <= prefix.size(); ++s) {
      const double z = prefix.scalar(static_cast<std::ptrdiff_t>(s));
      total += std::abs(ones / (static_cast<double>(s - 1) + g) - z);
      ones += z;
    }
    return total;
  }

  /// Objective pieces for one noise draw, evaluated at arbitrary g.
  struct Problem {
    const Vec* eps = nullptr;  // ε_{t+1..T} (scaled as ±1 or Gaussian)
    std::size_t t = 0;         // future positions are t+1..T
    double eps_total = 0.0;
    std::function<double(double)> penalty;  // L(g) - c·r(g)
  };

  double noise_slope(const Problem& p, double g) const {
    double s = 0.0;
    for (std::size_t j = 0; j < p.eps->size(); ++j) s += (*p.eps)[j] / (static_cast<double>(p.t + j) + g);
    return s;
  }

  double objective(const Problem& p, double g) const {
    const double slope = p.eps->empty() ? 0.0 : noise_slope(p, g);
    return 2.0 * p.eps_total - 2.0 * best_b(g, slope) * slope - p.penalty(g);
  }

  /// Local refinement in log g around one grid point.
  std::pair<double, double> refine(const Problem& p, std::size_t best_index, double best_value) const {
    double best_g = g_[best_index];
    double value = best_value;
    double h = 0.0;
    if (best_index + 1 < g_.size()) h = std::max(h, std::log(g_[best_index + 1] / g_[best_index]));
    if (best_index > 0) h = std::max(h, std::log(g_[best_index] / g_[best_index - 1]));
    const auto half = static_cast<std::ptrdiff_t>(grid_.local_points / 2);
    const double llo = std::log(g_lo_), lhi = std::log(g_hi_);
    for (std::size_t pass = 0; pass < grid_.passes; ++pass) {
      const double centre = std::log(best_g);
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        if (k == 0) continue;
        const double g = std::exp(clip(centre + h * static_cast<double>(k) / static_cast<double>(half), llo, lhi));
        const double v = objective(p, g);
        if (v > value) {
          value = v;
          best_g = g;
        }
      }
      h /= grid_.shrink;
    }
    return {best_g, value};
  }

  /// Refines the best few grid local maxima; the objective is piecewise
  /// smooth in g and can have several bumps.
  double refine_all(const Problem& p, const Vec& values) const {
    constexpr std::size_t kStarts = 3;
    std::vector<std::pair<double, std::size_t>> peaks;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const bool left = i == 0 || values[i] >= values[i - 1];
      const bool right = i + 1 == values.size() || values[i] >= values[i + 1];
      if (left && right) peaks.emplace_back(values[i], i);
    }
    const std::size_t keep = std::min(kStarts, peaks.size());
    std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(keep), peaks.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = -kInf;
    for (std::size_t k = 0; k < keep; ++k) best = std::max(best, refine(p, peaks[k].second, peaks[k].first).second);
    return best;
  }

  /// Full supremum for one draw: grid scan plus refinement.
  double sup(const Problem& p) const {
    Vec values(g_.size());
    for (std::size_t i = 0; i < g_.size(); ++i) values[i] = objective(p, g_[i]);
    return refine_all(p, values);
  }

 private:
  BetaBox box_;
  std::size_t T_;
  GridSpec grid_;
  double g_lo_ = 0.0, g_hi_ = 0.0;
  Vec g_;
  Eigen::MatrixXd inv_;
};

/// Per-sample values of the Beta-MAP relaxation at a binary prefix.
inline SampleSet rel_beta_samples(const History& prefix, const BetaSupSolver& solver, const McControls& mc) {
  const std::size_t t = prefix.size();
  const std::size_t T = solver.horizon();
  if (t > T) throw DimensionError("rel_beta: prefix longer than the horizon");
  const std::size_t n = T - t;
  // L_t on the grid once; refinement points recompute.
  const Vec& gs = solver.g_grid();
  Vec grid_penalty(gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) grid_penalty[i] = BetaSupSolver::prefix_loss(prefix, gs[i]);

  auto one = [&](const Vec& eps) {
    BetaSupSolver::Problem p;
    p.eps = &eps;
    p.t = t;
    for (double e : eps) p.eps_total += e;
    p.penalty = [&](double g) { return BetaSupSolver::prefix_loss(prefix, g); };
    Vec values(gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const double slope = eps.empty() ? 0.0 : solver.noise_slope(p, gs[i]);
      values[i] = 2.0 * p.eps_total - 2.0 * solver.best_b(gs[i], slope) * slope - grid_penalty[i];
    }
    return solver.refine_all(p, values);
  };

  SampleSet out;
  Vec eps(n);
  if (n == 0) {
    out.values = {one(eps)};
    out.exact = true;
    return out;
  }
  if (mc.noise == NoiseKind::kRademacher && n <= mc.exhaustive_depth && n < 63) {
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t m = 0; m < count; ++m) {
      for (std::size_t j = 0; j < n; ++j) eps[j] = ((m >> j) & 1u) ? 1.0 : -1.0;
      out.values.push_back(one(eps));
    }
    out.exact = true;
    return out;
  }
  const NoiseField noise(mc.seed, Stream::kRelaxation);
  const double scale = mc.noise == NoiseKind::kRademacher ? 1.0 : kSqrt2Pi / 2.0;
  for (std::size_t k = 0; k < mc.samples; ++k) {
    for (std::size_t j = 0; j < n; ++j)
      eps[j] = mc.noise == NoiseKind::kRademacher ? noise.sign(k, t + 1 + j) : scale * noise.gaussian(k, t + 1 + j);
    out.values.push_back(one(eps));
  }
  return out;
}

inline Estimate rel_beta(const History& prefix, const BetaSupSolver& solver, const McControls& mc) {
  return rel_beta_samples(prefix, solver, mc).estimate();
}

/// The comparator class implied by the Beta-MAP relaxation: predictions
/// Σ_{i<t} z_i / (t+α+β-3), absolute loss. Its best comparator is found on a
/// dense 2-D grid, independent of the 1-D reduction used by the relaxation.
class BetaRelaxationClass : public StrategyClass {
 public:
  explicit BetaRelaxationClass(BetaBox box, GridSpec grid = {128, 3, 4.0, 9}) : box_(box), grid_(grid) {
    box_.validate();
  }

  std::string name() const override { return "beta_relaxation_class"; }

  Vec predict(std::span<const double> param, const History& history) const override {
    if (param.size() != 2) throw DimensionError("parameter is (alpha, beta)");
    double ones = 0.0;
    for (double z : history.outcomes_flat()) ones += z;
    const double g = param[0] + param[1] - 2.0;
    return {ones / (static_cast<double>(history.size()) + g)};
  }

  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    if (loss.kind != LossKind::kAbsolute) throw UnsupportedError("defined for absolute loss");
    const auto opt = maximize_log_box(
        [&](double a, double b) { return -BetaSupSolver::prefix_loss(history, a + b); }, box_.a_lo(), box_.a_hi(),
        box_.b_lo(), box_.b_hi(), grid_);
    return {{1.0 + opt.x, 1.0 + opt.y}, -opt.value, ComparatorMethod::kGridRefined, true, ""};
  }

  std::vector<Vec> discretize(std::size_t resolution) const override {
    std::vector<Vec> out;
    for (double a : log_grid(box_.a_lo(), box_.a_hi(), resolution))
      for (double b : log_grid(box_.b_lo(), box_.b_hi(), resolution)) out.push_back({1.0 + a, 1.0 + b});
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"class", "beta_relaxation_class"}, {"a_max", box_.a_max}, {"c_beta", box_.c_beta}};
  }

 private:
  BetaBox box_;
  GridSpec grid_;
};

// ---------------------------------------------------------------------------
// Conditional sequential Rademacher complexity (lower estimate)
// ---------------------------------------------------------------------------

struct TreeSampler {
  /// Outcomes that label tree nodes.
  std::vector<Vec> outcomes;
  /// Random trees in addition to the constant (extremal) trees.
  std::size_t random_trees = 8;
  /// Enumerate every pair of trees when their count is at most this.
  std::size_t exhaustive_limit = 0;
};

struct ConditionalEstimate {
  Estimate estimate;
  std::size_t trees = 0;
  std::string method;  // "exhaustive_trees" or "sampled_trees"
};

namespace detail {

/// A labeling of the nodes of a depth-`depth` tree by outcome indices. Node
/// (level j, path bits p) is at index 2^j - 1 + p.
struct Tree {
  std::vector<std::uint32_t> labels;
  std::uint32_t at(std::size_t level, std::uint64_t path) const {
    return labels[(std::size_t{1} << level) - 1 + static_cast<std::size_t>(path)];
  }
};

inline std::size_t tree_nodes(std::size_t depth) { return depth == 0 ? 0 : (std::size_t{1} << depth) - 1; }

inline Tree constant_tree(std::size_t depth, std::uint32_t label) { return {std::vector<std::uint32_t>(tree_nodes(depth), label)}; }

inline Tree random_tree(std::size_t depth, std::size_t arity, CounterRng& rng) {
  Tree tr{std::vector<std::uint32_t>(tree_nodes(depth))};
  for (auto& l : tr.labels) l = static_cast<std::uint32_t>(rng.index(arity));
  return tr;
}

/// Enumerates the i-th tree in mixed radix.
inline Tree indexed_tree(std::size_t depth, std::size_t arity, std::uint64_t index) {
  Tree tr{std::vector<std::uint32_t>(tree_nodes(depth))};
  for (auto& l : tr.labels) {
    l = static_cast<std::uint32_t>(index % arity);
    index /= arity;
  }
  return tr;
}

}  // namespace detail

/// E_ε sup_π [w·Σ_{s>t} ε_s ℓ(π_s(z_{1:t}, w-path), z-tree) - Σ_{s≤t} ℓ(π_s(z_{1:s-1}), z_s)]
/// maximized over candidate (z, w) tree pairs. The w tree feeds the history
/// (depth n-1), the z tree the loss (depth n), n = T - t. The inner supremum
/// runs over cls.discretize(resolution).
inline ConditionalEstimate cond_seq_rademacher(const StrategyClass& cls, const LossSpec& loss, const History& prefix,
                                               std::size_t T, const TreeSampler& trees, const McControls& mc,
                                               std::size_t resolution = 16) {
  const std::size_t t = prefix.size();
  if (t > T) throw DimensionError("cond_seq_rademacher: prefix longer than the horizon");
  const std::size_t n = T - t;
  if (n >= 31) throw SizeError("cond_seq_rademacher: tree depth too large");
  if (trees.outcomes.empty()) throw ParameterError("cond_seq_rademacher: empty outcome set");
  const std::vector<Vec> params = cls.discretize(resolution);
  const std::size_t arity = trees.outcomes.size();

  Vec past(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) past[i] = strategy_loss(cls, params[i], prefix, loss);

  // Noise draws: enumerated when small, otherwise sampled.
  std::vector<Vec> draws;
  bool exact_noise = false;
  if (mc.noise == NoiseKind::kRademacher && n <= mc.exhaustive_depth) {
    exact_noise = true;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
      Vec e(n);
      for (std::size_t j = 0; j < n; ++j) e[j] = ((m >> j) & 1u) ? 1.0 : -1.0;
      draws.push_back(std::move(e));
    }
  } else {
    const NoiseField noise(mc.seed, Stream::kRelaxation);
    for (std::size_t k = 0; k < mc.samples; ++k) {
      Vec e(n);
      for (std::size_t j = 0; j < n; ++j)
        e[j] = mc.noise == NoiseKind::kRademacher ? noise.sign(k, t + 1 + j) : noise.gaussian(k, t + 1 + j);
      draws.push_back(std::move(e));
    }
  }
  const double weight = mc.noise == NoiseKind::kRademacher ? 2.0 : kSqrt2Pi;

  auto evaluate = [&](const detail::Tree& zt, const detail::Tree& wt) {
    SampleSet set;
    set.exact = exact_noise;
    for (const Vec& e : draws) {
      // Path bit j is 1 when ε_{t+1+j} = +1 (sign of σ for Gaussian noise).
      History h = prefix;
      Vec acc(params.size(), 0.0);
      std::uint64_t path = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const Vec& z = trees.outcomes[zt.at(j, path)];
        const auto preds = cls.predict_all(params, h);
        for (std::size_t i = 0; i < params.size(); ++i) acc[i] += weight * e[j] * loss_eval(loss, preds[i], z);
        if (e[j] > 0) path |= std::uint64_t{1} << j;
        if (j + 1 < n) h.push_outcome(trees.outcomes[wt.at(j, path & ((std::uint64_t{1} << j) - 1))]);
      }
      double best = -kInf;
      for (std::size_t i = 0; i < params.size(); ++i) best = std::max(best, acc[i] - past[i]);
      set.values.push_back(best);
    }
    return set.estimate();
  };

  ConditionalEstimate out;
  out.estimate.value = -kInf;
  auto consider = [&](const detail::Tree& zt, const detail::Tree& wt) {
    const Estimate e = evaluate(zt, wt);
    ++out.trees;
    if (e.value > out.estimate.value) out.estimate = e;
  };

  const std::size_t zn = detail::tree_nodes(n);
  const std::size_t wn = n > 0 ? detail::tree_nodes(n - 1) : 0;
  const double pairs = std::pow(static_cast<double>(arity), static_cast<double>(zn + wn));
  if (trees.exhaustive_limit > 0 && pairs <= static_cast<double>(trees.exhaustive_limit)) {
    out.method = "exhaustive_trees";
    const auto zcount = static_cast<std::uint64_t>(std::pow(static_cast<double>(arity), static_cast<double>(zn)));
    const auto wcount = static_cast<std::uint64_t>(std::pow(static_cast<double>(arity), static_cast<double>(wn)));
    for (std::uint64_t zi = 0; zi < zcount; ++zi)
      for (std::uint64_t wi = 0; wi < wcount; ++wi)
        consider(detail::indexed_tree(n, arity, zi), detail::indexed_tree(n > 0 ? n - 1 : 0, arity, wi));
    return out;
  }
  out.method = "sampled_trees";
  for (std::uint32_t a = 0; a < arity; ++a)
    for (std::uint32_t b = 0; b < arity; ++b)
      consider(detail::constant_tree(n, a), detail::constant_tree(n > 0 ? n - 1 : 0, b));
  for (std::size_t r = 0; r < trees.random_trees; ++r) {
    CounterRng rng(mc.seed, Stream::kTree, static_cast<std::uint32_t>(r));
    const detail::Tree zt = detail::random_tree(n, arity, rng);
    const detail::Tree wt = detail::random_tree(n > 0 ? n - 1 : 0, arity, rng);
    consider(zt, wt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relaxation interface and the admissibility tester
// ---------------------------------------------------------------------------

class Relaxation {
 public:
  virtual ~Relaxation() = default;
  virtual std::string name() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual SampleSet samples(const History& prefix) const = 0;
  Estimate evaluate(const History& prefix) const { return samples(prefix).estimate(); }
};

class B1Relaxation : public Relaxation {
 public:
  B1Relaxation(std::size_t T, McControls mc) : T_(T), mc_(mc) {}
  std::string name() const override { return mc_.noise == NoiseKind::kGaussian ? "b1_gaussian" : "b1"; }
  std::size_t horizon() const override { return T_; }
  SampleSet samples(const History& prefix) const override { return rel_b1_samples(prefix, T_, mc_); }

 private:
  std::size_t T_;
  McControls mc_;
};

class BetaRelaxation : public Relaxation {
 public:
  BetaRelaxation(std::size_t T, BetaBox box, McControls mc, GridSpec grid = {})
      : solver_(std::make_shared<BetaSupSolver>(box, T, grid)), mc_(mc) {}
  std::string name() const override { return "beta"; }
  std::size_t horizon() const override { return solver_->horizon(); }
  SampleSet samples(const History& prefix) const override { return rel_beta_samples(prefix, *solver_, mc_); }
  const BetaSupSolver& solver() const { return *solver_; }

 private:
  std::shared_ptr<BetaSupSolver> solver_;
  McControls mc_;
};

/// The same relaxation with the MAP predictor's numerator Σ z_i + α - 1 in
/// the comparator term, so Rel(z_{1:T}) is exactly -inf over the MAP class.
/// The penalty no longer depends on α+β alone; the supremum is taken on a 2-D
/// log grid in (a, b) followed by coordinate refinement.
class BetaMapFormRelaxation : public Relaxation {
 public:
  BetaMapFormRelaxation(std::size_t T, BetaBox box, McControls mc, GridSpec grid = {40, 3, 4.0, 9})
      : T_(T), box_(box), mc_(mc), grid_(grid) {
    box_.validate();
    as_ = log_grid(box_.a_lo(), box_.a_hi(), grid_.points);
    bs_ = log_grid(box_.b_lo(), box_.b_hi(), grid_.points);
  }
  std::string name() const override { return "beta_map_form"; }
  std::size_t horizon() const override { return T_; }

  static double penalty(const History& prefix, double a, double b) {
    double ones = 0.0, total = 0.0;
    for (std::size_t s = 1; s <= prefix.size(); ++s) {
      const double z = prefix.scalar(static_cast<std::ptrdiff_t>(s));
      total += std::abs((ones + a) / (static_cast<double>(s - 1) + a + b) - z);
      ones += z;
    }
    return total;
  }

  SampleSet samples(const History& prefix) const override {
    const std::size_t t = prefix.size();
    if (t > T_) throw DimensionError("rel_beta_map_form: prefix longer than the horizon");
    const std::size_t n = T_ - t;
    const std::size_t A = as_.size(), B = bs_.size(), G = A * B;

    std::vector<Vec> draws;
    SampleSet out;
    if (n <= mc_.exhaustive_depth) {
      out.exact = true;
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        Vec e(n);
        for (std::size_t j = 0; j < n; ++j) e[j] = ((m >> j) & 1u) ? 1.0 : -1.0;
        draws.push_back(std::move(e));
      }
    } else {
      const NoiseField noise(mc_.seed, Stream::kRelaxation);
      for (std::size_t k = 0; k < mc_.samples; ++k) {
        Vec e(n);
        for (std::size_t j = 0; j < n; ++j) e[j] = noise.sign(k, t + 1 + j);
        draws.push_back(std::move(e));
      }
    }
    const auto K = static_cast<Eigen::Index>(draws.size());

    Eigen::MatrixXd inv(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(std::max<std::size_t>(n, 1)));
    Vec pen(G), bval(G);
    for (std::size_t i = 0; i < A; ++i)
      for (std::size_t k = 0; k < B; ++k) {
        const std::size_t g = i * B + k;
        pen[g] = penalty(prefix, as_[i], bs_[k]);
        bval[g] = bs_[k];
        for (std::size_t j = 0; j < n; ++j)
          inv(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) =
              1.0 / (static_cast<double>(t + j) + as_[i] + bs_[k]);
      }
    Eigen::MatrixXd eps(static_cast<Eigen::Index>(std::max<std::size_t>(n, 1)), K);
    eps.setZero();
    for (Eigen::Index k = 0; k < K; ++k)
      for (std::size_t j = 0; j < n; ++j) eps(static_cast<Eigen::Index>(j), k) = draws[static_cast<std::size_t>(k)][j];
    const Eigen::MatrixXd slope = inv * eps;

    auto value = [&](const Vec& e, double total, double a, double b) {
      double sl = 0.0;
      for (std::size_t j = 0; j < n; ++j) sl += e[j] / (static_cast<double>(t + j) + a + b);
      return 2.0 * total - 2.0 * b * sl - penalty(prefix, a, b);
    };
    const double hx0 = std::log(as_.back() / as_.front()) / static_cast<double>(A - 1);
    const double hy0 = std::log(bs_.back() / bs_.front()) / static_cast<double>(B - 1);
    const auto half = static_cast<std::ptrdiff_t>(grid_.local_points / 2);

    for (Eigen::Index k = 0; k < K; ++k) {
      const Vec& e = draws[static_cast<std::size_t>(k)];
      double total = 0.0;
      for (double v : e) total += v;
      std::size_t bi = 0;
      double bv = -kInf;
      for (std::size_t g = 0; g < G; ++g) {
        const double v = 2.0 * total - 2.0 * bval[g] * slope(static_cast<Eigen::Index>(g), k) - pen[g];
        if (v > bv) {
          bv = v;
          bi = g;
        }
      }
      double a = as_[bi / B], b = bs_[bi % B];
      double hx = hx0, hy = hy0;
      for (std::size_t pass = 0; pass < grid_.passes; ++pass) {
        for (int axis = 0; axis < 2; ++axis) {
          const double h = axis == 0 ? hx : hy;
          const double centre = std::log(axis == 0 ? a : b);
          const double lo = std::log(axis == 0 ? box_.a_lo() : box_.b_lo());
          const double hi = std::log(axis == 0 ? box_.a_hi() : box_.b_hi());
          for (std::ptrdiff_t m = -half; m <= half; ++m) {
            if (m == 0) continue;
            const double c = std::exp(clip(centre + h * static_cast<double>(m) / static_cast<double>(half), lo, hi));
            const double v = axis == 0 ? value(e, total, c, b) : value(e, total, a, c);
            if (v > bv) {
              bv = v;
              (axis == 0 ? a : b) = c;
            }
          }
        }
        hx /= grid_.shrink;
        hy /= grid_.shrink;
      }
      out.values.push_back(bv);
    }
    return out;
  }

 private:
  std::size_t T_;
  BetaBox box_;
  McControls mc_;
  GridSpec grid_;
  Vec as_, bs_;
};

/// Rel ≡ 0: the negative control.
class ZeroRelaxation : public Relaxation {
 public:
  explicit ZeroRelaxation(std::size_t T) : T_(T) {}
  std::string name() const override { return "zero"; }
  std::size_t horizon() const override { return T_; }
  SampleSet samples(const History&) const override { return {{0.0}, true}; }

 private:
  std::size_t T_;
};

struct PrefixSlack {
  Vec prefix;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // lhs - rhs
  double stderr_ = 0.0;
  double q = 0.0;
  bool pass = true;
};

struct FinalCheck {
  Vec sequence;
  double neg_comparator = 0.0;  // -inf_π Σ ℓ
  double rel = 0.0;
  double slack = 0.0;  // neg_comparator - rel
  double stderr_ = 0.0;
  bool pass = true;
};

struct AdmissibilityReport {
  std::string relaxation;
  std::vector<PrefixSlack> steps;
  std::vector<FinalCheck> finals;
  /// Final condition against a second comparator, reported but not gating.
  std::vector<FinalCheck> finals_secondary;
  std::string secondary_name;
  double max_violation = -kInf;  // largest (slack - tolerance) over all checks
  double max_step_slack = -kInf;
  double max_final_slack = -kInf;
  double tol_sigma = 3.0;
  double abs_tol = 1e-3;
  bool pass = true;
};

struct AdmissibilityOptions {
  std::vector<double> outcome_set{-1.0, 1.0};
  double q_lo = -1.0;
  double q_hi = 1.0;
  std::size_t q_grid = 201;
  std::size_t bisection_steps = 30;
  double tol_sigma = 3.0;
  double abs_tol = 1e-3;
  /// 0: exhaustive over all prefixes; otherwise this many random prefixes.
  std::size_t sampled_prefixes = 0;
  std::uint64_t seed = 0;
  /// When non-empty, the final condition is checked on these sequences only.
  std::vector<Vec> terminals;
  /// When non-empty, the step condition is checked on these prefixes only
  /// and the final condition only on `terminals`.
  std::vector<Vec> prefixes;
};

namespace detail {

inline double paired_stderr(const SampleSet& a, const SampleSet& b) {
  // Standard error of mean(a) - mean(b), pairing sample k with sample k.
  if (a.exact && b.exact) return 0.0;
  if (a.exact) return b.estimate().stderr_;
  if (b.exact) return a.estimate().stderr_;
  const std::size_t n = std::min(a.values.size(), b.values.size());
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += a.values[k] - b.values[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a.values[k] - b.values[k] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

inline void enumerate_sequences(const std::vector<double>& set, std::size_t len, std::vector<Vec>& out) {
  std::vector<std::size_t> idx(len, 0);
  while (true) {
    Vec s(len);
    for (std::size_t i = 0; i < len; ++i) s[i] = set[idx[i]];
    out.push_back(std::move(s));
    std::size_t d = len;
    while (d > 0 && ++idx[d - 1] == set.size()) idx[--d] = 0;
    if (d == 0) break;
  }
}

inline FinalCheck final_check(const Relaxation& rel, const StrategyClass& cls, const LossSpec& loss, const Vec& seq,
                              const AdmissibilityOptions& opt) {
  const History h = History::scalars(seq);
  const SampleSet r = rel.samples(h);
  FinalCheck f;
  f.sequence = seq;
  f.neg_comparator = -cls.best_comparator(h, loss).loss;
  const Estimate e = r.estimate();
  f.rel = e.value;
  f.stderr_ = e.stderr_;
  f.slack = f.neg_comparator - f.rel;
  f.pass = f.slack <= opt.tol_sigma * f.stderr_ + opt.abs_tol;
  return f;
}

}  // namespace detail

/// Checks inf_q sup_z {E ℓ(q, z) + Rel(z_{1:t-1}, z)} ≤ Rel(z_{1:t-1}) at
/// each prefix and -inf_π Σ ℓ ≤ Rel(z_{1:T}) at terminal sequences. Outcome
/// branches share the relaxation's noise (common random numbers).
inline AdmissibilityReport admissibility_check(const Relaxation& rel, const LossSpec& loss, const StrategyClass& cls,
                                               const AdmissibilityOptions& opt,
                                               const StrategyClass* secondary = nullptr) {
  if (opt.outcome_set.empty()) throw UnsupportedError("admissibility_check needs a finite outcome set");
  const std::size_t T = rel.horizon();
  AdmissibilityReport report;
  report.relaxation = rel.name();
  report.tol_sigma = opt.tol_sigma;
  report.abs_tol = opt.abs_tol;
  if (secondary) report.secondary_name = secondary->name();

  std::vector<Vec> prefixes;
  std::vector<Vec> terminals;
  if (!opt.prefixes.empty()) {
    for (const Vec& p : opt.prefixes) {
      if (p.size() >= T) throw DimensionError("admissibility_check: prefix must be shorter than T");
      prefixes.push_back(p);
    }
  } else if (opt.sampled_prefixes == 0) {
    if (std::pow(static_cast<double>(opt.outcome_set.size()), static_cast<double>(T)) > 1e6)
      throw SizeError("admissibility_check: exhaustive prefixes too many; use sampled prefixes");
    for (std::size_t len = 0; len < T; ++len) detail::enumerate_sequences(opt.outcome_set, len, prefixes);
    detail::enumerate_sequences(opt.outcome_set, T, terminals);
  } else {
    CounterRng rng(opt.seed, Stream::kBench);
    for (std::size_t i = 0; i < opt.sampled_prefixes; ++i) {
      const std::size_t len = rng.index(T);
      Vec p(len);
      for (double& v : p) v = opt.outcome_set[rng.index(opt.outcome_set.size())];
      prefixes.push_back(p);
      Vec full(T);
      for (double& v : full) v = opt.outcome_set[rng.index(opt.outcome_set.size())];
      terminals.push_back(std::move(full));
    }
  }

  for (const Vec& p : prefixes) {
    History h = History::scalars(p);
    const SampleSet base = rel.samples(h);
    std::vector<SampleSet> branches;
    Vec means;
    for (double z : opt.outcome_set) {
      h.push_outcome(z);
      branches.push_back(rel.samples(h));
      means.push_back(branches.back().mean());
      h.pop_outcome();
    }
    auto objective = [&](double q) {
      double m = -kInf;
      for (std::size_t i = 0; i < means.size(); ++i) m = std::max(m, loss_eval(loss, q, opt.outcome_set[i]) + means[i]);
      return m;
    };
    const Optimum1d best = minimize_convex_scalar(objective, opt.q_lo, opt.q_hi, opt.q_grid, opt.bisection_steps);
    std::size_t active = 0;
    double active_v = -kInf;
    for (std::size_t i = 0; i < means.size(); ++i) {
      const double v = loss_eval(loss, best.x, opt.outcome_set[i]) + means[i];
      if (v > active_v) {
        active_v = v;
        active = i;
      }
    }
    PrefixSlack s;
    s.prefix = p;
    s.q = best.x;
    s.lhs = best.value;
    s.rhs = base.mean();
    s.slack = s.lhs - s.rhs;
    s.stderr_ = detail::paired_stderr(branches[active], base);
    const double tol = opt.tol_sigma * s.stderr_ + opt.abs_tol;
    s.pass = s.slack <= tol;
    report.max_step_slack = std::max(report.max_step_slack, s.slack);
    report.max_violation = std::max(report.max_violation, s.slack - tol);
    report.pass = report.pass && s.pass;
    report.steps.push_back(std::move(s));
  }

  if (!opt.terminals.empty()) terminals = opt.terminals;
  for (const Vec& seq : terminals) {
    if (seq.size() != T) throw DimensionError("admissibility_check: terminal sequence length differs from T");
    FinalCheck f = detail::final_check(rel, cls, loss, seq, opt);
    report.max_final_slack = std::max(report.max_final_slack, f.slack);
    report.max_violation = std::max(report.max_violation, f.slack - (opt.tol_sigma * f.stderr_ + opt.abs_tol));
    report.pass = report.pass && f.pass;
    report.finals.push_back(std::move(f));
    if (secondary) report.finals_secondary.push_back(detail::final_check(rel, *secondary, loss, seq, opt));
  }
  return report;
}

inline nlohmann::json to_json(const AdmissibilityReport& r) {
  nlohmann::json j;
  j["relaxation"] = r.relaxation;
  j["pass"] = r.pass;
  j["tol_sigma"] = r.tol_sigma;
  j["abs_tol"] = r.abs_tol;
  j["max_violation"] = r.max_violation;
  j["max_step_slack"] = r.max_step_slack;
  j["max_final_slack"] = r.max_final_slack;
  nlohmann::json steps = {{"prefix", nlohmann::json::array()},
                          {"slack", nlohmann::json::array()},
                          {"stderr", nlohmann::json::array()},
                          {"q", nlohmann::json::array()},
                          {"pass", nlohmann::json::array()}};
  for (const auto& s : r.steps) {
    steps["prefix"].push_back(s.prefix);
    steps["slack"].push_back(s.slack);
    steps["stderr"].push_back(s.stderr_);
    steps["q"].push_back(s.q);
    steps["pass"].push_back(s.pass);
  }
  j["steps"] = std::move(steps);
  auto finals_json = [](const std::vector<FinalCheck>& fs) {
    nlohmann::json f = {{"sequence", nlohmann::json::array()},
                        {"neg_comparator", nlohmann::json::array()},
                        {"rel", nlohmann::json::array()},
                        {"slack", nlohmann::json::array()},
                        {"pass", nlohmann::json::array()}};
    for (const auto& c : fs) {
      f["sequence"].push_back(c.sequence);
      f["neg_comparator"].push_back(c.neg_comparator);
      f["rel"].push_back(c.rel);
      f["slack"].push_back(c.slack);
      f["pass"].push_back(c.pass);
    }
    return f;
  };
  j["final"] = finals_json(r.finals);
  if (!r.finals_secondary.empty()) {
    j["final_secondary"] = finals_json(r.finals_secondary);
    j["final_secondary"]["comparator"] = r.secondary_name;
  }
  return j;
}

}  // namespace regretlab
