#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regretlab/game_core.hpp"
#include "regretlab/optimize.hpp"

namespace regretlab {

inline constexpr double kParamTol = 1e-9;

// ---------------------------------------------------------------------------
// Autoregressive strategies π^θ_t = Σ θ_{i+1} z_{t-k+i}
// ---------------------------------------------------------------------------

struct ThetaBall {
  double p = 1.0;
  double radius = 1.0;
};

inline void check_theta(std::span<const double> theta, const ThetaBall& ball) {
  if (lp_norm(theta, ball.p) > ball.radius + kParamTol)
    throw ParameterError("theta outside the parameter ball");
}

/// Prediction of the look-back-k strategy at t = history.size()+1. With
/// `full_history` the coordinates are re-indexed so that the prediction is
/// Σ_{i<t} θ_i z_i and theta must cover at least t-1 entries.
inline Vec ar_predict(std::span<const double> theta, const History& history, std::size_t k,
                      bool full_history = false) {
  const std::size_t dim = history.dim();
  const std::size_t t = history.size() + 1;
  Vec out(dim, 0.0);
  if (full_history) {
    if (theta.size() + 1 < t) throw DimensionError("ar_predict: theta shorter than the history");
    for (std::size_t i = 1; i < t; ++i) {
      if (theta[i - 1] == 0.0) continue;
      const auto z = history.outcome(i);
      for (std::size_t d = 0; d < dim; ++d) out[d] += theta[i - 1] * z[d];
    }
    return out;
  }
  if (theta.size() != k) throw DimensionError("ar_predict: |theta| must equal k");
  for (std::size_t i = 0; i < k; ++i) {
    const auto idx = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k) + static_cast<std::ptrdiff_t>(i);
    if (idx <= 0) continue;  // zero padding
    const auto z = history.outcome(static_cast<std::size_t>(idx));
    for (std::size_t d = 0; d < dim; ++d) out[d] += theta[i] * z[d];
  }
  return out;
}

/// Linear-loss coefficients: the total loss of π^θ is Σ_i θ_i c_i.
inline Vec ar_linear_coefficients(const History& history, std::size_t k, bool full_history) {
  const std::size_t T = history.size();
  const std::size_t dim = history.dim();
  if (full_history) {
    Vec c(T, 0.0);
    Vec tail(dim, 0.0);  // Σ_{t>i} z_t
    for (std::size_t i = T; i >= 1; --i) {
      const auto z = history.outcome(i);
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += z[d] * tail[d];
      c[i - 1] = s;
      for (std::size_t d = 0; d < dim; ++d) tail[d] += z[d];
    }
    return c;
  }
  Vec c(k, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const auto zt = history.outcome(t);
    for (std::size_t i = 0; i < k; ++i) {
      const auto idx = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k) + static_cast<std::ptrdiff_t>(i);
      if (idx <= 0) continue;
      c[i] += dot(history.outcome(static_cast<std::size_t>(idx)), zt);
    }
  }
  return c;
}

/// argmin over B_p(radius) of <θ, c>: the value is -radius·‖c‖_{p*}.
/// Ties in the ℓ₁ case go to the smallest index.
inline Vec ar_linear_minimizer(std::span<const double> c, const ThetaBall& ball) {
  Vec theta(c.size(), 0.0);
  if (c.empty()) return theta;
  if (ball.p == 1.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
      if (std::abs(c[i]) > std::abs(c[best])) best = i;
    if (c[best] != 0.0) theta[best] = -ball.radius * (c[best] > 0 ? 1.0 : -1.0);
    return theta;
  }
  if (std::isinf(ball.p)) {
    for (std::size_t i = 0; i < c.size(); ++i) theta[i] = c[i] > 0 ? -ball.radius : (c[i] < 0 ? ball.radius : 0.0);
    return theta;
  }
  const double q = holder_conjugate(ball.p);
  const double nq = lp_norm(c, q);
  if (nq == 0.0) return theta;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double mag = std::pow(std::abs(c[i]) / nq, q - 1.0);
    theta[i] = c[i] > 0 ? -ball.radius * mag : (c[i] < 0 ? ball.radius * mag : 0.0);
  }
  return theta;
}

/// Best full-history comparator over Θ = B₁(1) for linear loss: with
/// c_i = z_i Σ_{t>i} z_t the loss is Σ θ_i c_i, minimized at a signed
/// coordinate vector with value -max_i |c_i|.
inline ComparatorResult ar_best_comparator_l1(const History& history) {
  const Vec c = ar_linear_coefficients(history, history.size(), true);
  ComparatorResult r;
  r.param = ar_linear_minimizer(c, {1.0, 1.0});
  r.loss = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) r.loss += r.param[i] * c[i];
  r.method = ComparatorMethod::kClosedForm;
  return r;
}

class ARClass : public StrategyClass {
 public:
  /// k == 0 means full history (k = T).
  ARClass(std::size_t k, ThetaBall ball, std::size_t dim = 1) : k_(k), ball_(ball), dim_(dim) {
    if (!(ball.radius > 0.0)) throw ParameterError("ARClass: radius must be positive");
    if (!(ball.p >= 1.0)) throw ParameterError("ARClass: p >= 1 required");
  }

  bool full_history() const { return k_ == 0; }
  std::size_t k() const { return k_; }
  const ThetaBall& ball() const { return ball_; }

  std::string name() const override { return full_history() ? "ar_full" : "ar_k" + std::to_string(k_); }

  Vec predict(std::span<const double> param, const History& history) const override {
    check_theta(param, ball_);
    return ar_predict(param, history, k_, full_history());
  }

  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    if (history.size() > 0 && !full_history() && k_ > history.size() + 1000000) throw SizeError("k too large");
    if (loss.kind == LossKind::kLinearInner) {
      const Vec c = ar_linear_coefficients(history, full_history() ? history.size() : k_, full_history());
      ComparatorResult r;
      r.param = ar_linear_minimizer(c, ball_);
      for (std::size_t i = 0; i < c.size(); ++i) r.loss += r.param[i] * c[i];
      r.method = ComparatorMethod::kClosedForm;
      return r;
    }
    if (full_history() || k_ > 3)
      throw UnsupportedError("AR comparator for non-linear loss needs k <= 3 (grid search)");
    ComparatorResult best;
    best.loss = kInf;
    best.method = ComparatorMethod::kGrid;
    for (const Vec& theta : discretize(61)) {
      double total = 0.0;
      for (std::size_t t = 1; t <= history.size(); ++t) {
        Vec pred(dim_, 0.0);
        for (std::size_t i = 0; i < k_; ++i) {
          const auto idx = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k_) + static_cast<std::ptrdiff_t>(i);
          if (idx <= 0) continue;
          const auto z = history.outcome(static_cast<std::size_t>(idx));
          for (std::size_t d = 0; d < dim_; ++d) pred[d] += theta[i] * z[d];
        }
        total += loss_eval(loss, pred, history.outcome(t));
      }
      if (total < best.loss) {
        best.loss = total;
        best.param = theta;
      }
    }
    return best;
  }

  std::vector<Vec> discretize(std::size_t resolution) const override {
    if (full_history()) throw UnsupportedError("full-history AR class has no finite discretization");
    if (resolution < 2) resolution = 2;
    std::vector<Vec> out;
    const Vec axis = linear_grid(-ball_.radius, ball_.radius, resolution);
    std::vector<std::size_t> idx(k_, 0);
    while (true) {
      Vec theta(k_);
      for (std::size_t i = 0; i < k_; ++i) theta[i] = axis[idx[i]];
      if (lp_norm(theta, ball_.p) <= ball_.radius + kParamTol) out.push_back(theta);
      std::size_t d = 0;
      while (d < k_ && ++idx[d] == axis.size()) idx[d++] = 0;
      if (d == k_) break;
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j = {{"class", "ar"}, {"p", ball_.p}, {"radius", ball_.radius}, {"dim", dim_}};
    if (full_history())
      j["k"] = "full";
    else
      j["k"] = k_;
    if (std::isinf(ball_.p)) j["p"] = "inf";
    return j;
  }

 private:
  std::size_t k_;
  ThetaBall ball_;
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Bernoulli MAP strategies under a Beta(α, β) prior
// ---------------------------------------------------------------------------

/// α ∈ (1, a_max], β ∈ (1, c_beta]; the open ends are kept kMargin away.
struct BetaBox {
  static constexpr double kMargin = 1e-9;
  double a_max = 16.0;
  double c_beta = 4.0;

  void validate() const {
    if (!(a_max > 1.0 + kMargin)) throw ParameterError("BetaBox: a_max must exceed 1");
    if (!(c_beta > 1.0 + kMargin)) throw ParameterError("BetaBox: c_beta must exceed 1");
  }
  bool contains(double alpha, double beta) const {
    return alpha >= 1.0 + kMargin * (1 - 1e-6) && alpha <= a_max * (1 + 1e-15) && beta >= 1.0 + kMargin * (1 - 1e-6) &&
           beta <= c_beta * (1 + 1e-15);
  }
  // Offsets a = α-1, b = β-1 are what the optimizers work with.
  double a_lo() const { return kMargin; }
  double a_hi() const { return a_max - 1.0; }
  double b_lo() const { return kMargin; }
  double b_hi() const { return c_beta - 1.0; }
};

/// (Σ_{i<t} z_i + α - 1) / (t - 1 + α + β - 2).
inline double map_predict(double alpha, double beta, const History& history) {
  if (!(alpha > 1.0) || !(beta > 1.0)) throw ParameterError("map_predict: alpha, beta > 1 required");
  double s = 0.0;
  for (double z : history.outcomes_flat()) s += z;
  const double n = static_cast<double>(history.size());
  return (s + alpha - 1.0) / (n + alpha + beta - 2.0);
}

/// Same, written in the offsets a = α-1, b = β-1 to avoid cancellation
/// near the open lower ends.
inline double map_predict_offsets(double a, double b, double ones, double n) { return (ones + a) / (n + a + b); }

inline double beta_map_loss(const History& history, double a, double b) {
  double ones = 0.0;
  double total = 0.0;
  for (std::size_t t = 1; t <= history.size(); ++t) {
    const double z = history.scalar(static_cast<std::ptrdiff_t>(t));
    total += std::abs(map_predict_offsets(a, b, ones, static_cast<double>(t - 1)) - z);
    ones += z;
  }
  return total;
}

/// Minimizes Σ_t |π^{α,β}_t - z_t| over the box by a log grid in (α-1, β-1)
/// plus coordinate refinement.
inline ComparatorResult beta_best_comparator(const History& history, const BetaBox& box, const GridSpec& grid) {
  box.validate();
  const auto opt = maximize_log_box([&](double a, double b) { return -beta_map_loss(history, a, b); }, box.a_lo(),
                                    box.a_hi(), box.b_lo(), box.b_hi(), grid);
  ComparatorResult r;
  r.param = {1.0 + opt.x, 1.0 + opt.y};
  r.loss = -opt.value;
  r.method = grid.passes > 0 ? ComparatorMethod::kGridRefined : ComparatorMethod::kGrid;
  return r;
}

class BetaMAPClass : public StrategyClass {
 public:
  explicit BetaMAPClass(BetaBox box, GridSpec grid = {}) : box_(box), grid_(grid) { box_.validate(); }

  const BetaBox& box() const { return box_; }
  std::string name() const override { return "beta_map"; }

  Vec predict(std::span<const double> param, const History& history) const override {
    if (param.size() != 2) throw DimensionError("beta_map parameter is (alpha, beta)");
    if (!box_.contains(param[0], param[1])) throw ParameterError("(alpha, beta) outside the box");
    return {map_predict(param[0], param[1], history)};
  }

  std::vector<Vec> predict_all(const std::vector<Vec>& params, const History& history) const override {
    double ones = 0.0;
    for (double z : history.outcomes_flat()) ones += z;
    const double n = static_cast<double>(history.size());
    std::vector<Vec> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back({map_predict_offsets(p[0] - 1.0, p[1] - 1.0, ones, n)});
    return out;
  }

  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    if (loss.kind != LossKind::kAbsolute) throw UnsupportedError("beta_map comparator is defined for absolute loss");
    return beta_best_comparator(history, box_, grid_);
  }

  std::vector<Vec> discretize(std::size_t resolution) const override {
    std::vector<Vec> out;
    for (double a : log_grid(box_.a_lo(), box_.a_hi(), resolution))
      for (double b : log_grid(box_.b_lo(), box_.b_hi(), resolution)) out.push_back({1.0 + a, 1.0 + b});
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"class", "beta_map"}, {"a_max", box_.a_max}, {"c_beta", box_.c_beta}, {"grid_points", grid_.points}};
  }

 private:
  BetaBox box_;
  GridSpec grid_;
};

// ---------------------------------------------------------------------------
// Regularized least squares π_t = c(<w₀ + (XᵀX + λI)⁻¹XᵀY, x_t>)
// ---------------------------------------------------------------------------

inline double clip_unit(double a) { return clip(a, -1.0, 1.0); }

namespace detail {

/// Gram statistics of the first `pairs` labeled examples.
struct RidgeStats {
  Eigen::MatrixXd gram;
  Eigen::VectorXd moment;
};

inline RidgeStats ridge_stats(const History& history, std::size_t pairs) {
  const std::size_t d = history.side_dim();
  RidgeStats s{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)),
               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))};
  for (std::size_t i = 1; i <= pairs; ++i) {
    const auto x = history.side(i);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(d));
    s.gram.noalias() += xv * xv.transpose();
    s.moment += history.scalar(static_cast<std::ptrdiff_t>(i)) * xv;
  }
  return s;
}

/// (G + λI)⁻¹ m with one step of iterative refinement if the residual is
/// above 1e-10.
inline Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moment, double lambda) {
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  Eigen::VectorXd v = llt.solve(moment);
  for (int it = 0; it < 3; ++it) {
    const Eigen::VectorXd r = moment - a * v;
    if (r.norm() <= 1e-10 * std::max(1.0, moment.norm())) break;
    v += llt.solve(r);
  }
  return v;
}

}  // namespace detail

/// Prediction at t = history.size()+1 using the t-1 labeled pairs observed so
/// far and the revealed x_t. lambda may be +inf (static strategy <w₀, x_t>).
inline double rls_predict(double lambda, std::span<const double> w0, const History& history) {
  const std::size_t d = history.side_dim();
  const std::size_t t = history.size() + 1;
  if (w0.size() != d) throw DimensionError("rls_predict: w0 dimension mismatch");
  if (history.side_size() < t) throw DimensionError("rls_predict: x_t has not been revealed");
  if (!(lambda > 0.0)) throw ParameterError("rls_predict: lambda must be positive");
  if (l2_norm(w0) > 1.0 + kParamTol) throw ParameterError("rls_predict: ‖w0‖ must be <= 1");
  const auto xt = history.side(t);
  double pred = dot(w0, xt);
  if (!std::isinf(lambda) && t > 1) {
    const auto stats = detail::ridge_stats(history, t - 1);
    const Eigen::VectorXd v = detail::ridge_solve(stats.gram, stats.moment, lambda);
    for (std::size_t i = 0; i < d; ++i) pred += v[static_cast<Eigen::Index>(i)] * xt[i];
  }
  return clip_unit(pred);
}

/// Parameters are (1/λ, w₀...); 1/λ = 0 encodes λ = ∞.
class RLSClass : public StrategyClass {
 public:
  RLSClass(double lambda_min, std::size_t dim, std::size_t lambda_points = 8, std::size_t w0_points = 5)
      : lambda_min_(lambda_min), dim_(dim), lambda_points_(lambda_points), w0_points_(w0_points) {
    if (!(lambda_min > 0.0)) throw ParameterError("RLSClass: lambda_min must be positive");
    if (dim == 0) throw DimensionError("RLSClass: dim must be positive");
  }

  double lambda_min() const { return lambda_min_; }
  std::size_t dim() const { return dim_; }
  std::string name() const override { return "rls"; }

  Vec predict(std::span<const double> param, const History& history) const override {
    check_param(param);
    const double lambda = param[0] == 0.0 ? kInf : 1.0 / param[0];
    return {rls_predict(lambda, param.subspan(1), history)};
  }

  std::vector<Vec> predict_all(const std::vector<Vec>& params, const History& history) const override {
    const std::size_t t = history.size() + 1;
    if (history.side_size() < t) throw DimensionError("RLSClass: x_t has not been revealed");
    const auto xt = history.side(t);
    const auto stats = detail::ridge_stats(history, t - 1);
    std::vector<Vec> out;
    out.reserve(params.size());
    double cached_inv = -1.0;
    double cached_dot = 0.0;
    for (const auto& p : params) {
      if (p[0] != cached_inv) {
        cached_inv = p[0];
        cached_dot = 0.0;
        if (p[0] > 0.0 && t > 1) {
          const Eigen::VectorXd v = detail::ridge_solve(stats.gram, stats.moment, 1.0 / p[0]);
          for (std::size_t i = 0; i < dim_; ++i) cached_dot += v[static_cast<Eigen::Index>(i)] * xt[i];
        }
      }
      out.push_back({clip_unit(cached_dot + dot(std::span<const double>(p).subspan(1), xt))});
    }
    return out;
  }

  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    const std::vector<Vec> grid = discretize(0);
    Vec totals(grid.size(), 0.0);
    for (std::size_t t = 1; t <= history.size(); ++t) {
      const History past = history.prefix(t - 1);
      const auto preds = predict_all(grid, past);
      const auto z = history.outcome(t);
      for (std::size_t i = 0; i < grid.size(); ++i) totals[i] += loss_eval(loss, preds[i], z);
    }
    ComparatorResult r;
    r.method = ComparatorMethod::kGrid;
    const auto best = static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
    r.param = grid[best];
    r.loss = totals[best];
    return r;
  }

  /// {0} ∪ log grid of 1/λ on (0, 1/λ_min], crossed with a cube grid of w₀
  /// restricted to the unit ball. Ordered by 1/λ so predict_all can share
  /// solves. resolution 0 keeps the configured sizes.
  std::vector<Vec> discretize(std::size_t resolution) const override {
    const std::size_t nl = resolution ? resolution : lambda_points_;
    const std::size_t nw = resolution ? resolution : w0_points_;
    Vec inv_lambdas{0.0};
    for (double v : log_grid(1e-3 / lambda_min_, 1.0 / lambda_min_, nl)) inv_lambdas.push_back(v);
    const Vec axis = linear_grid(-1.0, 1.0, nw);
    std::vector<Vec> w0s;
    std::vector<std::size_t> idx(dim_, 0);
    while (true) {
      Vec w(dim_);
      for (std::size_t i = 0; i < dim_; ++i) w[i] = axis[idx[i]];
      if (l2_norm(w) <= 1.0 + kParamTol) w0s.push_back(w);
      std::size_t d = 0;
      while (d < dim_ && ++idx[d] == axis.size()) idx[d++] = 0;
      if (d == dim_) break;
    }
    std::vector<Vec> out;
    for (double il : inv_lambdas)
      for (const auto& w : w0s) {
        Vec p{il};
        p.insert(p.end(), w.begin(), w.end());
        out.push_back(std::move(p));
      }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"class", "rls"},
            {"lambda_min", lambda_min_},
            {"dim", dim_},
            {"lambda_points", lambda_points_},
            {"w0_points", w0_points_}};
  }

 private:
  void check_param(std::span<const double> p) const {
    if (p.size() != dim_ + 1) throw DimensionError("RLSClass parameter is (1/lambda, w0)");
    if (p[0] < 0.0 || p[0] > 1.0 / lambda_min_ * (1 + 1e-12)) throw ParameterError("lambda below lambda_min");
  }

  double lambda_min_;
  std::size_t dim_;
  std::size_t lambda_points_;
  std::size_t w0_points_;
};

// ---------------------------------------------------------------------------
// Follow-the-regularized-leader strategies
// ---------------------------------------------------------------------------

/// Regularization schedule λ(a, t) with a = ‖Σ z_i‖.
struct Schedule {
  enum class Kind { kConstant, kSqrtT, kLinearT, kPowerT, kNormPlusSqrtT };
  Kind kind = Kind::kSqrtT;
  double scale = 1.0;
  double power = 0.5;

  double operator()(double a, std::size_t t) const {
    const double tt = static_cast<double>(t);
    double v = 0.0;
    switch (kind) {
      case Kind::kConstant:
        v = scale;
        break;
      case Kind::kSqrtT:
        v = scale * std::sqrt(tt);
        break;
      case Kind::kLinearT:
        v = scale * tt;
        break;
      case Kind::kPowerT:
        v = scale * std::pow(tt, power);
        break;
      case Kind::kNormPlusSqrtT:
        v = a + scale * std::sqrt(tt);
        break;
    }
    if (!(v > 0.0)) throw ParameterError("schedule must be positive");
    return v;
  }

  nlohmann::json to_json() const {
    static const char* names[] = {"constant", "sqrt_t", "linear_t", "power_t", "norm_plus_sqrt_t"};
    return {{"kind", names[static_cast<int>(kind)]}, {"scale", scale}, {"power", power}};
  }

  static Schedule from_json(const nlohmann::json& j) {
    Schedule s;
    const std::string k = j.value("kind", "sqrt_t");
    if (k == "constant")
      s.kind = Kind::kConstant;
    else if (k == "sqrt_t")
      s.kind = Kind::kSqrtT;
    else if (k == "linear_t")
      s.kind = Kind::kLinearT;
    else if (k == "power_t")
      s.kind = Kind::kPowerT;
    else if (k == "norm_plus_sqrt_t")
      s.kind = Kind::kNormPlusSqrtT;
    else
      throw ConfigError("unknown schedule kind: " + k);
    s.scale = j.value("scale", 1.0);
    s.power = j.value("power", 0.5);
    if (!(s.scale > 0.0)) throw ConfigError("schedule scale must be positive");
    return s;
  }
};

/// w_t = w₀ - S / max{λ(‖S‖, t), ‖S‖} with S = Σ_{i<t} z_i; w₀ when S = 0.
inline Vec ftrl_predict(const Schedule& schedule, std::span<const double> w0, const History& history) {
  const std::size_t d = history.dim();
  if (w0.size() != d) throw DimensionError("ftrl_predict: w0 dimension mismatch");
  Vec s(d, 0.0);
  for (std::size_t i = 1; i <= history.size(); ++i) {
    const auto z = history.outcome(i);
    for (std::size_t k = 0; k < d; ++k) s[k] += z[k];
  }
  Vec w(w0.begin(), w0.end());
  const double ns = l2_norm(s);
  if (ns == 0.0) return w;
  const double denom = std::max(schedule(ns, history.size() + 1), ns);
  for (std::size_t k = 0; k < d; ++k) w[k] -= s[k] / denom;
  return w;
}

/// Parameters are (schedule index, w₀...).
class FTRLClass : public StrategyClass {
 public:
  FTRLClass(std::vector<Schedule> schedules, std::size_t dim, std::size_t w0_points = 5)
      : schedules_(std::move(schedules)), dim_(dim), w0_points_(w0_points) {
    if (schedules_.empty()) throw ParameterError("FTRLClass: empty schedule family");
  }

  const std::vector<Schedule>& schedules() const { return schedules_; }
  std::string name() const override { return "ftrl"; }

  Vec predict(std::span<const double> param, const History& history) const override {
    if (param.size() != dim_ + 1) throw DimensionError("FTRLClass parameter is (schedule, w0)");
    const auto idx = static_cast<std::size_t>(param[0]);
    if (idx >= schedules_.size()) throw ParameterError("schedule index out of range");
    if (l2_norm(param.subspan(1)) > 1.0 + kParamTol) throw ParameterError("‖w0‖ must be <= 1");
    return ftrl_predict(schedules_[idx], param.subspan(1), history);
  }

  /// Linear loss: for a fixed schedule the loss is affine in w₀, so
  /// w₀* = -S_T/‖S_T‖ exactly; the schedule family is scanned.
  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    if (loss.kind != LossKind::kLinearInner) throw UnsupportedError("FTRL comparator is defined for linear loss");
    const std::size_t T = history.size();
    Vec total_sum(dim_, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
      const auto z = history.outcome(t);
      for (std::size_t k = 0; k < dim_; ++k) total_sum[k] += z[k];
    }
    const double total_norm = l2_norm(total_sum);
    ComparatorResult best;
    best.loss = kInf;
    best.method = ComparatorMethod::kClosedForm;
    for (std::size_t j = 0; j < schedules_.size(); ++j) {
      Vec s(dim_, 0.0);
      double base = 0.0;
      for (std::size_t t = 1; t <= T; ++t) {
        const auto z = history.outcome(t);
        const double ns = l2_norm(s);
        if (ns > 0.0) {
          const double denom = std::max(schedules_[j](ns, t), ns);
          for (std::size_t k = 0; k < dim_; ++k) base -= s[k] / denom * z[k];
        }
        for (std::size_t k = 0; k < dim_; ++k) s[k] += z[k];
      }
      const double value = base - total_norm;
      if (value < best.loss) {
        best.loss = value;
        best.param.assign(1, static_cast<double>(j));
        for (std::size_t k = 0; k < dim_; ++k)
          best.param.push_back(total_norm > 0.0 ? -total_sum[k] / total_norm : 0.0);
      }
    }
    return best;
  }

  std::vector<Vec> discretize(std::size_t resolution) const override {
    const std::size_t nw = resolution ? resolution : w0_points_;
    const Vec axis = linear_grid(-1.0, 1.0, nw);
    std::vector<Vec> out;
    for (std::size_t j = 0; j < schedules_.size(); ++j) {
      std::vector<std::size_t> idx(dim_, 0);
      while (true) {
        Vec p{static_cast<double>(j)};
        for (std::size_t i = 0; i < dim_; ++i) p.push_back(axis[idx[i]]);
        if (l2_norm(std::span<const double>(p).subspan(1)) <= 1.0 + kParamTol) out.push_back(p);
        std::size_t d = 0;
        while (d < dim_ && ++idx[d] == axis.size()) idx[d++] = 0;
        if (d == dim_) break;
      }
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& sc : schedules_) s.push_back(sc.to_json());
    return {{"class", "ftrl"}, {"dim", dim_}, {"schedules", s}, {"w0_points", w0_points_}};
  }

 private:
  std::vector<Schedule> schedules_;
  std::size_t dim_;
  std::size_t w0_points_;
};

// ---------------------------------------------------------------------------
// JSON descriptors
// ---------------------------------------------------------------------------

inline double parse_p(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ConfigError("p must be a number or \"inf\"");
  }
  return j.get<double>();
}

inline std::unique_ptr<StrategyClass> class_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("class").get<std::string>();
  if (kind == "ar") {
    std::size_t k = 0;
    if (!(j.contains("k") && j["k"].is_string() && j["k"] == "full")) k = j.at("k").get<std::size_t>();
    return std::make_unique<ARClass>(k, ThetaBall{parse_p(j.value("p", nlohmann::json(1.0))), j.value("radius", 1.0)},
                                     j.value("dim", std::size_t{1}));
  }
  if (kind == "beta_map") {
    GridSpec g;
    g.points = j.value("grid_points", std::size_t{64});
    return std::make_unique<BetaMAPClass>(BetaBox{j.at("a_max").get<double>(), j.at("c_beta").get<double>()}, g);
  }
  if (kind == "rls")
    return std::make_unique<RLSClass>(j.at("lambda_min").get<double>(), j.value("dim", std::size_t{2}),
                                      j.value("lambda_points", std::size_t{8}), j.value("w0_points", std::size_t{5}));
  if (kind == "ftrl") {
    std::vector<Schedule> s;
    for (const auto& sj : j.at("schedules")) s.push_back(Schedule::from_json(sj));
    return std::make_unique<FTRLClass>(std::move(s), j.value("dim", std::size_t{2}), j.value("w0_points", std::size_t{5}));
  }
  throw ConfigError("unknown strategy class: " + kind);
}

}  // namespace regretlab
