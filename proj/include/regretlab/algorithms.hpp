#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regretlab/game_core.hpp"
#include "regretlab/norms.hpp"
#include "regretlab/optimize.hpp"
#include "regretlab/relaxations.hpp"
#include "regretlab/rng.hpp"
#include "regretlab/strategy_classes.hpp"

namespace regretlab {

// ---------------------------------------------------------------------------
// Gradient methods for linearly parametrized strategies
// ---------------------------------------------------------------------------

struct GDState {
  Vec theta;
  double eta = 0.0;
};

/// Zero-padded window (z_{t-k}, ..., z_{t-1}) of scalar outcomes, t = size()+1.
inline Vec scalar_window(const History& history, std::size_t k) {
  Vec w(k, 0.0);
  const auto t = static_cast<std::ptrdiff_t>(history.size()) + 1;
  for (std::size_t i = 0; i < k; ++i) w[i] = history.scalar(t - static_cast<std::ptrdiff_t>(k) + static_cast<std::ptrdiff_t>(i));
  return w;
}

/// θ ← Proj(θ - η·window·z_t) onto B_p(radius).
inline GDState gd_step(GDState state, std::span<const double> window, double z_t, double p = 2.0,
                       double radius = 1.0) {
  if (window.size() != state.theta.size()) throw DimensionError("gd_step: window and theta differ in length");
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double g = window[i] * z_t;
    state.theta[i] -= state.eta * g;
  }
  project_ball(state.theta, p, radius);
  return state;
}

struct MDState {
  Vec theta;
  double p = 2.0;
  double eta = 0.0;
};

/// ∇F for F(θ) = ½‖θ‖²_r: sign(θ_i)|θ_i|^{r-1} / ‖θ‖_r^{r-2}. r = 2 is the
/// identity.
inline Vec half_sq_norm_gradient(std::span<const double> v, double r) {
  Vec out(v.begin(), v.end());
  if (r == 2.0) return out;
  const double n = lp_norm(v, r);
  if (n == 0.0) return Vec(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::copysign(std::pow(std::abs(v[i]) / n, r - 1.0) * n, v[i]);
  return out;
}

/// Dual step ∇F(θ') = ∇F(θ) - η g, mapped back with the conjugate exponent,
/// then rescaled onto B_p(1).
inline MDState mirror_descent_step(MDState state, std::span<const double> gradient) {
  if (!(state.p > 1.0) || state.p > 2.0) throw ParameterError("mirror descent needs p in (1, 2]");
  if (gradient.size() != state.theta.size()) throw DimensionError("mirror_descent_step: size mismatch");
  if (state.p == 2.0) {
    for (std::size_t i = 0; i < gradient.size(); ++i) state.theta[i] -= state.eta * gradient[i];
    project_ball(state.theta, 2.0, 1.0);
    return state;
  }
  Vec y = half_sq_norm_gradient(state.theta, state.p);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= state.eta * gradient[i];
  state.theta = half_sq_norm_gradient(y, holder_conjugate(state.p));
  project_ball(state.theta, state.p, 1.0);
  return state;
}

/// p close to 1 for which ½‖·‖²_p stands in for the ℓ₁ geometry.
inline double l1_surrogate_p(std::size_t T) {
  const double l = std::log(static_cast<double>(std::max<std::size_t>(T, 3)));
  return 2.0 * l / (2.0 * l - 1.0);
}

/// Online gradient descent over the look-back-k class with linear loss.
class GDLearner : public Learner {
 public:
  GDLearner(std::size_t k, double p = 2.0, double radius = 1.0, double eta = 0.0)
      : k_(k), p_(p), radius_(radius), eta_override_(eta) {
    if (k == 0) throw ParameterError("GDLearner: k >= 1 required");
  }
  std::string name() const override { return "gd"; }
  void start(std::size_t horizon) override {
    state_.theta.assign(k_, 0.0);
    state_.eta = eta_override_ > 0.0 ? eta_override_ : 1.0 / std::sqrt(static_cast<double>(k_ * horizon));
  }
  Vec act(const History& history, const NoiseField&) const override { return *expected_action(history); }
  std::optional<Vec> expected_action(const History& history) const override {
    return Vec{dot(state_.theta, scalar_window(history, k_))};
  }
  void observe(const History& history) override {
    const History past = history.prefix(history.size() - 1);
    state_ = gd_step(state_, scalar_window(past, k_), history.scalar(static_cast<std::ptrdiff_t>(history.size())), p_,
                     radius_);
  }
  nlohmann::json diagnostics() const override { return {{"eta", state_.eta}, {"theta", state_.theta}}; }
  const GDState& state() const { return state_; }

 private:
  std::size_t k_;
  double p_;
  double radius_;
  double eta_override_;
  GDState state_;
};

/// Mirror descent with F = ½‖θ‖²_p over the look-back-k class (k = 0: full
/// history, θ ∈ R^T).
class MDLearner : public Learner {
 public:
  MDLearner(std::size_t k, double p, double beta = 0.0, double eta = 0.0)
      : k_(k), p_(p), beta_(beta), eta_override_(eta) {
    if (p == 1.0) throw ParameterError("MDLearner: p = 1 is not Legendre; use l1_surrogate_p(T)");
    if (!(p > 1.0) || p > 2.0) throw ParameterError("MDLearner: p in (1, 2] required");
  }
  std::string name() const override { return "mirror_descent"; }
  void start(std::size_t horizon) override {
    T_ = horizon;
    state_.p = p_;
    state_.theta.assign(k_ == 0 ? horizon : k_, 0.0);
    const double q = holder_conjugate(p_);
    const double Td = static_cast<double>(horizon);
    state_.eta = eta_override_ > 0.0 ? eta_override_ : std::pow(Td, -beta_) * std::sqrt(1.0 / ((q - 1.0) * Td));
  }
  Vec window(const History& history) const {
    if (k_ > 0) return scalar_window(history, k_);
    Vec w(T_, 0.0);
    for (std::size_t i = 1; i <= history.size() && i <= T_; ++i) w[i - 1] = history.scalar(static_cast<std::ptrdiff_t>(i));
    return w;
  }
  Vec act(const History& history, const NoiseField&) const override { return *expected_action(history); }
  std::optional<Vec> expected_action(const History& history) const override {
    return Vec{dot(state_.theta, window(history))};
  }
  void observe(const History& history) override {
    const History past = history.prefix(history.size() - 1);
    Vec g = window(past);
    const double z = history.scalar(static_cast<std::ptrdiff_t>(history.size()));
    for (double& v : g) v *= z;
    state_ = mirror_descent_step(state_, g);
  }
  nlohmann::json diagnostics() const override { return {{"eta", state_.eta}, {"p", p_}}; }

 private:
  std::size_t k_;
  double p_;
  double beta_;
  double eta_override_;
  std::size_t T_ = 0;
  MDState state_;
};

// ---------------------------------------------------------------------------
// Generic relaxation-based learner
// ---------------------------------------------------------------------------

struct QtOptions {
  std::vector<double> outcome_set{-1.0, 1.0};
  double q_lo = -1.0;
  double q_hi = 1.0;
  std::size_t grid = 201;
  std::size_t bisection_steps = 30;
};

/// argmin_q max_z {E ℓ(q, z) + Rel(z_{1:t-1}, z)}; the branches share the
/// relaxation's noise.
inline double relaxation_learner_qt(const Relaxation& rel, const LossSpec& loss, const History& prefix,
                                    const QtOptions& opt) {
  History h = prefix;
  Vec means;
  for (double z : opt.outcome_set) {
    h.push_outcome(z);
    means.push_back(rel.samples(h).mean());
    h.pop_outcome();
  }
  auto objective = [&](double q) {
    double m = -kInf;
    for (std::size_t i = 0; i < means.size(); ++i) m = std::max(m, loss_eval(loss, q, opt.outcome_set[i]) + means[i]);
    return m;
  };
  return minimize_convex_scalar(objective, opt.q_lo, opt.q_hi, opt.grid, opt.bisection_steps).x;
}

class RelaxationLearner : public Learner {
 public:
  RelaxationLearner(std::shared_ptr<const Relaxation> rel, LossSpec loss, QtOptions opt)
      : rel_(std::move(rel)), loss_(loss), opt_(std::move(opt)) {}
  std::string name() const override { return "relaxation:" + rel_->name(); }
  void start(std::size_t horizon) override {
    if (horizon != rel_->horizon()) throw ParameterError("RelaxationLearner: horizon differs from the relaxation's");
  }
  Vec act(const History& history, const NoiseField&) const override { return *expected_action(history); }
  std::optional<Vec> expected_action(const History& history) const override {
    return Vec{relaxation_learner_qt(*rel_, loss_, history, opt_)};
  }

 private:
  std::shared_ptr<const Relaxation> rel_;
  LossSpec loss_;
  QtOptions opt_;
};

// ---------------------------------------------------------------------------
// Random playout for Θ = B₁(1)
// ---------------------------------------------------------------------------

/// Running max/min of P_s = -Σ_{i=s}^{t-1} z_i over s ≤ t (P_t = 0), i.e.
/// the state needed by the closed-form q_t at round t.
struct PlayoutState {
  std::size_t t = 1;
  double pmax = 0.0;
  double pmin = 0.0;

  void observe(double z) {
    pmax = std::max(pmax - z, 0.0);
    pmin = std::min(pmin - z, 0.0);
    ++t;
  }

  static PlayoutState from_prefix(const History& prefix) {
    PlayoutState s;
    for (std::size_t i = 1; i <= prefix.size(); ++i) s.observe(prefix.scalar(static_cast<std::ptrdiff_t>(i)));
    return s;
  }
};

/// ½(max{max_s|P_s + 1 + E|, F} - max{max_s|P_s - 1 + E|, F}) with E the future
/// total and F the largest absolute future suffix sum (0 if none).
inline double b1_qt_closed_form(const PlayoutState& s, double future_total, double future_absmax) {
  auto branch = [&](double c) {
    const double shift = c + future_total;
    return std::max(std::max(s.pmax + shift, -(s.pmin + shift)), future_absmax);
  };
  // |q| ≤ 1 exactly; the clip only absorbs rounding.
  return clip(0.5 * (branch(1.0) - branch(-1.0)), -1.0, 1.0);
}

/// q_t(ε) for prefix z_{1:t-1} and drawn signs ε_{t+1..T}.
inline double b1_randomized_qt(const History& prefix, std::size_t T, std::span<const double> eps) {
  const std::size_t t = prefix.size() + 1;
  if (t > T) throw DimensionError("b1_randomized_qt: round beyond the horizon");
  if (eps.size() != T - t) throw DimensionError("b1_randomized_qt: need T - t future signs");
  const PlayoutState s = PlayoutState::from_prefix(prefix);
  double sum = 0.0, absmax = 0.0;
  for (std::size_t j = eps.size(); j-- > 0;) {
    sum += 2.0 * eps[j];
    absmax = std::max(absmax, std::abs(sum));
  }
  return b1_qt_closed_form(s, sum, absmax);
}

/// The random-playout learner: fresh ε_{t+1:T} each round from the playout
/// noise (Rademacher, or Gaussian scaled by √(2π)).
class B1PlayoutLearner : public Learner {
 public:
  explicit B1PlayoutLearner(NoiseKind noise = NoiseKind::kRademacher) : noise_(noise) {}
  std::string name() const override { return noise_ == NoiseKind::kGaussian ? "b1_playout_gaussian" : "b1_playout"; }
  void start(std::size_t horizon) override {
    T_ = horizon;
    state_ = PlayoutState{};
  }
  Vec act(const History& history, const NoiseField& playout) const override {
    const std::size_t t = history.size() + 1;
    const WalkSummary w = noise_ == NoiseKind::kRademacher
                              ? sign_walk_backward(playout, 0, t + 1, T_, 2.0)
                              : gaussian_walk_backward(playout, 0, t + 1, T_, kSqrt2Pi);
    const double absmax = t < T_ ? std::max(w.max, -w.min) : 0.0;
    return {b1_qt_closed_form(state_, t < T_ ? w.total : 0.0, absmax)};
  }
  void observe(const History& history) override {
    state_.observe(history.scalar(static_cast<std::ptrdiff_t>(history.size())));
  }
  const PlayoutState& state() const { return state_; }

 private:
  NoiseKind noise_;
  std::size_t T_ = 0;
  PlayoutState state_;
};

// ---------------------------------------------------------------------------
// Brownian extrema
// ---------------------------------------------------------------------------

struct BMTriple {
  double max = 0.0;
  double min = 0.0;
  double endpoint = 0.0;
};

namespace detail {

/// P(min > a | max = b, W_d = x) for standard BM on [0, d], a ≤ min(0, x).
/// Differentiates the two-barrier reflection series in b; every term is
/// normalized by the leading one so nothing overflows.
inline double bm_min_survival(double a, double b, double x, double d) {
  const double w = b - a;
  const double base = 2.0 * b * (b - x) / d;
  const double den = 2.0 * (2.0 * b - x);
  double num = den;  // n = 0
  auto term = [&](double n) {
    const double t1 = -2.0 * n * (x + 2.0 * n * w) * std::exp(-2.0 * n * w * (x + n * w) / d + base);
    const double t2 =
        2.0 * (1.0 + n) * (2.0 * b - x + 2.0 * n * w) * std::exp(-2.0 * (b + n * w) * (b + n * w - x) / d + base);
    return t1 + t2;
  };
  for (int n = 1; n <= 200; ++n) {
    const double tp = term(n);
    const double tm = term(-n);
    num += tp + tm;
    if (std::abs(tp) + std::abs(tm) <= 1e-17 * std::abs(num)) break;
  }
  return clip(num / den, 0.0, 1.0);
}

}  // namespace detail

/// (max, min, endpoint) of standard BM on [0, d]: endpoint from N(0, d), max
/// from the Brownian-bridge reflection law, min by inverting its conditional
/// law given (max, endpoint). Draws use positions 3·pos .. 3·pos+2 of `noise`.
inline BMTriple bm_extrema_sample(double d, const NoiseField& noise, std::uint64_t sample, std::uint64_t pos = 0) {
  if (d < 0.0) throw ParameterError("bm_extrema_sample: duration must be >= 0");
  if (d == 0.0) return {};
  BMTriple r;
  const double x = std::sqrt(d) * noise.gaussian(sample, 3 * pos);
  const double u = noise.uniform(sample, 3 * pos + 1);
  const double v = noise.uniform(sample, 3 * pos + 2);
  r.endpoint = x;
  r.max = 0.5 * (x + std::sqrt(x * x - 2.0 * d * std::log(u)));
  const double top = std::min(0.0, x);
  if (!(2.0 * r.max - x > 0.0)) {
    r.min = top;
    return r;
  }
  // Solve P(min > a) = v on (-∞, top]; the survival falls from 1 to 0.
  auto h = [&](double a) { return detail::bm_min_survival(a, r.max, x, d) - v; };
  double hi = top, fhi = h(hi);
  double width = 10.0 * std::sqrt(d);
  double lo = top - width, flo = h(lo);
  while (flo < 0.0 && width < 1e3 * std::sqrt(d)) {
    width *= 2.0;
    lo = top - width;
    flo = h(lo);
  }
  if (fhi >= 0.0) {
    r.min = hi;
    return r;
  }
  // Illinois variant of regula falsi.
  int side = 0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::sqrt(d); ++it) {
    const double c = (lo * fhi - hi * flo) / (fhi - flo);
    const double fc = h(c);
    if (fc == 0.0) {
      lo = hi = c;
      break;
    }
    if (fc > 0.0) {
      lo = c;
      flo = fc;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else {
      hi = c;
      fhi = fc;
      if (side == -1) flo *= 0.5;
      side = -1;
    }
  }
  r.min = std::min(0.5 * (lo + hi), top);
  return r;
}

/// The O(1)-per-round Gaussian playout: the future walk of √(2π)σ's is
/// replaced by a Brownian motion on [0, T-t], of which only the extrema and
/// endpoint enter q_t.
class BrownianLearner : public Learner {
 public:
  std::string name() const override { return "b1_brownian"; }
  void start(std::size_t horizon) override {
    T_ = horizon;
    state_ = PlayoutState{};
  }
  Vec act(const History& history, const NoiseField& playout) const override {
    const std::size_t t = history.size() + 1;
    const BMTriple bm = bm_extrema_sample(static_cast<double>(T_ - t), playout, 0);
    return {b1_qt_closed_form(state_, kSqrt2Pi * bm.endpoint, kSqrt2Pi * std::max(bm.max, -bm.min))};
  }
  void observe(const History& history) override {
    state_.observe(history.scalar(static_cast<std::ptrdiff_t>(history.size())));
  }

 private:
  std::size_t T_ = 0;
  PlayoutState state_;
};

// ---------------------------------------------------------------------------
// Beta-relaxation predictor
// ---------------------------------------------------------------------------

struct BetaLearnerOptions {
  BetaBox box{0.0, 4.0};  // a_max <= 1 means "use the horizon"
  GridSpec grid{};
  std::size_t playouts = 64;  // 1 is the single random-playout mode
};

/// q_t = ½(E sup[Φ + r_t] - E sup[Φ - r_t]) clipped to [0, 1], with
/// Φ = 2Σ_{s>t} ε_s(s+α-2)/(s+α+β-3) - Σ_{s<t}|S_{s-1}/(s+α+β-3) - z_s| and
/// r_t = S_{t-1}/(t+α+β-3).
class BetaRelaxationLearner : public Learner {
 public:
  explicit BetaRelaxationLearner(BetaLearnerOptions opt = {}) : opt_(opt) {
    if (opt_.playouts == 0) throw ParameterError("BetaRelaxationLearner: playouts >= 1");
  }
  std::string name() const override { return opt_.playouts == 1 ? "beta_relaxation_single" : "beta_relaxation"; }

  void start(std::size_t horizon) override {
    T_ = horizon;
    BetaBox box = opt_.box;
    if (box.a_max <= 1.0) box.a_max = std::max<double>(static_cast<double>(horizon), 2.0);
    solver_ = std::make_shared<BetaSupSolver>(box, horizon, opt_.grid);
    grid_loss_.assign(solver_->g_grid().size(), 0.0);
    ones_ = 0.0;
    clips_ = 0;
    clip_max_ = 0.0;
  }

  /// Unclipped q_t.
  double raw_qt(const History& history, const NoiseField& playout) const {
    const std::size_t t = history.size() + 1;
    const std::size_t n = T_ - t;
    const Vec& gs = solver_->g_grid();
    const std::size_t G = gs.size();
    const std::size_t K = opt_.playouts;
    const double prev = static_cast<double>(t - 1);

    Eigen::MatrixXd eps(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < n; ++j)
        eps(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = playout.sign(k, t + 1 + j);
    Eigen::MatrixXd slope(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(K));
    if (n > 0)
      slope.noalias() = solver_->inverse_table().block(0, static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(G),
                                                        static_cast<Eigen::Index>(n)) *
                        eps;
    else
      slope.setZero();

    Vec r(G);
    for (std::size_t i = 0; i < G; ++i) r[i] = ones_ / (prev + gs[i]);

    double acc = 0.0;
    Vec column(n);
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      for (std::size_t j = 0; j < n; ++j) column[j] = eps(static_cast<Eigen::Index>(j), kk);
      const double total = n > 0 ? eps.col(kk).sum() : 0.0;
      for (double c : {1.0, -1.0}) {
        std::size_t bi = 0;
        double bv = -kInf;
        for (std::size_t i = 0; i < G; ++i) {
          const double s = slope(static_cast<Eigen::Index>(i), kk);
          const double v = 2.0 * total - 2.0 * solver_->best_b(gs[i], s) * s - grid_loss_[i] + c * r[i];
          if (v > bv) {
            bv = v;
            bi = i;
          }
        }
        BetaSupSolver::Problem p;
        p.eps = &column;
        p.t = t;
        p.eps_total = total;
        p.penalty = [&](double g) { return BetaSupSolver::prefix_loss(history, g) - c * ones_ / (prev + g); };
        acc += c * solver_->refine(p, bi, bv).second;
      }
    }
    return 0.5 * acc / static_cast<double>(K);
  }

  Vec act(const History& history, const NoiseField& playout) const override {
    const double raw = raw_qt(history, playout);
    const double q = clip(raw, 0.0, 1.0);
    if (q != raw) {
      ++clips_;
      clip_max_ = std::max(clip_max_, std::abs(q - raw));
    }
    return {q};
  }

  void observe(const History& history) override {
    const std::size_t t = history.size();
    const double z = history.scalar(static_cast<std::ptrdiff_t>(t));
    const Vec& gs = solver_->g_grid();
    for (std::size_t i = 0; i < gs.size(); ++i) grid_loss_[i] += std::abs(ones_ / (static_cast<double>(t - 1) + gs[i]) - z);
    ones_ += z;
  }

  nlohmann::json diagnostics() const override {
    return {{"playouts", opt_.playouts}, {"clipped_rounds", clips_}, {"max_clip", clip_max_}};
  }

 private:
  BetaLearnerOptions opt_;
  std::size_t T_ = 0;
  std::shared_ptr<BetaSupSolver> solver_;
  Vec grid_loss_;
  double ones_ = 0.0;
  mutable std::size_t clips_ = 0;
  mutable double clip_max_ = 0.0;
};

// ---------------------------------------------------------------------------
// Exponential weights over a discretized class
// ---------------------------------------------------------------------------

inline Vec exp_weights_step(std::span<const double> weights, std::span<const double> losses, double eta) {
  if (weights.size() != losses.size()) throw DimensionError("exp_weights_step: size mismatch");
  Vec w(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = weights[i] * std::exp(-eta * losses[i]);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

class ExpertsLearner : public Learner {
 public:
  ExpertsLearner(std::shared_ptr<const StrategyClass> cls, LossSpec loss, std::size_t resolution = 0, double eta = 0.0)
      : cls_(std::move(cls)), loss_(loss), resolution_(resolution), eta_override_(eta) {}

  std::string name() const override { return "exp_weights:" + cls_->name(); }
  void start(std::size_t horizon) override {
    params_ = cls_->discretize(resolution_);
    if (params_.empty()) throw ParameterError("ExpertsLearner: empty discretization");
    weights_.assign(params_.size(), 1.0 / static_cast<double>(params_.size()));
    const double n = static_cast<double>(params_.size());
    eta_ = eta_override_ > 0.0 ? eta_override_
                               : std::sqrt(8.0 * std::log(std::max(n, 2.0)) / static_cast<double>(horizon));
  }
  Vec act(const History& history, const NoiseField&) const override { return *expected_action(history); }
  std::optional<Vec> expected_action(const History& history) const override {
    const auto preds = cls_->predict_all(params_, history);
    Vec out(preds[0].size(), 0.0);
    for (std::size_t i = 0; i < preds.size(); ++i)
      for (std::size_t d = 0; d < out.size(); ++d) out[d] += weights_[i] * preds[i][d];
    return out;
  }
  void observe(const History& history) override {
    const std::size_t t = history.size();
    const History past = history.prefix(t - 1);
    const auto preds = cls_->predict_all(params_, past);
    const auto z = history.outcome(t);
    Vec losses(preds.size());
    const double range = loss_.range();
    for (std::size_t i = 0; i < preds.size(); ++i) losses[i] = loss_eval(loss_, preds[i], z) / range;
    weights_ = exp_weights_step(weights_, losses, eta_);
  }
  nlohmann::json diagnostics() const override { return {{"experts", params_.size()}, {"eta", eta_}}; }
  std::size_t experts() const { return params_.size(); }

 private:
  std::shared_ptr<const StrategyClass> cls_;
  LossSpec loss_;
  std::size_t resolution_;
  double eta_override_;
  double eta_ = 0.0;
  std::vector<Vec> params_;
  Vec weights_;
};

// ---------------------------------------------------------------------------
// Simple learners
// ---------------------------------------------------------------------------

class ConstantLearner : public Learner {
 public:
  explicit ConstantLearner(Vec value) : value_(std::move(value)) {}
  std::string name() const override { return "constant"; }
  void start(std::size_t) override {}
  Vec act(const History&, const NoiseField&) const override { return value_; }
  std::optional<Vec> expected_action(const History&) const override { return value_; }

 private:
  Vec value_;
};

/// Plays a fixed strategy of a class.
class StrategyLearner : public Learner {
 public:
  StrategyLearner(std::shared_ptr<const StrategyClass> cls, Vec param) : cls_(std::move(cls)), param_(std::move(param)) {}
  std::string name() const override { return "strategy:" + cls_->name(); }
  void start(std::size_t) override {}
  Vec act(const History& history, const NoiseField&) const override { return cls_->predict(param_, history); }
  std::optional<Vec> expected_action(const History& history) const override { return cls_->predict(param_, history); }

 private:
  std::shared_ptr<const StrategyClass> cls_;
  Vec param_;
};

/// {"algorithm": "gd" | "mirror_descent" | "b1_playout" | "b1_brownian" |
///  "beta_relaxation" | "exp_weights" | "constant", ...}
inline std::unique_ptr<Learner> learner_from_json(const nlohmann::json& j, std::shared_ptr<const StrategyClass> cls,
                                                  const LossSpec& loss) {
  const std::string alg = j.at("algorithm").get<std::string>();
  if (alg == "gd")
    return std::make_unique<GDLearner>(j.value("k", std::size_t{1}), parse_p(j.value("p", nlohmann::json(2.0))),
                                       j.value("radius", 1.0), j.value("eta", 0.0));
  if (alg == "mirror_descent") {
    std::size_t k = 0;
    if (j.contains("k") && !j["k"].is_string()) k = j["k"].get<std::size_t>();
    return std::make_unique<MDLearner>(k, parse_p(j.at("p")), j.value("beta", 0.0), j.value("eta", 0.0));
  }
  if (alg == "b1_playout")
    return std::make_unique<B1PlayoutLearner>(j.value("noise", "rademacher") == "gaussian" ? NoiseKind::kGaussian
                                                                                           : NoiseKind::kRademacher);
  if (alg == "b1_brownian") return std::make_unique<BrownianLearner>();
  if (alg == "beta_relaxation") {
    BetaLearnerOptions o;
    o.box.a_max = j.value("a_max", 0.0);
    o.box.c_beta = j.value("c_beta", 4.0);
    o.grid.points = j.value("grid_points", o.grid.points);
    o.grid.passes = j.value("refine_passes", o.grid.passes);
    const auto mode = j.value("playout", std::string("average"));
    if (mode != "average" && mode != "single") throw ConfigError("playout must be \"average\" or \"single\"");
    o.playouts = mode == "single" ? 1 : j.value("playouts", std::size_t{64});
    return std::make_unique<BetaRelaxationLearner>(o);
  }
  if (alg == "exp_weights") {
    if (!cls) throw ConfigError("exp_weights needs a strategy class");
    return std::make_unique<ExpertsLearner>(cls, loss, j.value("resolution", std::size_t{0}), j.value("eta", 0.0));
  }
  if (alg == "constant") {
    const auto& v = j.at("value");
    return std::make_unique<ConstantLearner>(v.is_array() ? v.get<Vec>() : Vec{v.get<double>()});
  }
  throw ConfigError("unknown algorithm: " + alg);
}

}  // namespace regretlab
