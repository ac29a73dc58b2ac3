#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/algorithms.hpp"
#include "regretlab/game_core.hpp"
#include "regretlab/strategy_classes.hpp"

namespace regretlab {

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

/// Independent draws from a fixed distribution.
/// Uniform draw from the Euclidean unit ball in R^dim.
inline Vec uniform_ball_point(std::size_t dim, CounterRng& rng) {
  Vec v(dim);
  double n = 0.0;
  for (double& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (double& x : v) x *= r / n;
  return v;
}

class IidAdversary : public Adversary {
 public:
  enum class Dist { kSigns, kBernoulli, kInterval, kBall, kLinearNoise };

  IidAdversary(Dist dist, double p = 0.5, std::size_t dim = 1, double noise = 0.1)
      : dist_(dist), p_(p), dim_(dim), noise_(noise) {
    if (dist == Dist::kBernoulli && (p < 0.0 || p > 1.0)) throw ParameterError("bernoulli p must be in [0, 1]");
  }

  std::string name() const override {
    switch (dist_) {
      case Dist::kSigns:
        return "iid_signs";
      case Dist::kBernoulli:
        return "iid_bernoulli";
      case Dist::kInterval:
        return "iid_interval";
      case Dist::kBall:
        return "iid_ball";
      case Dist::kLinearNoise:
        return "iid_linear_noise";
    }
    return "iid";
  }

  void start(std::size_t) override { u_.clear(); }

  std::optional<Vec> side_info(const History&, CounterRng& rng) override {
    if (dist_ != Dist::kLinearNoise) return std::nullopt;
    if (u_.empty()) u_ = ball_point(rng);
    return ball_point(rng);
  }

  Vec outcome(const History& history, const LearnerView&, CounterRng& rng) override {
    switch (dist_) {
      case Dist::kSigns:
        return {static_cast<double>(rng.sign())};
      case Dist::kBernoulli:
        return {rng.bernoulli(p_) ? 1.0 : 0.0};
      case Dist::kInterval:
        return {rng.uniform(-1.0, 1.0)};
      case Dist::kBall:
        return ball_point(rng);
      case Dist::kLinearNoise: {
        const auto x = history.side(history.size() + 1);
        return {clip(dot(u_, x) + noise_ * rng.normal(), -1.0, 1.0)};
      }
    }
    throw UnsupportedError("unknown distribution");
  }

 private:
  Vec ball_point(CounterRng& rng) const { return uniform_ball_point(dim_, rng); }

  Dist dist_;
  double p_;
  std::size_t dim_;
  double noise_;
  Vec u_;
};

/// One-step greedy: the outcome maximizing the loss of the learner's mean
/// decision. Ties go to the first outcome in `outcomes`.
inline std::size_t greedy_adversary_step(const Vec& mean, const LossSpec& loss, const std::vector<Vec>& outcomes) {
  std::size_t best = 0;
  double bv = -kInf;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double v = loss_eval(loss, mean, outcomes[i]);
    if (v > bv) {
      bv = v;
      best = i;
    }
  }
  return best;
}

class GreedyAdversary : public Adversary {
 public:
  /// side_dim > 0: side information drawn uniformly from the unit ball.
  GreedyAdversary(LossSpec loss, std::vector<Vec> outcomes, std::size_t side_dim = 0)
      : loss_(loss), outcomes_(std::move(outcomes)), side_dim_(side_dim) {
    if (outcomes_.empty()) throw ParameterError("greedy adversary needs a finite outcome set");
  }
  std::string name() const override { return "greedy_adaptive"; }
  std::optional<Vec> side_info(const History&, CounterRng& rng) override {
    if (side_dim_ == 0) return std::nullopt;
    return uniform_ball_point(side_dim_, rng);
  }
  Vec outcome(const History&, const LearnerView& learner, CounterRng&) override {
    return outcomes_[greedy_adversary_step(learner.mean(), loss_, outcomes_)];
  }

 private:
  LossSpec loss_;
  std::vector<Vec> outcomes_;
  std::size_t side_dim_;
};

class FixedSequenceAdversary : public Adversary {
 public:
  explicit FixedSequenceAdversary(std::vector<Vec> seq) : seq_(std::move(seq)) {}
  std::string name() const override { return "fixed_sequence"; }
  void start(std::size_t horizon) override {
    if (seq_.size() < horizon) throw ConfigError("fixed sequence shorter than the horizon");
  }
  Vec outcome(const History& history, const LearnerView&, CounterRng&) override { return seq_[history.size()]; }

 private:
  std::vector<Vec> seq_;
};

/// Wraps a base adversary so that every prefix satisfies ‖z_{1:t}‖_q ≤ T^β,
/// rescaling the proposed z_t onto the remaining budget when needed.
class LqConstrainedAdversary : public Adversary {
 public:
  LqConstrainedAdversary(std::unique_ptr<Adversary> base, double q, double beta)
      : base_(std::move(base)), q_(q), beta_(beta) {
    if (!(q >= 1.0)) throw ParameterError("lq_constrained: q >= 1 required");
  }
  std::string name() const override { return "lq_constrained(" + base_->name() + ")"; }
  void start(std::size_t horizon) override {
    base_->start(horizon);
    bound_ = std::pow(static_cast<double>(horizon), beta_);
    used_ = 0.0;
    rescaled_ = 0;
  }
  std::optional<Vec> side_info(const History& h, CounterRng& rng) override { return base_->side_info(h, rng); }

  Vec outcome(const History& history, const LearnerView& learner, CounterRng& rng) override {
    Vec z = base_->outcome(history, learner, rng);
    const double mag = l2_norm(z);
    double allowed;
    if (std::isinf(q_)) {
      allowed = bound_;
    } else {
      const double room = std::max(0.0, std::pow(bound_, q_) - used_);
      allowed = std::pow(room, 1.0 / q_);
    }
    if (mag > allowed) {
      const double s = mag > 0.0 ? allowed / mag : 0.0;
      for (double& v : z) v *= s;
      ++rescaled_;
    }
    if (!std::isinf(q_)) used_ += std::pow(l2_norm(z), q_);
    check(history, z);
    return z;
  }

  std::size_t rescaled() const { return rescaled_; }

 private:
  void check(const History& history, const Vec& z) const {
    Vec mags;
    for (std::size_t i = 1; i <= history.size(); ++i) mags.push_back(l2_norm(history.outcome(i)));
    mags.push_back(l2_norm(z));
    if (lp_norm(mags, q_) > bound_ * (1.0 + 1e-9))
      throw AssertionFailure("lq_constrained: prefix norm exceeds T^beta at round " + std::to_string(mags.size()));
  }

  std::unique_ptr<Adversary> base_;
  double q_;
  double beta_;
  double bound_ = 1.0;
  double used_ = 0.0;
  std::size_t rescaled_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline LossSpec loss_from_json(const nlohmann::json& j) {
  const std::string k = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (k == "linear" || k == "linear_inner") return LossSpec::linear();
  if (k == "absolute") return LossSpec::absolute();
  if (k == "squared") return LossSpec::squared();
  throw ConfigError("unknown loss: " + k);
}

inline OutcomeSpace space_from_json(const nlohmann::json& j) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "binary01") return OutcomeSpace::binary01();
  if (k == "signed_scalar") return OutcomeSpace::signed_scalar(j.value("bound", 1.0));
  if (k == "euclidean_ball") return OutcomeSpace::euclidean_ball(j.at("dim").get<std::size_t>(), j.value("radius", 1.0));
  throw ConfigError("unknown outcome space: " + k);
}

/// Canonical finite outcome sets: +1 before -1, 0 before 1.
inline std::vector<Vec> canonical_outcomes(const OutcomeSpace& space) {
  if (space.kind == OutcomeKind::kBinary01) return {{0.0}, {1.0}};
  if (space.kind == OutcomeKind::kSignedScalar) return {{space.radius}, {-space.radius}};
  std::vector<Vec> out;
  for (std::size_t d = 0; d < space.dim; ++d)
    for (double s : {1.0, -1.0}) {
      Vec v(space.dim, 0.0);
      v[d] = s * space.radius;
      out.push_back(v);
    }
  return out;
}

inline std::unique_ptr<Adversary> adversary_from_json(const nlohmann::json& j, const LossSpec& loss,
                                                      const OutcomeSpace& space) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "iid") {
    const std::string d = j.at("dist").get<std::string>();
    if (d == "signs") return std::make_unique<IidAdversary>(IidAdversary::Dist::kSigns);
    if (d == "bernoulli") return std::make_unique<IidAdversary>(IidAdversary::Dist::kBernoulli, j.value("p", 0.5));
    if (d == "interval") return std::make_unique<IidAdversary>(IidAdversary::Dist::kInterval);
    if (d == "ball") return std::make_unique<IidAdversary>(IidAdversary::Dist::kBall, 0.5, space.dim);
    if (d == "linear_noise")
      return std::make_unique<IidAdversary>(IidAdversary::Dist::kLinearNoise, 0.5, j.at("side_dim").get<std::size_t>(),
                                            j.value("noise", 0.1));
    throw ConfigError("unknown iid distribution: " + d);
  }
  if (kind == "greedy_adaptive") {
    std::vector<Vec> outcomes;
    if (j.contains("outcomes"))
      for (const auto& o : j["outcomes"]) outcomes.push_back(o.is_array() ? o.get<Vec>() : Vec{o.get<double>()});
    else
      outcomes = canonical_outcomes(space);
    return std::make_unique<GreedyAdversary>(loss, std::move(outcomes), j.value("side_dim", std::size_t{0}));
  }
  if (kind == "fixed_sequence") {
    std::vector<Vec> seq;
    for (const auto& o : j.at("sequence")) seq.push_back(o.is_array() ? o.get<Vec>() : Vec{o.get<double>()});
    return std::make_unique<FixedSequenceAdversary>(std::move(seq));
  }
  if (kind == "lq_constrained")
    return std::make_unique<LqConstrainedAdversary>(adversary_from_json(j.at("base"), loss, space),
                                                    parse_p(j.at("q")), j.value("beta", 0.5));
  throw ConfigError("unknown adversary kind: " + kind);
}

struct ExperimentConfig {
  nlohmann::json learner;
  nlohmann::json strategy_class;
  nlohmann::json adversary;
  LossSpec loss = LossSpec::linear();
  OutcomeSpace space = OutcomeSpace::signed_scalar();
  std::size_t side_dim = 0;
  std::vector<std::size_t> horizons;
  std::vector<std::uint64_t> seeds;
  std::size_t adversary_simulations = 8;
  std::string output_dir;  // empty: no files
  bool write_traces = true;

  void validate() const {
    if (horizons.empty()) throw ConfigError("config: horizons must be non-empty");
    for (std::size_t i = 1; i < horizons.size(); ++i)
      if (horizons[i] <= horizons[i - 1]) throw ConfigError("config: horizons must be strictly increasing");
    if (horizons.front() < 1) throw ConfigError("config: horizons must be >= 1");
    if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.learner = j.at("learner");
    c.strategy_class = j.at("class");
    c.adversary = j.at("adversary");
    c.loss = loss_from_json(j.at("loss"));
    if (j.contains("outcome_space"))
      c.space = space_from_json(j["outcome_space"]);
    else
      c.space = c.loss.kind == LossKind::kAbsolute ? OutcomeSpace::binary01() : OutcomeSpace::signed_scalar();
    c.side_dim = j.value("side_dim", std::size_t{0});
    c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      c.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      const auto start = s.value("start", std::uint64_t{0});
      for (std::uint64_t i = 0; i < s.at("count").get<std::uint64_t>(); ++i) c.seeds.push_back(start + i);
    }
    c.adversary_simulations = j.value("adversary_simulations", std::size_t{8});
    c.output_dir = j.value("output_dir", std::string());
    c.write_traces = j.value("write_traces", true);
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Rate fits and aggregation
// ---------------------------------------------------------------------------

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline nlohmann::json to_json(const RateFit& f) {
  return {{"exponent", f.exponent}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

/// OLS of log(regret) on log(T), regret floored at 1e-9.
inline RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ParameterError("rate_fit: at least 3 points required");
  Vec xs, ys;
  for (const auto& [T, r] : points) {
    if (!(T > 0.0)) throw ParameterError("rate_fit: horizons must be positive");
    xs.push_back(std::log(T));
    ys.push_back(std::log(std::max(r, 1e-9)));
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = i + 1; k < xs.size(); ++k)
      if (xs[i] == xs[k]) throw ParameterError("rate_fit: horizons must be distinct");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.exponent * xs[i]);
    sse += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

struct HorizonAggregate {
  std::size_t horizon = 0;
  double mean_regret = 0.0;
  double stderr_ = 0.0;
  std::size_t n_seeds = 0;
};

/// Mean and standard error, summed in sorted order so the result does not
/// depend on the order of the seeds.
inline HorizonAggregate aggregate(std::size_t horizon, Vec values) {
  std::sort(values.begin(), values.end());
  HorizonAggregate a;
  a.horizon = horizon;
  a.n_seeds = values.size();
  double s = 0.0;
  for (double v : values) s += v;
  a.mean_regret = s / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean_regret) * (v - a.mean_regret);
    a.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return a;
}

struct RunRecord {
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  RegretReport report;
  nlohmann::json learner_diagnostics;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<HorizonAggregate> horizons;
  std::optional<RateFit> fit;

  nlohmann::json aggregate_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& h : horizons)
      rows.push_back({{"horizon", h.horizon}, {"mean_regret", h.mean_regret}, {"stderr", h.stderr_}, {"n_seeds", h.n_seeds}});
    nlohmann::json j = {{"horizons", rows}};
    j["rate_fit"] = fit ? to_json(*fit) : nlohmann::json(nullptr);
    return j;
  }
};

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::shared_ptr<const StrategyClass> cls = class_from_json(config.strategy_class);
  ExperimentResult result;
  namespace fs = std::filesystem;
  if (!config.output_dir.empty()) fs::create_directories(config.output_dir);

  for (std::size_t T : config.horizons) {
    Vec regrets;
    for (std::uint64_t seed : config.seeds) {
      try {
        auto learner = learner_from_json(config.learner, cls, config.loss);
        auto adversary = adversary_from_json(config.adversary, config.loss, config.space);
        GameSetup setup;
        setup.horizon = T;
        setup.loss = config.loss;
        setup.space = config.space;
        setup.side_dim = config.side_dim;
        setup.seed = seed;
        setup.adversary_simulations = config.adversary_simulations;
        const GameTrace trace = run_game(*learner, *adversary, setup);
        RunRecord rec{T, seed, regret(trace, *cls), trace.learner_diagnostics};
        regrets.push_back(rec.report.regret);
        if (!config.output_dir.empty() && config.write_traces) {
          std::ofstream out(fs::path(config.output_dir) /
                            ("trace_T" + std::to_string(T) + "_seed" + std::to_string(seed) + ".csv"));
          out << to_csv(trace);
        }
        result.runs.push_back(std::move(rec));
      } catch (const AssertionFailure& e) {
        throw AssertionFailure("horizon " + std::to_string(T) + ", seed " + std::to_string(seed) + ": " + e.what());
      } catch (const std::exception& e) {
        throw Error("horizon " + std::to_string(T) + ", seed " + std::to_string(seed) + ": " + e.what());
      }
    }
    result.horizons.push_back(aggregate(T, std::move(regrets)));
  }
  if (result.horizons.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& h : result.horizons) pts.emplace_back(static_cast<double>(h.horizon), h.mean_regret);
    result.fit = rate_fit(pts);
  }
  if (!config.output_dir.empty()) {
    std::ofstream out(fs::path(config.output_dir) / "aggregate.json");
    out << result.aggregate_json().dump(2) << '\n';
  }
  return result;
}

}  // namespace regretlab
