#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/error.hpp"
#include "regretlab/norms.hpp"
#include "regretlab/rng.hpp"

namespace regretlab {

// ---------------------------------------------------------------------------
// Outcomes and histories
// ---------------------------------------------------------------------------

enum class OutcomeKind { kBinary01, kSignedScalar, kEuclideanBall };

struct OutcomeSpace {
  OutcomeKind kind = OutcomeKind::kSignedScalar;
  std::size_t dim = 1;
  double radius = 1.0;

  static OutcomeSpace binary01() { return {OutcomeKind::kBinary01, 1, 1.0}; }
  static OutcomeSpace signed_scalar(double bound = 1.0) { return {OutcomeKind::kSignedScalar, 1, bound}; }
  static OutcomeSpace euclidean_ball(std::size_t dim, double radius = 1.0) {
    return {OutcomeKind::kEuclideanBall, dim, radius};
  }

  bool contains(std::span<const double> z, double tol = 1e-12) const {
    if (z.size() != dim) return false;
    switch (kind) {
      case OutcomeKind::kBinary01:
        return z[0] == 0.0 || z[0] == 1.0;
      case OutcomeKind::kSignedScalar:
        return std::abs(z[0]) <= radius + tol;
      case OutcomeKind::kEuclideanBall:
        return l2_norm(z) <= radius + tol;
    }
    return false;
  }

  void validate(std::span<const double> z) const {
    if (z.size() != dim) throw DimensionError("outcome has dimension " + std::to_string(z.size()) + ", expected " +
                                              std::to_string(dim));
    if (!contains(z)) throw ProtocolError("outcome outside the outcome space");
  }
};

/// Realized outcomes z_1..z_t (1-based) plus optional side information
/// x_1..x_{t'} with t' >= t. Outcomes at indices <= 0 read as zero.
class History {
 public:
  explicit History(std::size_t dim = 1, std::size_t side_dim = 0) : dim_(dim), side_dim_(side_dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t side_dim() const { return side_dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : outcomes_.size() / dim_; }
  std::size_t side_size() const { return side_dim_ == 0 ? 0 : side_.size() / side_dim_; }
  bool empty() const { return outcomes_.empty(); }

  std::span<const double> outcome(std::size_t t) const {
    if (t < 1 || t > size()) throw DimensionError("history index out of range");
    return {outcomes_.data() + (t - 1) * dim_, dim_};
  }

  /// Scalar outcome with zero padding for t <= 0.
  double scalar(std::ptrdiff_t t) const {
    if (t <= 0) return 0.0;
    return outcomes_[static_cast<std::size_t>(t - 1) * dim_];
  }

  std::span<const double> side(std::size_t t) const {
    if (t < 1 || t > side_size()) throw DimensionError("side information index out of range");
    return {side_.data() + (t - 1) * side_dim_, side_dim_};
  }

  std::span<const double> outcomes_flat() const { return outcomes_; }

  void push_outcome(std::span<const double> z) {
    if (z.size() != dim_) throw DimensionError("outcome dimension mismatch");
    if (side_dim_ > 0 && side_size() < size() + 1)
      throw ProtocolError("side information for the current round must be revealed before its outcome");
    outcomes_.insert(outcomes_.end(), z.begin(), z.end());
  }
  void push_outcome(double z) { push_outcome(std::span<const double>(&z, 1)); }

  void push_side(std::span<const double> x) {
    if (x.size() != side_dim_) throw DimensionError("side information dimension mismatch");
    side_.insert(side_.end(), x.begin(), x.end());
  }

  void pop_outcome() {
    if (empty()) throw DimensionError("pop from empty history");
    outcomes_.resize(outcomes_.size() - dim_);
  }

  /// First t outcomes (and the side information that was available then).
  History prefix(std::size_t t) const {
    if (t > size()) throw DimensionError("prefix longer than history");
    History h(dim_, side_dim_);
    h.outcomes_.assign(outcomes_.begin(), outcomes_.begin() + static_cast<std::ptrdiff_t>(t * dim_));
    if (side_dim_ > 0) {
      const std::size_t keep = std::min(side_size(), t + 1);
      h.side_.assign(side_.begin(), side_.begin() + static_cast<std::ptrdiff_t>(keep * side_dim_));
    }
    return h;
  }

  static History scalars(std::span<const double> z) {
    History h(1);
    for (double v : z) h.push_outcome(v);
    return h;
  }
  static History scalars(std::initializer_list<double> z) { return scalars(std::span<const double>(z.begin(), z.size())); }

 private:
  std::size_t dim_;
  std::size_t side_dim_;
  Vec outcomes_;
  Vec side_;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { kLinearInner, kAbsolute, kSquared };

struct LossSpec {
  LossKind kind = LossKind::kLinearInner;
  /// Bound on |decision| and |outcome| used for the derived Lipschitz constant.
  double bound = 1.0;

  static LossSpec linear() { return {LossKind::kLinearInner, 1.0}; }
  static LossSpec absolute() { return {LossKind::kAbsolute, 1.0}; }
  static LossSpec squared() { return {LossKind::kSquared, 1.0}; }

  /// Lipschitz constant in the decision over the bounded domain: squared loss
  /// over [-1, 1] gives 4.
  double lipschitz_constant() const {
    switch (kind) {
      case LossKind::kLinearInner:
        return bound;
      case LossKind::kAbsolute:
        return 1.0;
      case LossKind::kSquared:
        return 4.0 * bound;
    }
    return 1.0;
  }

  /// Upper bound on the range of the loss over the domain (for normalizing).
  double range() const {
    switch (kind) {
      case LossKind::kLinearInner:
        return 2.0 * bound * bound;
      case LossKind::kAbsolute:
        return 2.0 * bound;
      case LossKind::kSquared:
        return 4.0 * bound * bound;
    }
    return 1.0;
  }
};

inline double loss_eval(const LossSpec& loss, std::span<const double> decision, std::span<const double> outcome) {
  switch (loss.kind) {
    case LossKind::kLinearInner:
      if (decision.size() != outcome.size()) throw DimensionError("linear loss: decision/outcome dimension mismatch");
      return dot(decision, outcome);
    case LossKind::kAbsolute:
      if (decision.size() != 1 || outcome.size() != 1) throw DimensionError("absolute loss needs scalars");
      return std::abs(decision[0] - outcome[0]);
    case LossKind::kSquared:
      if (decision.size() != 1 || outcome.size() != 1) throw DimensionError("squared loss needs scalars");
      return (decision[0] - outcome[0]) * (decision[0] - outcome[0]);
  }
  throw UnsupportedError("unknown loss kind");
}

inline double loss_eval(const LossSpec& loss, double decision, double outcome) {
  return loss_eval(loss, std::span<const double>(&decision, 1), std::span<const double>(&outcome, 1));
}

// ---------------------------------------------------------------------------
// Players
// ---------------------------------------------------------------------------

/// A learner emits, at round t = history.size() + 1, a decision drawn from
/// its distribution q_t. Randomized learners draw their internal randomness
/// (playouts) from `playout`; act() must be a pure function of
/// (state, history, playout) so that others can re-simulate it.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual void start(std::size_t horizon) = 0;
  virtual Vec act(const History& history, const NoiseField& playout) const = 0;
  /// Mean of q_t when it is available without sampling.
  virtual std::optional<Vec> expected_action(const History& /*history*/) const { return std::nullopt; }
  /// Called after z_t has been appended to the history.
  virtual void observe(const History& /*history*/) {}
  virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
};

/// What an adaptive adversary may see of the learner at round t: its
/// distribution q_t, summarized by the mean. Never the sampled decision.
class LearnerView {
 public:
  LearnerView(const Learner& learner, const History& history, std::uint64_t seed, std::uint32_t round,
              std::size_t simulations)
      : learner_(learner), history_(history), seed_(seed), round_(round), simulations_(simulations) {}

  /// Mean decision of q_t. For randomized learners without a closed form
  /// the adversary re-simulates the learner on its own stream.
  const Vec& mean() const {
    if (!mean_) {
      if (auto exact = learner_.expected_action(history_)) {
        mean_ = std::move(*exact);
        exact_ = true;
      } else {
        const std::size_t n = std::max<std::size_t>(1, simulations_);
        Vec acc;
        for (std::size_t j = 0; j < n; ++j) {
          const NoiseField sim(seed_, Stream::kAdversarySimulation,
                               static_cast<std::uint32_t>(round_ * n + j));
          Vec a = learner_.act(history_, sim);
          if (acc.empty()) acc.assign(a.size(), 0.0);
          for (std::size_t i = 0; i < a.size(); ++i) acc[i] += a[i];
        }
        for (double& v : acc) v /= static_cast<double>(n);
        mean_ = std::move(acc);
        exact_ = false;
      }
    }
    return *mean_;
  }

  bool consulted() const { return mean_.has_value(); }
  bool exact() const { return exact_; }
  const History& history() const { return history_; }

 private:
  const Learner& learner_;
  const History& history_;
  std::uint64_t seed_;
  std::uint32_t round_;
  std::size_t simulations_;
  mutable std::optional<Vec> mean_;
  mutable bool exact_ = false;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual void start(std::size_t /*horizon*/) {}
  /// Supervised play: x_t, revealed before the learner acts.
  virtual std::optional<Vec> side_info(const History& /*history*/, CounterRng& /*rng*/) { return std::nullopt; }
  virtual Vec outcome(const History& history, const LearnerView& learner, CounterRng& rng) = 0;
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct RoundRecord {
  std::size_t round = 0;
  /// Mean of q_t if anybody looked at it (NaN otherwise).
  double distribution_mean = std::numeric_limits<double>::quiet_NaN();
  bool mean_exact = false;
  Vec decision;
  Vec outcome;
  double loss = 0.0;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  Stream learner_stream = Stream::kLearner;
  Stream adversary_stream = Stream::kAdversary;
  Stream playout_stream = Stream::kPlayout;
};

struct GameSetup {
  std::size_t horizon = 1;
  LossSpec loss = LossSpec::linear();
  OutcomeSpace space = OutcomeSpace::signed_scalar();
  std::size_t side_dim = 0;
  std::uint64_t seed = 0;
  /// Re-simulations an adaptive adversary may use to estimate q_t's mean.
  std::size_t adversary_simulations = 8;
};

struct GameTrace {
  std::vector<RoundRecord> rounds;
  double cumulative_loss = 0.0;
  SeedRecord seed;
  LossSpec loss;
  History history;
  std::string learner;
  std::string adversary;
  nlohmann::json learner_diagnostics = nlohmann::json::object();

  std::size_t horizon() const { return rounds.size(); }
};

inline GameTrace run_game(Learner& learner, Adversary& adversary, const GameSetup& setup) {
  if (setup.horizon < 1) throw ParameterError("run_game: horizon T >= 1 required");
  GameTrace trace;
  trace.seed.seed = setup.seed;
  trace.loss = setup.loss;
  trace.history = History(setup.space.dim, setup.side_dim);
  trace.learner = learner.name();
  trace.adversary = adversary.name();
  trace.rounds.reserve(setup.horizon);

  CounterRng adversary_rng(setup.seed, Stream::kAdversary);
  const NoiseField playout(setup.seed, Stream::kPlayout);
  learner.start(setup.horizon);
  adversary.start(setup.horizon);

  History& history = trace.history;
  for (std::size_t t = 1; t <= setup.horizon; ++t) {
    if (setup.side_dim > 0) {
      auto x = adversary.side_info(history, adversary_rng);
      if (!x) throw ProtocolError("supervised game: adversary revealed no side information");
      history.push_side(*x);
    }
    const auto round = static_cast<std::uint32_t>(t);
    const Vec decision = learner.act(history, playout.with_substream(round));
    const LearnerView view(learner, history, setup.seed, round, setup.adversary_simulations);
    Vec z = adversary.outcome(history, view, adversary_rng);
    setup.space.validate(z);

    RoundRecord rec;
    rec.round = t;
    rec.decision = decision;
    rec.outcome = z;
    rec.loss = loss_eval(setup.loss, decision, z);
    if (view.consulted() && !view.mean().empty()) {
      rec.distribution_mean = view.mean()[0];
      rec.mean_exact = view.exact();
    }
    trace.cumulative_loss += rec.loss;
    trace.rounds.push_back(std::move(rec));

    history.push_outcome(z);
    learner.observe(history);
  }
  trace.learner_diagnostics = learner.diagnostics();
  return trace;
}

// ---------------------------------------------------------------------------
// Strategy classes and regret
// ---------------------------------------------------------------------------

enum class ComparatorMethod { kClosedForm, kGrid, kGridRefined };

inline std::string to_string(ComparatorMethod m) {
  switch (m) {
    case ComparatorMethod::kClosedForm:
      return "closed_form";
    case ComparatorMethod::kGrid:
      return "grid";
    case ComparatorMethod::kGridRefined:
      return "grid_refined";
  }
  return "unknown";
}

struct ComparatorResult {
  Vec param;
  double loss = 0.0;
  ComparatorMethod method = ComparatorMethod::kClosedForm;
  bool converged = true;
  std::string note;
};

/// A parametrized family of strategies π^θ.
class StrategyClass {
 public:
  virtual ~StrategyClass() = default;
  virtual std::string name() const = 0;
  /// π^θ_t evaluated at t = history.size() + 1.
  virtual Vec predict(std::span<const double> param, const History& history) const = 0;
  /// Predictions of several parameters at once (classes override this when
  /// a shared computation makes it cheaper).
  virtual std::vector<Vec> predict_all(const std::vector<Vec>& params, const History& history) const {
    std::vector<Vec> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(predict(p, history));
    return out;
  }
  /// inf over the class of the realized cumulative loss on `history`.
  virtual ComparatorResult best_comparator(const History& history, const LossSpec& loss) const = 0;
  /// A finite set of parameters covering the class.
  virtual std::vector<Vec> discretize(std::size_t resolution) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// Cumulative loss of the fixed strategy π^θ along the realized history.
inline double strategy_loss(const StrategyClass& cls, std::span<const double> param, const History& history,
                            const LossSpec& loss) {
  double total = 0.0;
  for (std::size_t t = 1; t <= history.size(); ++t) {
    const History past = history.prefix(t - 1);
    total += loss_eval(loss, cls.predict(param, past), history.outcome(t));
  }
  return total;
}

struct RegretReport {
  double learner_loss = 0.0;
  double comparator_loss = 0.0;
  Vec comparator_param;
  double regret = 0.0;
  ComparatorMethod comparator_method = ComparatorMethod::kClosedForm;
  bool comparator_converged = true;
  std::string note;
};

inline RegretReport regret(const GameTrace& trace, const StrategyClass& cls) {
  if (trace.history.size() != trace.horizon()) throw DimensionError("regret: trace history does not match rounds");
  const ComparatorResult comp = cls.best_comparator(trace.history, trace.loss);
  RegretReport r;
  r.learner_loss = trace.cumulative_loss;
  r.comparator_loss = comp.loss;
  r.comparator_param = comp.param;
  r.comparator_method = comp.method;
  r.comparator_converged = comp.converged;
  r.note = comp.note;
  r.regret = r.learner_loss - r.comparator_loss;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json vec_json(const Vec& v) {
  if (v.size() == 1) return v[0];
  return v;
}

inline std::string vec_csv(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v[i];
  }
  return os.str();
}

inline std::string stream_name(Stream s) {
  switch (s) {
    case Stream::kLearner:
      return "learner";
    case Stream::kAdversary:
      return "adversary";
    case Stream::kPlayout:
      return "playout";
    case Stream::kAdversarySimulation:
      return "adversary_simulation";
    case Stream::kRelaxation:
      return "relaxation";
    case Stream::kTree:
      return "tree";
    case Stream::kOracle:
      return "oracle";
    case Stream::kBench:
      return "bench";
  }
  return "unknown";
}

}  // namespace detail

inline nlohmann::json to_json(const RegretReport& r) {
  return {{"learner_loss", r.learner_loss},
          {"comparator_loss", r.comparator_loss},
          {"comparator_param", r.comparator_param},
          {"regret", r.regret},
          {"comparator_method", to_string(r.comparator_method)},
          {"comparator_converged", r.comparator_converged},
          {"note", r.note}};
}

inline nlohmann::json to_json(const GameTrace& trace) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : trace.rounds) {
    nlohmann::json jr = {{"round", r.round},
                         {"decision", detail::vec_json(r.decision)},
                         {"outcome", detail::vec_json(r.outcome)},
                         {"loss", r.loss}};
    if (std::isnan(r.distribution_mean)) {
      jr["distribution_mean"] = nullptr;
    } else {
      jr["distribution_mean"] = r.distribution_mean;
      jr["distribution_mean_exact"] = r.mean_exact;
    }
    rounds.push_back(std::move(jr));
  }
  return {{"horizon", trace.horizon()},
          {"learner", trace.learner},
          {"adversary", trace.adversary},
          {"cumulative_loss", trace.cumulative_loss},
          {"seed",
           {{"seed", trace.seed.seed},
            {"learner_stream", detail::stream_name(trace.seed.learner_stream)},
            {"adversary_stream", detail::stream_name(trace.seed.adversary_stream)},
            {"playout_stream", detail::stream_name(trace.seed.playout_stream)},
            {"playout_substream", "round"}}},
          {"learner_diagnostics", trace.learner_diagnostics},
          {"rounds", std::move(rounds)}};
}

/// Per-round CSV with header `round,decision,outcome,loss`. Vector entries
/// are joined with ';'.
inline std::string to_csv(const GameTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "round,decision,outcome,loss\n";
  for (const auto& r : trace.rounds)
    os << r.round << ',' << detail::vec_csv(r.decision) << ',' << detail::vec_csv(r.outcome) << ',' << r.loss << '\n';
  return os.str();
}

}  // namespace regretlab
