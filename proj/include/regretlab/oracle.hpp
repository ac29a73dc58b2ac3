#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/game_core.hpp"
#include "regretlab/optimize.hpp"

namespace regretlab {

/// A strategy given as a table from histories (strings of outcome indices,
/// "" for the empty history) to decisions, with a fallback value.
struct TableStrategy {
  double fallback = 0.0;
  std::map<std::string, double> table;

  double operator()(const std::string& key) const {
    const auto it = table.find(key);
    return it == table.end() ? fallback : it->second;
  }
  static TableStrategy constant(double v) { return {v, {}}; }
};

struct TinyGameSpec {
  std::size_t T = 1;
  std::vector<double> outcomes{0.0, 1.0};
  double decision_lo = 0.0;
  double decision_hi = 1.0;
  std::size_t decision_points = 201;
  LossSpec loss = LossSpec::absolute();
  std::vector<TableStrategy> strategies;
  /// Round 1 is not charged (neither to the learner nor to the comparator).
  bool first_round_free = true;

  void validate() const {
    if (T < 1 || T > 6) throw SizeError("TinyGameSpec: 1 <= T <= 6 required");
    if (outcomes.empty() || outcomes.size() > 3) throw SizeError("TinyGameSpec: 1 to 3 outcomes");
    if (decision_points < 2 || decision_points > 2001) throw SizeError("TinyGameSpec: 2 to 2001 decision points");
    if (strategies.empty()) throw ParameterError("TinyGameSpec: at least one strategy");
    if (std::pow(static_cast<double>(outcomes.size()), static_cast<double>(T)) > 1e6)
      throw SizeError("TinyGameSpec: game tree too large");
  }

  std::size_t first_charged_round() const { return first_round_free ? 2 : 1; }
};

inline std::string history_key(const std::vector<std::size_t>& idx, std::size_t len) {
  std::string k;
  for (std::size_t i = 0; i < len; ++i) k.push_back(static_cast<char>('0' + idx[i]));
  return k;
}

inline TinyGameSpec tiny_game_from_json(const nlohmann::json& j) {
  TinyGameSpec s;
  s.T = j.at("T").get<std::size_t>();
  s.outcomes = j.at("outcomes").get<std::vector<double>>();
  if (j.contains("decisions")) {
    const auto& d = j["decisions"];
    s.decision_lo = d.value("lo", 0.0);
    s.decision_hi = d.value("hi", 1.0);
    s.decision_points = d.value("points", std::size_t{201});
  }
  const std::string loss = j.value("loss", std::string("absolute"));
  if (loss == "absolute")
    s.loss = LossSpec::absolute();
  else if (loss == "linear")
    s.loss = LossSpec::linear();
  else if (loss == "squared")
    s.loss = LossSpec::squared();
  else
    throw ConfigError("unknown loss: " + loss);
  s.first_round_free = j.value("first_round_free", true);
  for (const auto& sj : j.at("strategies")) {
    if (sj.contains("constant")) {
      s.strategies.push_back(TableStrategy::constant(sj["constant"].get<double>()));
      continue;
    }
    TableStrategy t;
    t.fallback = sj.value("default", 0.0);
    for (const auto& [k, v] : sj.at("table").items()) t.table[k] = v.get<double>();
    s.strategies.push_back(std::move(t));
  }
  s.validate();
  return s;
}

inline nlohmann::json to_json(const TinyGameSpec& s) {
  nlohmann::json strategies = nlohmann::json::array();
  for (const auto& t : s.strategies) {
    if (t.table.empty())
      strategies.push_back({{"constant", t.fallback}});
    else
      strategies.push_back({{"default", t.fallback}, {"table", t.table}});
  }
  const char* loss = s.loss.kind == LossKind::kAbsolute ? "absolute" : s.loss.kind == LossKind::kLinearInner ? "linear" : "squared";
  return {{"T", s.T},
          {"outcomes", s.outcomes},
          {"decisions", {{"lo", s.decision_lo}, {"hi", s.decision_hi}, {"points", s.decision_points}}},
          {"loss", loss},
          {"first_round_free", s.first_round_free},
          {"strategies", strategies}};
}

namespace detail {

/// Comparator loss of strategy `pi` along a full index path.
inline double path_loss(const TinyGameSpec& s, const TableStrategy& pi, const std::vector<std::size_t>& path,
                        std::size_t len) {
  double total = 0.0;
  for (std::size_t t = s.first_charged_round(); t <= len; ++t)
    total += loss_eval(s.loss, pi(history_key(path, t - 1)), s.outcomes[path[t - 1]]);
  return total;
}

inline double minimax_node(const TinyGameSpec& s, std::vector<std::size_t>& path, std::size_t depth, bool refine) {
  if (depth == s.T) {
    double best = kInf;
    for (const auto& pi : s.strategies) best = std::min(best, path_loss(s, pi, path, s.T));
    return -best;
  }
  Vec child(s.outcomes.size());
  for (std::size_t z = 0; z < s.outcomes.size(); ++z) {
    path[depth] = z;
    child[z] = minimax_node(s, path, depth + 1, refine);
  }
  const bool charged = depth + 1 >= s.first_charged_round();
  if (!charged) return *std::max_element(child.begin(), child.end());
  auto objective = [&](double f) {
    double m = -kInf;
    for (std::size_t z = 0; z < s.outcomes.size(); ++z) m = std::max(m, loss_eval(s.loss, f, s.outcomes[z]) + child[z]);
    return m;
  };
  if (refine) return minimize_convex_scalar(objective, s.decision_lo, s.decision_hi, s.decision_points, 40).value;
  double best = kInf;
  for (double f : linear_grid(s.decision_lo, s.decision_hi, s.decision_points)) best = std::min(best, objective(f));
  return best;
}

}  // namespace detail

/// V_T(Π) by backward induction. The comparator is resolved at the leaves;
/// inner infima over decisions use the grid (plus convex refinement when
/// `refine`). Deterministic decisions suffice since every supported loss
/// is convex in the decision.
inline double minimax_value(const TinyGameSpec& spec, bool refine = false) {
  spec.validate();
  std::vector<std::size_t> path(spec.T, 0);
  return detail::minimax_node(spec, path, 0, refine);
}

/// sup over (w, z) trees of E_ε max_π Σ_t ε_t ℓ(π_t(w_{1:t-1}(ε)), z_t(ε)),
/// by enumeration of every tree pair.
inline double seq_rademacher_exact(const TinyGameSpec& spec, double max_pairs = 5e6) {
  spec.validate();
  const std::size_t T = spec.T;
  if (T > 4) throw SizeError("seq_rademacher_exact: T <= 4 required for exact trees");
  const std::size_t O = spec.outcomes.size();
  const std::size_t zn = (std::size_t{1} << T) - 1;
  const std::size_t wn = (std::size_t{1} << (T - 1)) - 1;
  const double pairs = std::pow(static_cast<double>(O), static_cast<double>(zn + wn));
  if (pairs > max_pairs) throw SizeError("seq_rademacher_exact: too many tree pairs");
  const auto zcount = static_cast<std::uint64_t>(std::pow(static_cast<double>(O), static_cast<double>(zn)));
  const auto wcount = static_cast<std::uint64_t>(std::pow(static_cast<double>(O), static_cast<double>(wn)));
  const std::size_t paths = std::size_t{1} << T;
  const std::size_t t0 = spec.first_charged_round();

  std::vector<std::size_t> zl(zn), wl(wn), hist(T);
  auto decode = [O](std::uint64_t index, std::vector<std::size_t>& labels) {
    for (auto& l : labels) {
      l = static_cast<std::size_t>(index % O);
      index /= O;
    }
  };
  // Node (level j, path bits p of ε_1..ε_j) sits at 2^j - 1 + p.
  double best = -kInf;
  for (std::uint64_t wi = 0; wi < wcount; ++wi) {
    decode(wi, wl);
    // Strategy decisions along each path depend on the w tree only.
    std::vector<Vec> decisions(paths, Vec(spec.strategies.size() * T));
    for (std::size_t e = 0; e < paths; ++e) {
      std::uint64_t bits = 0;
      for (std::size_t t = 1; t <= T; ++t) {
        for (std::size_t i = 0; i < spec.strategies.size(); ++i)
          decisions[e][i * T + t - 1] = spec.strategies[i](history_key(hist, t - 1));
        if (t < T) {
          hist[t - 1] = wl[(std::size_t{1} << (t - 1)) - 1 + bits];
          if ((e >> (t - 1)) & 1u) bits |= std::uint64_t{1} << (t - 1);
        }
      }
    }
    for (std::uint64_t zi = 0; zi < zcount; ++zi) {
      decode(zi, zl);
      double expectation = 0.0;
      for (std::size_t e = 0; e < paths; ++e) {
        double mx = -kInf;
        for (std::size_t i = 0; i < spec.strategies.size(); ++i) {
          double sum = 0.0;
          std::uint64_t bits = 0;
          for (std::size_t t = 1; t <= T; ++t) {
            const double eps = ((e >> (t - 1)) & 1u) ? 1.0 : -1.0;
            if (t >= t0) {
              const double z = spec.outcomes[zl[(std::size_t{1} << (t - 1)) - 1 + bits]];
              sum += eps * loss_eval(spec.loss, decisions[e][i * T + t - 1], z);
            }
            if (eps > 0) bits |= std::uint64_t{1} << (t - 1);
          }
          mx = std::max(mx, sum);
        }
        expectation += mx;
      }
      best = std::max(best, expectation / static_cast<double>(paths));
    }
  }
  return best;
}

/// argmin over the grid of max_z objective(q, z); ties go to the smallest q.
/// With refine_steps > 0 a ternary search around the grid optimum follows
/// (the objectives of interest are convex in q).
inline double brute_qt(const std::function<double(double, double)>& objective, const Vec& q_grid,
                       const Vec& outcome_set, std::size_t refine_steps = 0) {
  if (q_grid.empty()) throw ParameterError("brute_qt: empty grid");
  auto worst = [&](double q) {
    double m = -kInf;
    for (double z : outcome_set) m = std::max(m, objective(q, z));
    return m;
  };
  std::size_t bi = 0;
  double bv = worst(q_grid[0]);
  for (std::size_t i = 1; i < q_grid.size(); ++i) {
    const double v = worst(q_grid[i]);
    if (v < bv) {
      bv = v;
      bi = i;
    }
  }
  if (refine_steps == 0 || q_grid.size() < 2) return q_grid[bi];
  double lo = q_grid[bi > 0 ? bi - 1 : 0];
  double hi = q_grid[std::min(bi + 1, q_grid.size() - 1)];
  for (std::size_t s = 0; s < refine_steps; ++s) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (worst(m1) <= worst(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double q = 0.5 * (lo + hi);
  return worst(q) < bv ? q : q_grid[bi];
}

/// Finite class of table strategies over scalar outcome histories, for use
/// with the relaxation tools. Parameters are {index}.
class TableClass : public StrategyClass {
 public:
  TableClass(std::vector<TableStrategy> strategies, std::vector<double> outcomes)
      : strategies_(std::move(strategies)), outcomes_(std::move(outcomes)) {}

  std::string name() const override { return "table"; }

  Vec predict(std::span<const double> param, const History& history) const override {
    const auto i = static_cast<std::size_t>(param[0]);
    if (i >= strategies_.size()) throw ParameterError("TableClass: index out of range");
    std::string key;
    for (std::size_t t = 1; t <= history.size(); ++t) {
      const double z = history.scalar(static_cast<std::ptrdiff_t>(t));
      const auto it = std::find(outcomes_.begin(), outcomes_.end(), z);
      if (it == outcomes_.end()) throw ProtocolError("TableClass: outcome not in the table alphabet");
      key.push_back(static_cast<char>('0' + (it - outcomes_.begin())));
    }
    return {strategies_[i](key)};
  }

  ComparatorResult best_comparator(const History& history, const LossSpec& loss) const override {
    ComparatorResult best;
    best.loss = kInf;
    for (std::size_t i = 0; i < strategies_.size(); ++i) {
      const Vec p{static_cast<double>(i)};
      const double l = strategy_loss(*this, p, history, loss);
      if (l < best.loss) {
        best.loss = l;
        best.param = p;
      }
    }
    best.method = ComparatorMethod::kGrid;
    return best;
  }

  std::vector<Vec> discretize(std::size_t) const override {
    std::vector<Vec> out;
    for (std::size_t i = 0; i < strategies_.size(); ++i) out.push_back({static_cast<double>(i)});
    return out;
  }

  nlohmann::json to_json() const override { return {{"class", "table"}, {"strategies", strategies_.size()}}; }

 private:
  std::vector<TableStrategy> strategies_;
  std::vector<double> outcomes_;
};

}  // namespace regretlab
