#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "regretlab/regretlab.hpp"

using namespace regretlab;

namespace {

TinyGameSpec two_constants(std::size_t T, bool free_first) {
  TinyGameSpec s;
  s.T = T;
  s.strategies = {TableStrategy::constant(0.0), TableStrategy::constant(1.0)};
  s.first_round_free = free_first;
  return s;
}

// Every history key of length < T over a binary alphabet gets a random
// decision in [0, 1].
TableStrategy random_table(std::size_t T, CounterRng& rng) {
  TableStrategy st;
  st.fallback = rng.uniform();
  for (std::size_t len = 0; len < T; ++len)
    for (std::size_t m = 0; m < (std::size_t{1} << len); ++m) {
      std::string key;
      for (std::size_t i = 0; i < len; ++i) key.push_back((m >> i) & 1u ? '1' : '0');
      st.table[key] = std::round(rng.uniform() * 4.0) / 4.0;
    }
  return st;
}

TinyGameSpec flipped(const TinyGameSpec& s) {
  TinyGameSpec f = s;
  for (auto& st : f.strategies) {
    st.fallback = 1.0 - st.fallback;
    std::map<std::string, double> t;
    for (const auto& [k, v] : st.table) {
      std::string key = k;
      for (char& c : key) c = c == '0' ? '1' : '0';
      t[key] = 1.0 - v;
    }
    st.table = std::move(t);
  }
  return f;
}

}  // namespace

TEST(Minimax, SingleRoundTwoConstants) {
  EXPECT_NEAR(minimax_value(two_constants(1, false)), 0.5, 1e-12);
  EXPECT_NEAR(minimax_value(two_constants(1, true)), 0.0, 1e-12);
}

TEST(Minimax, PerfectExpertHasZeroValue) {
  TinyGameSpec s;
  s.T = 3;
  s.outcomes = {1.0};
  s.first_round_free = false;
  s.strategies = {TableStrategy::constant(1.0), TableStrategy::constant(0.3)};
  EXPECT_NEAR(minimax_value(s), 0.0, 1e-12);
}

TEST(Minimax, SupersetNeverDecreases) {
  CounterRng rng(1, Stream::kOracle);
  for (int trial = 0; trial < 10; ++trial) {
    TinyGameSpec s;
    s.T = 3;
    s.first_round_free = trial % 2 == 0;
    s.strategies = {random_table(3, rng)};
    double prev = minimax_value(s);
    for (int k = 0; k < 3; ++k) {
      s.strategies.push_back(random_table(3, rng));
      const double v = minimax_value(s);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(Minimax, OutcomeRelabelingInvariance) {
  CounterRng rng(2, Stream::kOracle);
  for (int trial = 0; trial < 10; ++trial) {
    TinyGameSpec s;
    s.T = 3;
    s.first_round_free = false;
    for (int k = 0; k < 3; ++k) s.strategies.push_back(random_table(3, rng));
    EXPECT_NEAR(minimax_value(s), minimax_value(flipped(s)), 1e-12);
  }
}

TEST(Minimax, GridRefinementWithinLipschitzStep) {
  CounterRng rng(3, Stream::kOracle);
  for (int trial = 0; trial < 8; ++trial) {
    TinyGameSpec s;
    s.T = 2 + trial % 2;
    s.loss = trial < 4 ? LossSpec::absolute() : LossSpec::squared();
    for (int k = 0; k < 3; ++k) s.strategies.push_back(random_table(s.T, rng));
    s.decision_points = 201;
    const double coarse = minimax_value(s);
    s.decision_points = 2001;
    const double fine = minimax_value(s);
    EXPECT_LE(std::abs(coarse - fine), s.loss.lipschitz_constant() * (1.0 / 200.0) * static_cast<double>(s.T));
    EXPECT_LE(fine, coarse + 1e-12);
  }
}

TEST(SeqRademacher, SingleRoundTwoConstants) {
  EXPECT_NEAR(seq_rademacher_exact(two_constants(1, false)), 0.5, 1e-12);
}

TEST(SeqRademacher, SingletonClassIsZero) {
  // One strategy: E Σ ε_t ℓ(π_t, z_t(ε_{1:t-1})) vanishes because ε_t is
  // independent of everything it multiplies.
  TinyGameSpec s;
  s.T = 3;
  s.outcomes = {-1.0, 1.0};
  s.decision_lo = -1.0;
  s.loss = LossSpec::linear();
  s.first_round_free = false;
  s.strategies = {TableStrategy{0.4, {{"0", -1.0}, {"1", 1.0}}}};
  EXPECT_NEAR(seq_rademacher_exact(s), 0.0, 1e-12);
}

TEST(SeqRademacher, MonotoneInClass) {
  CounterRng rng(4, Stream::kOracle);
  TinyGameSpec s;
  s.T = 3;
  s.first_round_free = false;
  s.strategies = {random_table(3, rng)};
  double prev = seq_rademacher_exact(s);
  for (int k = 0; k < 3; ++k) {
    s.strategies.push_back(random_table(3, rng));
    const double v = seq_rademacher_exact(s);
    EXPECT_GE(v, prev - 1e-12);
    prev = v;
  }
  s.T = 5;
  EXPECT_THROW(seq_rademacher_exact(s), SizeError);
}

TEST(Sandwich, SmallBattery) {
  CounterRng rng(5, Stream::kOracle);
  for (int trial = 0; trial < 12; ++trial) {
    TinyGameSpec s;
    s.T = 1 + trial % 3;
    const std::size_t n = 1 + rng.index(4);
    for (std::size_t k = 0; k < n; ++k) s.strategies.push_back(random_table(s.T, rng));
    EXPECT_LE(minimax_value(s), 2.0 * seq_rademacher_exact(s) + 1e-9);
  }
}

TEST(BruteQt, Examples) {
  const Vec grid = linear_grid(-1, 1, 201);
  EXPECT_NEAR(brute_qt([](double q, double z) { return q * z; }, grid, {-1.0, 1.0}), 0.0, 1e-12);
  EXPECT_EQ(brute_qt([](double, double) { return 3.0; }, grid, {-1.0, 1.0}), -1.0);
  // Playout objective at t = 1, T = 2, ε₂ = +1.
  auto obj = [](double q, double z) {
    const double a1 = -z, a2 = 2.0;
    return q * z + std::max(std::abs(a2), std::abs(a1 + a2));
  };
  EXPECT_NEAR(brute_qt(obj, grid, {-1.0, 1.0}), 0.5, 0.01);
}

TEST(TinyGameJson, RoundTripAndFile) {
  std::ifstream in(std::string(REGRETLAB_SOURCE_DIR) + "/configs/tiny_game.json");
  ASSERT_TRUE(in.good());
  const TinyGameSpec s = tiny_game_from_json(nlohmann::json::parse(in));
  const TinyGameSpec t = tiny_game_from_json(to_json(s));
  EXPECT_EQ(to_json(s), to_json(t));
  EXPECT_DOUBLE_EQ(minimax_value(s), minimax_value(t));
  EXPECT_THROW(tiny_game_from_json({{"T", 9}, {"outcomes", {0, 1}}, {"strategies", {{{"constant", 0}}}}}), SizeError);
}

TEST(TableClass, PredictsFromTheTable) {
  const TableClass cls({TableStrategy{0.5, {{"", 0.1}, {"1", 0.9}, {"10", 0.2}}}}, {0.0, 1.0});
  const Vec p{0.0};
  EXPECT_DOUBLE_EQ(cls.predict(p, History())[0], 0.1);
  EXPECT_DOUBLE_EQ(cls.predict(p, History::scalars({1}))[0], 0.9);
  EXPECT_DOUBLE_EQ(cls.predict(p, History::scalars({1, 0}))[0], 0.2);
  EXPECT_DOUBLE_EQ(cls.predict(p, History::scalars({0, 0}))[0], 0.5);
}
