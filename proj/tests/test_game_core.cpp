#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "regretlab/regretlab.hpp"

using namespace regretlab;

namespace {

// Total linear loss of the full-history strategy θ on z, written out
// directly rather than through the class.
double full_history_loss(const Vec& theta, const Vec& z) {
  double total = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < t; ++i) pred += theta[i] * z[i];
    total += pred * z[t];
  }
  return total;
}

// Minimum of full_history_loss over a step-0.01 grid covering B₁(1).
double l1_grid_min(const Vec& z, Vec* argmin = nullptr) {
  const std::size_t n = z.size();
  const int steps = 100;
  double best = kInf;
  std::vector<int> idx(n, -steps);
  while (true) {
    int l1 = 0;
    for (int v : idx) l1 += std::abs(v);
    if (l1 <= steps) {
      Vec th(n);
      for (std::size_t i = 0; i < n; ++i) th[i] = idx[i] / static_cast<double>(steps);
      const double v = full_history_loss(th, z);
      if (v < best) {
        best = v;
        if (argmin) *argmin = th;
      }
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] > steps) idx[d++] = -steps;
    if (d == n) break;
  }
  return best;
}

class CoinAdversary : public Adversary {
 public:
  std::string name() const override { return "coin"; }
  Vec outcome(const History&, const LearnerView&, CounterRng& rng) override { return {rng.bernoulli(0.5) ? 1.0 : 0.0}; }
};

class OutOfSpaceAdversary : public Adversary {
 public:
  std::string name() const override { return "bad"; }
  Vec outcome(const History&, const LearnerView&, CounterRng&) override { return {0.5}; }
};

}  // namespace

TEST(Philox, KnownAnswers) {
  // Published Philox4x32-10 test vectors.
  auto r = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
  r = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(r[0], 0x408f276du);
  EXPECT_EQ(r[1], 0x41c83b0eu);
  EXPECT_EQ(r[2], 0xa20bc7c6u);
  EXPECT_EQ(r[3], 0x6d5451fdu);
  r = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(r[0], 0xd16cfe09u);
  EXPECT_EQ(r[1], 0x94fdccebu);
  EXPECT_EQ(r[2], 0x5001e420u);
  EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(Rng, StreamsAreIndependentAndAddressable) {
  const NoiseField a(3, Stream::kPlayout);
  const NoiseField b(3, Stream::kAdversary);
  int same = 0;
  for (std::uint64_t p = 0; p < 256; ++p) same += a.sign(0, p) == b.sign(0, p);
  EXPECT_GT(same, 90);
  EXPECT_LT(same, 166);
  EXPECT_EQ(a.gaussian(5, 17), a.gaussian(5, 17));
  EXPECT_NE(a.gaussian(5, 17), a.gaussian(6, 17));

  double mean = 0.0;
  for (std::uint64_t p = 0; p < 100000; ++p) mean += a.sign(1, p);
  EXPECT_LT(std::abs(mean / 100000), 0.02);

  CounterRng r1(9, Stream::kAdversary), r2(9, Stream::kAdversary);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(r1(), r2());
}

TEST(LossEval, Examples) {
  EXPECT_DOUBLE_EQ(loss_eval(LossSpec::absolute(), 0.5, 1.0), 0.5);
  const Vec f{0.5, 0.0}, z{1.0, 0.0};
  EXPECT_DOUBLE_EQ(loss_eval(LossSpec::linear(), f, z), 0.5);
  EXPECT_NEAR(loss_eval(LossSpec::squared(), 0.3, 1.0), 0.49, 1e-15);
  EXPECT_DOUBLE_EQ(LossSpec::squared().lipschitz_constant(), 4.0);
}

TEST(LossEval, ShapeMismatchIsDimensionError) {
  const Vec f{0.5, 0.0}, z{1.0};
  EXPECT_THROW(loss_eval(LossSpec::linear(), f, z), DimensionError);
  EXPECT_THROW(loss_eval(LossSpec::absolute(), f, f), DimensionError);
}

TEST(OutcomeSpace, Membership) {
  const Vec half{0.5}, one{1.0}, two{2.0};
  EXPECT_FALSE(OutcomeSpace::binary01().contains(half));
  EXPECT_TRUE(OutcomeSpace::binary01().contains(one));
  EXPECT_TRUE(OutcomeSpace::signed_scalar().contains(half));
  EXPECT_FALSE(OutcomeSpace::signed_scalar().contains(two));
  const Vec v{0.6, 0.8}, w{0.8, 0.8};
  EXPECT_TRUE(OutcomeSpace::euclidean_ball(2).contains(v));
  EXPECT_FALSE(OutcomeSpace::euclidean_ball(2).contains(w));
  EXPECT_THROW(OutcomeSpace::euclidean_ball(2).validate(one), DimensionError);
}

TEST(History, PaddingAndSideInformation) {
  History h = History::scalars({1.0, -1.0});
  EXPECT_EQ(h.scalar(0), 0.0);
  EXPECT_EQ(h.scalar(-3), 0.0);
  EXPECT_EQ(h.scalar(2), -1.0);
  EXPECT_EQ(h.prefix(1).size(), 1u);

  History s(1, 2);
  EXPECT_THROW(s.push_outcome(1.0), ProtocolError);
  const Vec x{0.1, 0.2};
  s.push_side(x);
  s.push_outcome(1.0);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.side_size(), 1u);
}

TEST(RunGame, ConstantZeroLearnerPaysTheOnes) {
  ConstantLearner learner({0.0});
  CoinAdversary adv;
  GameSetup setup{4, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 11};
  const GameTrace tr = run_game(learner, adv, setup);
  ASSERT_EQ(tr.horizon(), 4u);
  double ones = 0.0, sum = 0.0;
  for (const auto& r : tr.rounds) {
    ones += r.outcome[0];
    sum += r.loss;
  }
  EXPECT_DOUBLE_EQ(tr.cumulative_loss, ones);
  EXPECT_NEAR(tr.cumulative_loss, sum, 1e-12 * 4);
}

TEST(RunGame, RejectsZeroHorizon) {
  ConstantLearner learner({0.0});
  CoinAdversary adv;
  GameSetup setup{0, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 1};
  EXPECT_THROW(run_game(learner, adv, setup), ParameterError);
}

TEST(RunGame, OutOfSpaceOutcomeIsProtocolError) {
  ConstantLearner learner({0.0});
  OutOfSpaceAdversary adv;
  GameSetup setup{3, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 1};
  EXPECT_THROW(run_game(learner, adv, setup), ProtocolError);
}

TEST(RunGame, PlayoutLearnerAgainstGreedyIsReproducible) {
  GameSetup setup{128, LossSpec::linear(), OutcomeSpace::signed_scalar(), 0, 7};
  auto once = [&] {
    B1PlayoutLearner learner;
    GreedyAdversary adv(LossSpec::linear(), {{1.0}, {-1.0}});
    return run_game(learner, adv, setup);
  };
  const GameTrace a = once(), b = once();
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.cumulative_loss, b.cumulative_loss);
}

TEST(RunGame, AbsoluteLossOnBinaryOutcomesStaysInUnitInterval) {
  BetaRelaxationLearner learner({{0.0, 4.0}, {}, 4});
  CoinAdversary adv;
  GameSetup setup{40, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 3};
  const GameTrace tr = run_game(learner, adv, setup);
  for (const auto& r : tr.rounds) {
    EXPECT_GE(r.loss, 0.0);
    EXPECT_LE(r.loss, 1.0);
  }
}

TEST(Regret, Arithmetic) {
  ConstantLearner learner({0.0});
  FixedSequenceAdversary adv({{1.0}, {1.0}});
  GameSetup setup{2, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 0};
  const GameTrace tr = run_game(learner, adv, setup);
  const TableClass cls({TableStrategy::constant(1.0)}, {0.0, 1.0});
  const RegretReport r = regret(tr, cls);
  EXPECT_DOUBLE_EQ(r.learner_loss, 2.0);
  EXPECT_DOUBLE_EQ(r.comparator_loss, 0.0);
  EXPECT_DOUBLE_EQ(r.regret, 2.0);
  EXPECT_EQ(r.regret, r.learner_loss - r.comparator_loss);
}

TEST(Regret, ReplayingTheBestStrategyHasZeroRegret) {
  const Vec z{1, -1, -1, 1, 1, 1, -1, 1, -1, -1};
  std::vector<Vec> seq;
  for (double v : z) seq.push_back({v});
  auto cls = std::make_shared<ARClass>(3, ThetaBall{2.0, 1.0});
  const ComparatorResult best = cls->best_comparator(History::scalars(z), LossSpec::linear());
  StrategyLearner learner(cls, best.param);
  FixedSequenceAdversary adv(seq);
  const GameTrace tr = run_game(learner, adv, {z.size(), LossSpec::linear(), OutcomeSpace::signed_scalar(), 0, 0});
  EXPECT_NEAR(regret(tr, *cls).regret, 0.0, 1e-12);
}

TEST(Regret, FullHistoryL1ComparatorMatchesGrid) {
  const Vec z{1, 1, -1};
  Vec grid_theta;
  const double grid = l1_grid_min(z, &grid_theta);
  ConstantLearner learner({0.0});
  FixedSequenceAdversary adv({{1.0}, {1.0}, {-1.0}});
  const GameTrace tr = run_game(learner, adv, {3, LossSpec::linear(), OutcomeSpace::signed_scalar(), 0, 0});
  const RegretReport r = regret(tr, ARClass(0, {1.0, 1.0}));
  EXPECT_NEAR(r.comparator_loss, -1.0, 1e-12);
  EXPECT_NEAR(grid, -1.0, 1e-2);
  ASSERT_EQ(r.comparator_param.size(), 3u);
  EXPECT_EQ(r.comparator_param[0], 0.0);
  EXPECT_EQ(r.comparator_param[1], 1.0);
  EXPECT_EQ(r.comparator_param[2], 0.0);
  EXPECT_EQ(to_string(r.comparator_method), "closed_form");
}

TEST(Serialization, CsvHeaderAndJsonFields) {
  ConstantLearner learner({0.25});
  FixedSequenceAdversary adv({{1.0}, {0.0}});
  const GameTrace tr = run_game(learner, adv, {2, LossSpec::absolute(), OutcomeSpace::binary01(), 0, 5});
  const std::string csv = to_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "round,decision,outcome,loss");
  const auto j = to_json(tr);
  EXPECT_EQ(j["rounds"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["cumulative_loss"].get<double>(), 1.0);
  EXPECT_EQ(j["seed"]["seed"].get<int>(), 5);
  const auto rj = to_json(regret(tr, TableClass({TableStrategy::constant(0.0)}, {0.0, 1.0})));
  EXPECT_DOUBLE_EQ(rj["regret"].get<double>(), 0.0);
}
