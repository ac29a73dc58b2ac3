#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "regretlab/regretlab.hpp"

using namespace regretlab;

namespace {

double full_history_loss(const Vec& theta, const Vec& z) {
  double total = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < t; ++i) pred += theta[i] * z[i];
    total += pred * z[t];
  }
  return total;
}

double l1_grid_min(const Vec& z, int steps) {
  const std::size_t n = z.size();
  double best = kInf;
  std::vector<int> idx(n, -steps);
  while (true) {
    int l1 = 0;
    for (int v : idx) l1 += std::abs(v);
    if (l1 <= steps) {
      Vec th(n);
      for (std::size_t i = 0; i < n; ++i) th[i] = idx[i] / static_cast<double>(steps);
      best = std::min(best, full_history_loss(th, z));
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] > steps) idx[d++] = -steps;
    if (d == n) break;
  }
  return best;
}

// Σ_t |MAP_t - z_t| written straight from the α, β form.
double map_loss_direct(double alpha, double beta, const Vec& z) {
  double ones = 0.0, total = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    total += std::abs((ones + alpha - 1.0) / (static_cast<double>(t) + alpha + beta - 2.0) - z[t]);
    ones += z[t];
  }
  return total;
}

History supervised(const std::vector<Vec>& xs, const Vec& ys) {
  History h(1, xs.front().size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    h.push_side(xs[i]);
    if (i < ys.size()) h.push_outcome(ys[i]);
  }
  return h;
}

}  // namespace

TEST(ARPredict, Examples) {
  const Vec th{0.5, -0.5};
  EXPECT_DOUBLE_EQ(ar_predict(th, History::scalars({1.0, -1.0}), 2)[0], 1.0);
  EXPECT_DOUBLE_EQ(ar_predict(th, History(), 2)[0], 0.0);
  const Vec e2{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(ar_predict(e2, History::scalars({1.0, 1.0}), 0, true)[0], 1.0);
  // Zero padding: only z_1 is inside the window at t = 2.
  EXPECT_DOUBLE_EQ(ar_predict(th, History::scalars({1.0}), 2)[0], -0.5);
}

TEST(ARPredict, ThetaOutsideBallRejected) {
  const ARClass cls(2, {1.0, 1.0});
  const Vec bad{0.8, 0.3};
  EXPECT_THROW(cls.predict(bad, History::scalars({1.0})), ParameterError);
  const Vec wrong{0.1};
  EXPECT_THROW(cls.predict(wrong, History::scalars({1.0})), DimensionError);
}

TEST(ARComparator, Examples) {
  auto r = ar_best_comparator_l1(History::scalars({1, 1, -1}));
  EXPECT_EQ(r.param, (Vec{0, 1, 0}));
  EXPECT_DOUBLE_EQ(r.loss, -1.0);
  EXPECT_NEAR(l1_grid_min({1, 1, -1}, 100), -1.0, 1e-2);

  r = ar_best_comparator_l1(History::scalars({0, 0, 0}));
  EXPECT_DOUBLE_EQ(r.loss, 0.0);

  r = ar_best_comparator_l1(History::scalars({1, 1, 1, 1}));
  EXPECT_EQ(r.param, (Vec{-1, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(r.loss, -3.0);
  EXPECT_NEAR(l1_grid_min({1, 1, 1, 1}, 20), -3.0, 1e-2);

  r = ar_best_comparator_l1(History());
  EXPECT_DOUBLE_EQ(r.loss, 0.0);
  EXPECT_TRUE(r.param.empty());
}

TEST(ARComparator, ClosedFormNeverBeatenOnRandomSequences) {
  CounterRng rng(21, Stream::kBench);
  const ARClass cls(0, {1.0, 1.0});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = 1 + rng.index(32);
    Vec z(T);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);
    const History h = History::scalars(z);
    const auto r = ar_best_comparator_l1(h);
    EXPECT_NEAR(r.loss, full_history_loss(r.param, z), 1e-12);
    EXPECT_NEAR(r.loss, strategy_loss(cls, r.param, h, LossSpec::linear()), 1e-12);
    double scale = 0.0;
    for (std::size_t i = 0; i < T; ++i)
      for (double s : {1.0, -1.0}) {
        Vec th(T, 0.0);
        th[i] = s;
        const double v = full_history_loss(th, z);
        scale = std::max(scale, std::abs(v));
        EXPECT_GE(v, r.loss - 1e-12);
      }
    for (int k = 0; k < 50; ++k) {
      Vec th(T);
      for (double& v : th) v = rng.uniform(-1.0, 1.0);
      project_l1_ball(th, 1.0);
      EXPECT_GE(full_history_loss(th, z), r.loss - 1e-12);
    }
    if (T <= 3) {
      EXPECT_NEAR(l1_grid_min(z, 100), r.loss, 0.02 * scale + 1e-12);
    }
  }
}

TEST(ARComparator, GeneralBallsUseDualNorm) {
  CounterRng rng(8, Stream::kBench);
  Vec z(12);
  for (double& v : z) v = rng.uniform(-1.0, 1.0);
  const History h = History::scalars(z);
  for (double p : {1.0, 1.5, 2.0, kInf}) {
    const ARClass cls(3, {p, 1.0});
    const auto r = cls.best_comparator(h, LossSpec::linear());
    EXPECT_LE(lp_norm(r.param, p), 1.0 + 1e-12);
    EXPECT_NEAR(r.loss, strategy_loss(cls, r.param, h, LossSpec::linear()), 1e-12);
    for (const Vec& th : cls.discretize(9)) EXPECT_GE(strategy_loss(cls, th, h, LossSpec::linear()), r.loss - 1e-12);
  }
}

TEST(MapPredict, Examples) {
  EXPECT_DOUBLE_EQ(map_predict(2, 2, History::scalars({1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(map_predict(2, 2, History()), 0.5);
  EXPECT_NEAR(map_predict(1.5, 3.5, History::scalars({1, 1, 1})), 3.5 / 6.0, 1e-15);
  EXPECT_THROW(map_predict(1.0, 2.0, History()), ParameterError);
  const BetaMAPClass cls({8.0, 4.0});
  const Vec outside{2.0, 5.0};
  EXPECT_THROW(cls.predict(outside, History()), ParameterError);
}

TEST(MapPredict, MonotoneInAlphaAndBeta) {
  const History h = History::scalars({1, 0, 0, 1, 1, 0, 1});
  for (double a = 1.1; a < 15.0; a *= 1.3)
    for (double b = 1.1; b < 3.9; b *= 1.2) {
      const double p = map_predict(a, b, h);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_GT(map_predict(a + 1e-4, b, h), p);
      EXPECT_LT(map_predict(a, b + 1e-4, h), p);
    }
}

TEST(BetaComparator, AllOnesPushesAlphaToTheTop) {
  const Vec z(20, 1.0);
  const BetaBox box{100.0, 4.0};
  const auto r = beta_best_comparator(History::scalars(z), box, {});
  EXPECT_NEAR(r.param[0], 100.0, 1e-9);
  // Dense-grid oracle.
  double dense = kInf, dense_a = 0.0;
  for (double a : log_grid(1e-9, 99.0, 400))
    for (double b : log_grid(1e-9, 3.0, 100)) {
      const double v = map_loss_direct(1 + a, 1 + b, z);
      if (v < dense) {
        dense = v;
        dense_a = 1 + a;
      }
    }
  EXPECT_NEAR(dense_a, 100.0, 1e-9);
  EXPECT_LE(r.loss, dense + 1e-9);
  EXPECT_NEAR(r.loss, map_loss_direct(r.param[0], r.param[1], z), 1e-12);
  EXPECT_EQ(to_string(r.method), "grid_refined");
}

TEST(BetaComparator, AlternatingSequenceOffDiagonalOptimum) {
  Vec z;
  for (int i = 0; i < 16; ++i) z.push_back(i % 2);
  const BetaBox box{4.0, 4.0};
  const auto r = beta_best_comparator(History::scalars(z), box, {});
  double diag = kInf;
  for (double a : log_grid(1e-9, 3.0, 20000)) diag = std::min(diag, map_loss_direct(1 + a, 1 + a, z));
  double dense = kInf;
  for (double a : log_grid(1e-9, 3.0, 300))
    for (double b : log_grid(1e-9, 3.0, 300)) dense = std::min(dense, map_loss_direct(1 + a, 1 + b, z));
  EXPECT_LE(r.loss, dense + 1e-9);
  EXPECT_GE(r.loss, dense - 1e-3);
  // Swapping α and β mirrors the outcomes, and 0101... mirrored is 1010...,
  // so the optimum need not sit on the diagonal. Here it does not.
  EXPECT_LT(r.loss, diag - 0.05);
}

TEST(BetaComparator, SingleRoundOptimumAtBoundary) {
  const BetaBox box{16.0, 4.0};
  for (double z : {0.0, 1.0}) {
    const auto r = beta_best_comparator(History::scalars({z}), box, {});
    const double pred = (r.param[0] - 1) / (r.param[0] + r.param[1] - 2);
    EXPECT_NEAR(r.loss, std::abs(pred - z), 1e-12);
    if (z == 1.0) {
      EXPECT_NEAR(r.param[0], 16.0, 1e-9);
      EXPECT_NEAR(r.param[1], 1.0, 1e-6);
    } else {
      EXPECT_NEAR(r.param[0], 1.0, 1e-6);
    }
    EXPECT_LT(r.loss, 1e-6);
  }
}

TEST(RLS, Examples) {
  const Vec w0{0.0, 0.0};
  const History h = supervised({{1, 0}, {1, 0}}, {1});
  EXPECT_NEAR(rls_predict(1.0, w0, h), 0.5, 1e-15);

  const Vec w{0.6, -0.3};
  const History big = supervised({{0.3, 0.4}, {-0.5, 0.2}, {0.7, 0.1}}, {1, -1});
  EXPECT_NEAR(rls_predict(1e12, w, big), 0.6 * 0.7 - 0.3 * 0.1, 1e-9);
  EXPECT_DOUBLE_EQ(rls_predict(kInf, w, big), 0.6 * 0.7 - 0.3 * 0.1);

  EXPECT_DOUBLE_EQ(clip_unit(1.7), 1.0);
  EXPECT_DOUBLE_EQ(clip_unit(-3.0), -1.0);
  const Vec wbig{1.0, 0.0};
  const History push = supervised({{1, 0}, {1, 0}, {1, 0}}, {1, 1});
  EXPECT_DOUBLE_EQ(rls_predict(0.1, wbig, push), 1.0);  // raw value 1 + 2/2.1
  EXPECT_THROW(rls_predict(1.0, Vec{0.0}, h), DimensionError);
}

TEST(RLS, MatchesNormalEquations) {
  CounterRng rng(5, Stream::kBench);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.index(8);
    const std::size_t t = 1 + rng.index(64);
    std::vector<Vec> xs(t);
    for (auto& x : xs) {
      x.resize(d);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      const double n = l2_norm(x);
      if (n > 1.0)
        for (double& v : x) v /= n;
    }
    Vec ys(t - 1);
    for (double& y : ys) y = rng.uniform(-1.0, 1.0);
    Vec w0(d);
    for (double& v : w0) v = rng.uniform(-1.0, 1.0) / std::sqrt(static_cast<double>(d));
    const double lambda = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));

    // Direct: build X, Y and solve with a QR factorization.
    Eigen::MatrixXd X(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(d));
    Eigen::VectorXd Y(static_cast<Eigen::Index>(t - 1));
    for (std::size_t i = 0; i + 1 < t; ++i) {
      for (std::size_t k = 0; k < d; ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i][k];
      Y(static_cast<Eigen::Index>(i)) = ys[i];
    }
    Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const Eigen::VectorXd v = A.colPivHouseholderQr().solve(X.transpose() * Y);
    double raw = 0.0;
    for (std::size_t k = 0; k < d; ++k) raw += (w0[k] + v(static_cast<Eigen::Index>(k))) * xs[t - 1][k];

    const double got = rls_predict(lambda, w0, supervised(xs, ys));
    EXPECT_NEAR(got, std::clamp(raw, -1.0, 1.0), 1e-8);
  }
}

TEST(RLS, PredictAllAgreesWithPredict) {
  const RLSClass cls(0.1, 2, 4, 3);
  const History h = supervised({{0.3, 0.4}, {-0.5, 0.2}, {0.7, 0.1}, {0.1, -0.9}}, {1, -1, 0.5});
  const auto params = cls.discretize(0);
  const auto all = cls.predict_all(params, h);
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_NEAR(all[i][0], cls.predict(params[i], h)[0], 1e-12);
    EXPECT_LE(std::abs(all[i][0]), 1.0);
  }
}

TEST(FTRL, Examples) {
  const Schedule one{Schedule::Kind::kConstant, 1.0};
  const Vec w0{0.0, 0.0};
  History h(2);
  h.push_outcome(Vec{0.5, 0.0});
  auto w = ftrl_predict(one, w0, h);
  EXPECT_DOUBLE_EQ(w[0], -0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.0);

  History big(2);
  for (const Vec& z : {Vec{1, 0}, Vec{0.6, 0.8}, Vec{0.8, 0.6}}) big.push_outcome(z);
  w = ftrl_predict(one, w0, big);
  EXPECT_NEAR(l2_norm(w), 1.0, 1e-15);

  const Vec w1{0.3, -0.2};
  EXPECT_EQ(ftrl_predict(one, w1, History(2)), w1);
}

TEST(FTRL, MatchesProjectedGradientMinimization) {
  // argmin over the unit ball of <w, S> + (λ/2)‖w‖², solved by projected
  // gradient steps, then shifted by w₀.
  CounterRng rng(17, Stream::kBench);
  const std::vector<Schedule> schedules{{Schedule::Kind::kConstant, 0.7},
                                        {Schedule::Kind::kSqrtT, 1.0},
                                        {Schedule::Kind::kLinearT, 0.2},
                                        {Schedule::Kind::kPowerT, 1.5, 0.3},
                                        {Schedule::Kind::kNormPlusSqrtT, 0.5}};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.index(4);
    const std::size_t t = 1 + rng.index(40);
    History h(d);
    Vec S(d, 0.0);
    for (std::size_t i = 0; i + 1 < t; ++i) {
      Vec z(d);
      for (double& v : z) v = rng.uniform(-1.0, 1.0) / std::sqrt(static_cast<double>(d));
      for (std::size_t k = 0; k < d; ++k) S[k] += z[k];
      h.push_outcome(z);
    }
    Vec w0(d);
    for (double& v : w0) v = rng.uniform(-0.5, 0.5) / std::sqrt(static_cast<double>(d));
    const Schedule& sc = schedules[rng.index(schedules.size())];
    const double lambda = sc(l2_norm(S), t);
    Vec u(d, 0.0);
    for (int it = 0; it < 200; ++it) {
      for (std::size_t k = 0; k < d; ++k) u[k] -= 0.5 / lambda * (S[k] + lambda * u[k]);
      const double n = l2_norm(u);
      if (n > 1.0)
        for (double& v : u) v /= n;
    }
    const Vec got = ftrl_predict(sc, w0, h);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(got[k], w0[k] + u[k], 1e-8);
    EXPECT_LE(l2_norm(got), 2.0 + 1e-12);
  }
}

TEST(FTRL, LinearComparatorIsExact) {
  const FTRLClass cls({{Schedule::Kind::kConstant, 1.0}, {Schedule::Kind::kSqrtT, 2.0}}, 2, 9);
  History h(2);
  CounterRng rng(3, Stream::kBench);
  for (int i = 0; i < 15; ++i) h.push_outcome(Vec{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)});
  const auto r = cls.best_comparator(h, LossSpec::linear());
  EXPECT_NEAR(r.loss, strategy_loss(cls, r.param, h, LossSpec::linear()), 1e-12);
  for (const Vec& p : cls.discretize(0)) EXPECT_GE(strategy_loss(cls, p, h, LossSpec::linear()), r.loss - 1e-12);
}

TEST(ClassJson, RoundTrip) {
  const nlohmann::json specs[] = {
      {{"class", "ar"}, {"k", 4}, {"p", 1}, {"radius", 1.0}},
      {{"class", "ar"}, {"k", "full"}, {"p", "inf"}, {"radius", 2.0}},
      {{"class", "beta_map"}, {"a_max", 32}, {"c_beta", 4}},
      {{"class", "rls"}, {"lambda_min", 0.1}, {"dim", 2}},
      {{"class", "ftrl"}, {"dim", 2}, {"schedules", {{{"kind", "sqrt_t"}, {"scale", 1.0}}}}},
  };
  for (const auto& j : specs) {
    const auto cls = class_from_json(j);
    const auto again = class_from_json(cls->to_json());
    EXPECT_EQ(cls->to_json(), again->to_json());
  }
  EXPECT_EQ(class_from_json(specs[0])->to_json()["k"], 4);
  EXPECT_EQ(class_from_json(specs[1])->to_json()["k"], "full");
  EXPECT_THROW(class_from_json({{"class", "nope"}}), ConfigError);
}
