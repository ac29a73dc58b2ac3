#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regretlab/cli.hpp"
#include "regretlab/regretlab.hpp"

using namespace regretlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("regretlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json small_config(const fs::path& out) {
  return {{"learner", {{"algorithm", "gd"}, {"k", 2}}},
          {"class", {{"class", "ar"}, {"k", 2}, {"p", 2}, {"radius", 1.0}}},
          {"adversary", {{"kind", "greedy_adaptive"}}},
          {"loss", "linear"},
          {"horizons", {32}},
          {"seeds", {4}},
          {"output_dir", out.string()}};
}

}  // namespace

TEST(Greedy, Examples) {
  const std::vector<Vec> pm{{1.0}, {-1.0}};
  EXPECT_EQ(greedy_adversary_step({0.3}, LossSpec::linear(), pm), 0u);
  EXPECT_EQ(greedy_adversary_step({0.0}, LossSpec::linear(), pm), 0u);
  EXPECT_EQ(greedy_adversary_step({-0.3}, LossSpec::linear(), pm), 1u);
  const std::vector<Vec> bin{{0.0}, {1.0}};
  EXPECT_EQ(greedy_adversary_step({0.7}, LossSpec::absolute(), bin), 0u);
  EXPECT_EQ(greedy_adversary_step({0.5}, LossSpec::absolute(), bin), 0u);
}

TEST(RateFit, Examples) {
  auto f = rate_fit({{64, 8}, {256, 16}, {1024, 32}});
  EXPECT_NEAR(f.exponent, 0.5, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  f = rate_fit({{64, 3}, {256, 3}, {1024, 3}});
  EXPECT_NEAR(f.exponent, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
  f = rate_fit({{10, 10}, {100, 100}, {1000, 1000}});
  EXPECT_NEAR(f.exponent, 1.0, 1e-12);
  // Non-positive regret is floored at 1e-9 instead of producing NaN.
  f = rate_fit({{10, -1}, {100, 1}, {1000, 1}});
  EXPECT_TRUE(std::isfinite(f.exponent));
  EXPECT_THROW(rate_fit({{10, 1}, {10, 2}, {100, 3}}), ParameterError);
  EXPECT_THROW(rate_fit({{10, 1}, {100, 2}}), ParameterError);
}

TEST(Experiment, OneHorizonOneSeedWritesOneTrace) {
  const fs::path out = scratch("one");
  run_experiment(ExperimentConfig::from_json(small_config(out)));
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(out)) traces += e.path().extension() == ".csv";
  EXPECT_EQ(traces, 1u);
  EXPECT_TRUE(fs::exists(out / "trace_T32_seed4.csv"));
  const auto agg = nlohmann::json::parse(slurp(out / "aggregate.json"));
  EXPECT_EQ(agg["horizons"].size(), 1u);
  EXPECT_EQ(agg["horizons"][0]["n_seeds"], 1);
  EXPECT_TRUE(agg["rate_fit"].is_null());
}

TEST(Experiment, RerunIsByteIdentical) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  auto cfg = small_config(a);
  cfg["learner"] = {{"algorithm", "b1_playout"}};
  cfg["class"] = {{"class", "ar"}, {"k", "full"}, {"p", 1}};
  cfg["horizons"] = {16, 32, 64};
  cfg["seeds"] = {{"start", 0}, {"count", 3}};
  run_experiment(ExperimentConfig::from_json(cfg));
  cfg["output_dir"] = b.string();
  run_experiment(ExperimentConfig::from_json(cfg));
  EXPECT_EQ(slurp(a / "aggregate.json"), slurp(b / "aggregate.json"));
  EXPECT_EQ(slurp(a / "trace_T64_seed2.csv"), slurp(b / "trace_T64_seed2.csv"));
}

TEST(Experiment, AggregateIgnoresSeedOrder) {
  auto cfg = small_config("");
  cfg["output_dir"] = "";
  cfg["adversary"] = {{"kind", "iid"}, {"dist", "signs"}};
  cfg["horizons"] = {16, 32, 64};
  cfg["seeds"] = {0, 1, 2, 3, 4};
  const auto a = run_experiment(ExperimentConfig::from_json(cfg)).aggregate_json();
  cfg["seeds"] = {3, 0, 4, 2, 1};
  const auto b = run_experiment(ExperimentConfig::from_json(cfg)).aggregate_json();
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Experiment, ConfigValidation) {
  auto cfg = small_config("");
  cfg["horizons"] = {64, 32};
  EXPECT_THROW(ExperimentConfig::from_json(cfg), ConfigError);
  cfg["horizons"] = {32};
  cfg["adversary"] = {{"kind", "fixed_sequence"}, {"sequence", {1, -1}}};
  try {
    run_experiment(ExperimentConfig::from_json(cfg));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("horizon 32, seed 4"), std::string::npos) << e.what();
  }
}

TEST(Experiment, SupervisedRlsWithExperts) {
  const nlohmann::json cfg = {{"learner", {{"algorithm", "exp_weights"}}},
                              {"class", {{"class", "rls"}, {"lambda_min", 0.1}, {"dim", 2}, {"lambda_points", 3}, {"w0_points", 3}}},
                              {"adversary", {{"kind", "iid"}, {"dist", "linear_noise"}, {"side_dim", 2}, {"noise", 0.2}}},
                              {"loss", "squared"},
                              {"outcome_space", {{"kind", "signed_scalar"}}},
                              {"side_dim", 2},
                              {"horizons", {16, 32, 64}},
                              {"seeds", {0, 1}}};
  const auto r = run_experiment(ExperimentConfig::from_json(cfg));
  ASSERT_TRUE(r.fit.has_value());
  for (const auto& run : r.runs) EXPECT_TRUE(std::isfinite(run.report.regret));
}

TEST(LqConstrained, PrefixNormsStayWithinBudget) {
  for (double q : {1.5, 2.0, 3.0, kInf}) {
    const double beta = 0.25;
    const std::size_t T = 256;
    LqConstrainedAdversary adv(std::make_unique<GreedyAdversary>(LossSpec::linear(), std::vector<Vec>{{1.0}, {-1.0}}), q,
                               beta);
    MDLearner learner(0, 1.5, beta);
    const GameTrace tr = run_game(learner, adv, {T, LossSpec::linear(), OutcomeSpace::signed_scalar(), 0, 1});
    Vec mags;
    for (const auto& r : tr.rounds) {
      mags.push_back(std::abs(r.outcome[0]));
      EXPECT_LE(lp_norm(mags, q), std::pow(static_cast<double>(T), beta) * (1 + 1e-9));
    }
    if (!std::isinf(q)) {
      EXPECT_GT(adv.rescaled(), 0u);
    }
  }
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  std::ostringstream out, err;
  const std::string src = REGRETLAB_SOURCE_DIR;

  EXPECT_EQ(cli::admissibility(src + "/configs/admissibility_zero.json", std::nullopt, out, err), cli::kExitAssertion);
  EXPECT_EQ(cli::minimax(src + "/configs/tiny_game.json", out, err), cli::kExitOk);
  EXPECT_EQ(cli::rademacher(src + "/configs/tiny_game.json", out, err), cli::kExitOk);
  EXPECT_EQ(cli::run((dir / "missing.json").string(), out, err), cli::kExitError);

  out.str("");
  EXPECT_EQ(cli::ratefit(src + "/configs/ratefit_example.csv", out, err), cli::kExitOk);
  EXPECT_NEAR(nlohmann::json::parse(out.str())["exponent"].get<double>(), 0.5, 1e-12);

  std::ofstream(dir / "b1.json") << nlohmann::json{{"relaxation", "b1"}, {"T", 3}}.dump();
  out.str("");
  EXPECT_EQ(cli::admissibility((dir / "b1.json").string(), std::size_t{12}, out, err), cli::kExitOk);
  EXPECT_TRUE(nlohmann::json::parse(out.str())["pass"].get<bool>());

  const auto cfg = small_config(dir / "run");
  std::ofstream(dir / "run.json") << cfg.dump();
  EXPECT_EQ(cli::run((dir / "run.json").string(), out, err), cli::kExitOk);
}
