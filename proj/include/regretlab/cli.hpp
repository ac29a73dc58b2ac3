#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "regretlab/bench.hpp"
#include "regretlab/oracle.hpp"
#include "regretlab/relaxations.hpp"

namespace regretlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAssertion = 2;

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Runs `body`, mapping failures to exit codes.
template <class F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const AssertionFailure& e) {
    err << "assertion failed: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const ExperimentResult r = run_experiment(ExperimentConfig::from_json(read_json(config_path)));
        out << r.aggregate_json().dump(2) << '\n';
        return kExitOk;
      },
      err);
}

struct AdmissibilitySetup {
  std::unique_ptr<Relaxation> relaxation;
  std::unique_ptr<StrategyClass> cls;
  std::unique_ptr<StrategyClass> secondary;
  LossSpec loss;
  AdmissibilityOptions options;
};

/// {"relaxation": "b1" | "b1_gaussian" | "beta" | "beta_map_form" | "zero", "T": 5, "samples": 20000,
///  "seed": 1, "exhaustive_depth": 12, "prefixes": "exhaustive" | N,
///  "a_max": 16, "c_beta": 4, "tol_sigma": 3, "abs_tol": 1e-3,
///  "final_sequences": [[1, 1, 1]]}
inline AdmissibilitySetup admissibility_setup(const nlohmann::json& j, std::optional<std::size_t> exhaustive_depth) {
  AdmissibilitySetup s;
  const std::string kind = j.at("relaxation").get<std::string>();
  const std::size_t T = j.at("T").get<std::size_t>();
  McControls mc;
  mc.samples = j.value("samples", std::size_t{2000});
  mc.seed = j.value("seed", std::uint64_t{0});
  mc.exhaustive_depth = exhaustive_depth ? *exhaustive_depth : j.value("exhaustive_depth", mc.exhaustive_depth);
  AdmissibilityOptions& o = s.options;
  o.tol_sigma = j.value("tol_sigma", 3.0);
  o.abs_tol = j.value("abs_tol", 1e-3);
  o.seed = mc.seed;
  if (j.contains("prefixes") && j["prefixes"].is_number()) o.sampled_prefixes = j["prefixes"].get<std::size_t>();
  if (j.contains("final_sequences"))
    for (const auto& seq : j["final_sequences"]) o.terminals.push_back(seq.get<Vec>());

  if (kind == "b1" || kind == "b1_gaussian" || kind == "zero") {
    if (kind == "b1_gaussian") mc.noise = NoiseKind::kGaussian;
    if (kind == "zero")
      s.relaxation = std::make_unique<ZeroRelaxation>(T);
    else
      s.relaxation = std::make_unique<B1Relaxation>(T, mc);
    s.cls = std::make_unique<ARClass>(0, ThetaBall{1.0, 1.0});
    s.loss = LossSpec::linear();
    o.outcome_set = {-1.0, 1.0};
    o.q_lo = -1.0;
    o.q_hi = 1.0;
  } else if (kind == "beta" || kind == "beta_map_form") {
    const BetaBox box{j.value("a_max", static_cast<double>(T)), j.value("c_beta", 4.0)};
    if (kind == "beta") {
      s.relaxation = std::make_unique<BetaRelaxation>(T, box, mc);
      s.cls = std::make_unique<BetaRelaxationClass>(box);
      s.secondary = std::make_unique<BetaMAPClass>(box);
    } else {
      s.relaxation = std::make_unique<BetaMapFormRelaxation>(T, box, mc);
      s.cls = std::make_unique<BetaMAPClass>(box);
    }
    s.loss = LossSpec::absolute();
    o.outcome_set = {0.0, 1.0};
    o.q_lo = 0.0;
    o.q_hi = 1.0;
  } else {
    throw ConfigError("unknown relaxation: " + kind);
  }
  return s;
}

/// Exit code 2 when the relaxation fails the check.
inline int admissibility(const std::string& config_path, std::optional<std::size_t> exhaustive_depth,
                         std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const AdmissibilitySetup s = admissibility_setup(read_json(config_path), exhaustive_depth);
        const AdmissibilityReport r = admissibility_check(*s.relaxation, s.loss, *s.cls, s.options, s.secondary.get());
        out << to_json(r).dump(2) << '\n';
        if (!r.pass) throw AssertionFailure("relaxation '" + r.relaxation + "' is not admissible (max violation " +
                                            std::to_string(r.max_violation) + ")");
        return kExitOk;
      },
      err);
}

inline int rademacher(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const TinyGameSpec spec = tiny_game_from_json(read_json(spec_path));
        out << nlohmann::json{{"seq_rademacher", seq_rademacher_exact(spec)}, {"exhaustive", true}}.dump(2) << '\n';
        return kExitOk;
      },
      err);
}

inline int minimax(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const TinyGameSpec spec = tiny_game_from_json(read_json(spec_path));
        out << nlohmann::json{{"minimax_value", minimax_value(spec)}, {"exhaustive", true}}.dump(2) << '\n';
        return kExitOk;
      },
      err);
}

/// CSV with columns horizon,regret (a header line is skipped).
inline std::vector<std::pair<double, double>> read_rate_csv(std::istream& in) {
  std::vector<std::pair<double, double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) throw ConfigError("ratefit: malformed line: " + line);
    try {
      pts.emplace_back(std::stod(a), std::stod(b));
    } catch (const std::invalid_argument&) {
      if (!pts.empty()) throw ConfigError("ratefit: non-numeric line: " + line);
    }
  }
  return pts;
}

inline int ratefit(const std::string& csv_path, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        std::ifstream in(csv_path);
        if (!in) throw ConfigError("cannot open " + csv_path);
        out << to_json(rate_fit(read_rate_csv(in))).dump(2) << '\n';
        return kExitOk;
      },
      err);
}

}  // namespace regretlab::cli
