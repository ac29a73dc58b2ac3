#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regretlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regret minimization against strategy classes: experiments and oracles"};
  app.require_subcommand(1);

  std::string path;
  auto* run = app.add_subcommand("run", "Run an experiment config; writes traces and aggregate.json");
  run->add_option("config", path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::optional<std::size_t> depth;
  auto* adm = app.add_subcommand("admissibility", "Check a relaxation's admissibility inequalities");
  adm->add_option("config", path, "admissibility config (JSON)")->required()->check(CLI::ExistingFile);
  adm->add_option("--exhaustive-depth", depth, "enumerate future signs exactly up to this depth");

  auto* rad = app.add_subcommand("rademacher", "Exact sequential Rademacher complexity of a tiny game");
  rad->add_option("spec", path, "tiny game spec (JSON)")->required()->check(CLI::ExistingFile);

  auto* mm = app.add_subcommand("minimax", "Minimax value of a tiny game by backward induction");
  mm->add_option("spec", path, "tiny game spec (JSON)")->required()->check(CLI::ExistingFile);

  auto* rf = app.add_subcommand("ratefit", "Fit regret ~ T^exponent to a horizon,regret CSV");
  rf->add_option("csv", path, "CSV file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : regretlab::cli::kExitError;
  }

  namespace c = regretlab::cli;
  if (*run) return c::run(path, std::cout, std::cerr);
  if (*adm) return c::admissibility(path, depth, std::cout, std::cerr);
  if (*rad) return c::rademacher(path, std::cout, std::cerr);
  if (*mm) return c::minimax(path, std::cout, std::cerr);
  if (*rf) return c::ratefit(path, std::cout, std::cerr);
  return c::kExitError;
}
