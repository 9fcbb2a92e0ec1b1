#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rpca/version.h"
#include "rpca_cli/config.h"
#include "rpca_cli/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"Robust PCA and matrix completion experiments (JA-PG / AJA-PG)"};
  app.set_version_flag("--version", std::string(rpca::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int trials_parallel = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> data_path;

  CLI::App* run = app.add_subcommand("run", "Run an experiment and write its results");
  run->add_option("--config", config_path, "Experiment config or run manifest (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--trials-parallel", trials_parallel, "Trials to run concurrently")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed base (replaces run.seed)");
  run->add_option("--data", data_path, "Rating data file (replaces problem.data.path)");

  CLI::App* validate = app.add_subcommand("validate", "Print resolved parameters and checks");
  validate->add_option("--config", config_path, "Experiment config or run manifest (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  validate->add_option("--seed", seed, "Seed base (replaces run.seed)");
  validate->add_option("--data", data_path, "Rating data file (replaces problem.data.path)");

  CLI::App* report = app.add_subcommand("report", "Re-aggregate summary.csv from trace files");
  report->add_option("--out", out_dir, "Output directory of a previous run")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  rpca::cli::RunOptions options;
  options.out_dir = out_dir;
  options.trials_parallel = trials_parallel;
  options.seed = seed;
  options.data_path = data_path;

  if (report->parsed()) {
    try {
      return rpca::cli::report(out_dir, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  rpca::cli::ExperimentConfig config;
  try {
    config = rpca::cli::apply_overrides(rpca::cli::load_config(config_path), options);
  } catch (const std::exception& e) {
    if (validate->parsed()) {
      std::cout << "INVALID: " << e.what() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
  if (validate->parsed()) return rpca::cli::validate(config, std::cout);

  try {
    return rpca::cli::run_experiment(config, options, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
