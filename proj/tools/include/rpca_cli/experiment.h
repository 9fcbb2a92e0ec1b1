#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpca/data.h"
#include "rpca/model.h"
#include "rpca/observed_matrix.h"
#include "rpca/solver.h"
#include "rpca_cli/config.h"

namespace rpca::cli {

// Rating data is loaded once per experiment and shared by every trial.
struct DatasetCache {
  std::optional<RatingDataset> ratings;
};
DatasetCache load_dataset(const ExperimentConfig& config);

// Everything a trial needs before the initial point is computed.
struct TrialProblem {
  explicit TrialProblem(ObservedMatrix train_data) : train(std::move(train_data)) {}

  ObservedMatrix train;
  std::optional<ObservedMatrix> test;
  std::optional<Matrix> z_true;
  double rating_min = 0.0;
  double rating_max = 0.0;
  ProblemDims dims;
  DerivedParams params;  // with the config's overrides applied and validated
  ProblemSpec problem;
};

// Seed streams used by the runner on top of the data generator's own.
inline constexpr std::uint64_t kMaskStream = 5;
inline constexpr std::uint64_t kInitStream = 6;

TrialProblem resolve_trial(const ExperimentConfig& config, const DatasetCache& cache,
                           std::uint64_t seed);

struct TrialOutcome {
  int point = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string stop;
  int iterations = 0;
  std::optional<double> rse;
  std::optional<double> nmae;
  int rank = 0;
  std::size_t sparsity = 0;
  double objective = 0.0;
  double relaxed_objective = 0.0;
  bool consistency_ok = false;
  bool isolation_ok = false;
  double kkt_residual = 0.0;
  double gradient_norm = 0.0;
  double init_seconds = 0.0;
  double solve_seconds = 0.0;
};

// Runs one trial and returns the solution with its outcome; timing covers
// the initial point and the solve.
struct TrialRun {
  SolveResult result;
  TrialOutcome outcome;
};
TrialRun run_trial(const ExperimentConfig& config, const DatasetCache& cache, int point, int trial,
                   std::uint64_t seed);

struct RunOptions {
  std::filesystem::path out_dir;
  int trials_parallel = 1;
  std::optional<std::uint64_t> seed;       // replaces run.seed
  std::optional<std::string> data_path;  // replaces problem.data.path
};

// Applies the command-line overrides to a parsed config.
ExperimentConfig apply_overrides(ExperimentConfig config, const RunOptions& options);

// Writes manifest.json, then per trial <stem>.trace.jsonl and
// <stem>.result.json, then summary.csv (aggregated from the trace files) and
// timing.csv. Returns the process exit code.
int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

// Summary CSV text rebuilt from manifest.json and the trace files in `out_dir`.
std::string aggregate_summary(const std::filesystem::path& out_dir);

// Re-aggregates summary.csv in place and prints it.
int report(const std::filesystem::path& out_dir, std::ostream& out);

// Prints the resolved parameters of every sweep point and the invariant
// checks. Returns 0 when valid, 1 with the first violation named otherwise.
int validate(const ExperimentConfig& config, std::ostream& out);

// Writes `contents` to `path` through a temporary file and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

std::string format_number(double value);

}  // namespace rpca::cli
