#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpca/data.h"
#include "rpca/loss.h"
#include "rpca/solver.h"

namespace rpca::cli {

inline constexpr int kSchemaVersion = 1;

enum class DataKind { kSynthetic, kMovieLens, kJester };

struct DataConfig {
  DataKind kind = DataKind::kSynthetic;
  // Synthetic instance; the seed is filled in per trial.
  SyntheticSpec synthetic;
  // Rating data.
  std::string path;
  MovieLensFormat format = MovieLensFormat::kTab100k;
  int max_users = 0;
  double sampling_ratio = 0.25;
  SamplingScheme scheme = SamplingScheme::kNonuniform;
  SamplingWeights weights = SamplingWeights::kCounts;
};

enum class SBoxKind { kSymmetric, kZero, kFree, kExplicit };

struct ProblemConfig {
  DataConfig data;
  LossKind loss = LossKind::squared();
  int d = 10;
  double beta = 1.0;
  std::optional<double> lambda;
  std::optional<double> tau;
  // Defaults: max |M| on the observed entries (synthetic) or the largest
  // rating magnitude (rating data).
  std::optional<double> a1;
  std::optional<double> a2;
  SBoxKind s_box = SBoxKind::kSymmetric;  // kSymmetric is [-a1, a1]
  double s_lower = 0.0;                   // kExplicit only
  double s_upper = 0.0;
};

enum class Algorithm { kJapg, kAjapg };
enum class JapgRegularizer { kExact, kRelaxed };

struct SolverBlock {
  Algorithm algorithm = Algorithm::kAjapg;
  JapgRegularizer japg_regularizer = JapgRegularizer::kExact;
  SolverConfig config;
  int k_max = 10;
  std::optional<double> r;
  std::optional<double> s;
  std::optional<double> r_start;
  std::optional<double> s_start;
  std::optional<int> freeze_r;  // K
  std::optional<int> freeze_s;  // K tilde
};

struct RunBlock {
  int trials = 1;
  std::uint64_t seed = 0;
};

// One swept parameter; every combination of the listed values is a point.
struct SweepAxis {
  std::string field;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  SolverBlock solver;
  RunBlock run;
  std::vector<SweepAxis> sweep;
};

// Fields accepted by sweep axes.
const std::vector<std::string>& sweepable_fields();

// Parses a config or a run manifest (whose "config" member is used). Relative
// data paths are resolved against `base_dir`. Unknown keys, wrong types and
// out-of-range values throw std::invalid_argument naming the key.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved JSON text (every field explicit), parseable by parse_config.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

// A sweep point: the base config with the axis values applied.
struct Point {
  int index = 0;
  std::string label;
  ExperimentConfig config;
};
std::vector<Point> expand_points(const ExperimentConfig& config);

std::string method_name(const ExperimentConfig& config);
std::string point_label(const ExperimentConfig& config);

}  // namespace rpca::cli
