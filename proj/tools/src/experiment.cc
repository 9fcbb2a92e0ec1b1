#include "rpca_cli/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "rpca/init.h"
#include "rpca/metrics.h"
#include "rpca/stationarity.h"
#include "rpca/trace_io.h"
#include "rpca/version.h"

namespace rpca::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string trial_stem(int point, int trial, std::size_t n_points) {
  char buf[32];
  if (n_points > 1) {
    std::snprintf(buf, sizeof(buf), "p%02d_trial_%03d", point, trial);
  } else {
    std::snprintf(buf, sizeof(buf), "trial_%03d", trial);
  }
  return buf;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json outcome_json(const TrialOutcome& o, bool include_timing) {
  json j;
  j["type"] = "evaluation";
  j["point"] = o.point;
  j["trial"] = o.trial;
  j["seed"] = o.seed;
  j["stop"] = o.stop;
  j["iterations"] = o.iterations;
  j["rse"] = optional_json(o.rse);
  j["nmae"] = optional_json(o.nmae);
  j["rank"] = o.rank;
  j["sparsity"] = o.sparsity;
  j["objective"] = o.objective;
  j["relaxed_objective"] = o.relaxed_objective;
  j["consistency_ok"] = o.consistency_ok;
  j["isolation_ok"] = o.isolation_ok;
  j["kkt_residual"] = o.kkt_residual;
  j["gradient_norm"] = o.gradient_norm;
  if (include_timing) {
    j["init_seconds"] = o.init_seconds;
    j["solve_seconds"] = o.solve_seconds;
    j["total_seconds"] = o.init_seconds + o.solve_seconds;
  }
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Splits a trace file into the solver trace (validated) and the evaluation
// record that follows it.
json read_evaluation(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::string trace_text;
  std::optional<json> evaluation;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("type", "") == "evaluation") {
      if (evaluation) throw std::runtime_error(path.string() + ": two evaluation records");
      evaluation = std::move(j);
    } else {
      if (evaluation) throw std::runtime_error(path.string() + ": records after the evaluation");
      trace_text += line + "\n";
    }
  }
  if (!evaluation) throw std::runtime_error(path.string() + ": no evaluation record");
  std::istringstream trace_in(trace_text);
  const RunTrace trace = read_trace(trace_in);
  if (static_cast<int>(trace.iterations.size()) != evaluation->at("iterations").get<int>()) {
    throw std::runtime_error(path.string() + ": iteration count disagrees with the trace");
  }
  if (!trace.iterations.empty() &&
      trace.iterations.back().nnzc_x != evaluation->at("rank").get<int>()) {
    throw std::runtime_error(path.string() + ": rank disagrees with the trace");
  }
  return *evaluation;
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

void print_schedule(std::ostream& out, const char* name, const ThresholdSchedule& s, int freeze) {
  out << "  " << name << " schedule: start " << format_number(s.start) << ", plateau k <= "
      << s.plateau << ", floor " << format_number(s.floor) << " from k = " << freeze << "\n";
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DatasetCache load_dataset(const ExperimentConfig& config) {
  DatasetCache cache;
  const DataConfig& d = config.problem.data;
  if (d.kind == DataKind::kMovieLens) {
    cache.ratings = load_movielens(d.path, d.format);
  } else if (d.kind == DataKind::kJester) {
    cache.ratings = load_jester(d.path, JesterOptions{d.max_users, config.run.seed});
  }
  return cache;
}

TrialProblem resolve_trial(const ExperimentConfig& config, const DatasetCache& cache,
                           std::uint64_t seed) {
  const ProblemConfig& pc = config.problem;
  const SolverBlock& sb = config.solver;
  double default_a = 0.0;
  std::optional<ObservedMatrix> test;
  std::optional<Matrix> z_true;
  double rating_min = 0.0;
  double rating_max = 0.0;
  auto build_train = [&]() -> ObservedMatrix {
    if (pc.data.kind == DataKind::kSynthetic) {
      SyntheticSpec spec = pc.data.synthetic;
      spec.seed = seed;
      SyntheticInstance inst = generate_synthetic(spec);
      z_true = std::move(inst.truth.z_low);
      default_a = inst.observed.max_abs_value();
      return std::move(inst.observed);
    }
    if (!cache.ratings) throw std::logic_error("rating data was not loaded");
    const RatingDataset& ds = *cache.ratings;
    MaskSplit split = sample_mask(ds.observed, pc.data.sampling_ratio, pc.data.scheme,
                                  derive_seed(seed, kMaskStream), pc.data.weights);
    test = std::move(split.test);
    rating_min = ds.rating_min;
    rating_max = ds.rating_max;
    default_a = std::max(std::abs(ds.rating_min), std::abs(ds.rating_max));
    return std::move(split.train);
  };
  TrialProblem tp(build_train());
  tp.test = std::move(test);
  tp.z_true = std::move(z_true);
  tp.rating_min = rating_min;
  tp.rating_max = rating_max;
  if (!(default_a > 0.0) && (!pc.a1 || !pc.a2)) {
    throw std::invalid_argument("observed data are all zero: set problem.a1 and problem.a2");
  }
  const double a1 = pc.a1.value_or(default_a);
  const double a2 = pc.a2.value_or(default_a);

  tp.dims = ProblemDims{tp.train.rows(), tp.train.cols(), pc.d};
  tp.params = derive_params(tp.dims, pc.beta, a1, a2, pc.lambda, sb.k_max);
  RelaxationParams& rel = tp.params.relaxation;
  if (sb.r) {
    rel.r = sb.r;
    rel.r_schedule.floor = *sb.r;
  }
  if (sb.r_start) rel.r_schedule.start = *sb.r_start;
  if (sb.freeze_r) rel.r_schedule.freeze_at = sb.freeze_r;
  if (sb.s) {
    rel.s = sb.s;
    rel.s_schedule.floor = *sb.s;
  }
  if (sb.s_start) rel.s_schedule.start = *sb.s_start;
  if (sb.freeze_s) rel.s_schedule.freeze_at = sb.freeze_s;
  if (pc.tau) tp.params.tau = *pc.tau;
  validate_relaxation(rel, tp.params.penalties, tp.params.bounds, tp.params.tau);

  ConstraintSpec constraints;
  constraints.tau = tp.params.tau;
  switch (pc.s_box) {
    case SBoxKind::kSymmetric:
      constraints.s_lower = -a1;
      constraints.s_upper = a1;
      break;
    case SBoxKind::kZero:
      constraints.s_lower = 0.0;
      constraints.s_upper = 0.0;
      break;
    case SBoxKind::kFree:
      break;
    case SBoxKind::kExplicit:
      constraints.s_lower = pc.s_lower;
      constraints.s_upper = pc.s_upper;
      break;
  }
  constraints.validate();
  tp.problem = ProblemSpec{tp.params.penalties, constraints, pc.loss};
  return tp;
}

TrialRun run_trial(const ExperimentConfig& config, const DatasetCache& cache, int point, int trial,
                   std::uint64_t seed) {
  TrialProblem tp = resolve_trial(config, cache, seed);
  const RelaxationParams& rel = tp.params.relaxation;

  const auto t0 = Clock::now();
  FactorState init = default_init(tp.train, tp.dims, tp.problem.constraints,
                                  derive_seed(seed, kInitStream));
  const auto t1 = Clock::now();
  TrialRun run;
  if (config.solver.algorithm == Algorithm::kAjapg) {
    run.result = solve_ajapg(tp.train, tp.problem, rel, config.solver.config, std::move(init));
  } else {
    Regularizer reg = ExactL0{};
    if (config.solver.japg_regularizer == JapgRegularizer::kRelaxed) {
      reg = FixedCappedL1{rel.r.value_or(1.0), rel.s.value_or(1.0)};
    }
    run.result = solve_japg(tp.train, tp.problem, reg, config.solver.config, std::move(init));
  }
  const auto t2 = Clock::now();

  TrialOutcome& o = run.outcome;
  const FactorState& state = run.result.state;
  o.point = point;
  o.trial = trial;
  o.seed = seed;
  o.stop = to_string(run.result.trace.stop);
  o.iterations = static_cast<int>(run.result.trace.iterations.size());
  if (tp.z_true) o.rse = rse(state.x, state.y, *tp.z_true);
  if (tp.test) {
    o.nmae = nmae(predict_on(state.x, state.y, *tp.test), *tp.test, tp.rating_min, tp.rating_max);
  }
  const StationarityReport rep =
      certify(state, tp.train, tp.problem.penalties, tp.problem.constraints, rel.r.value_or(1.0),
              rel.s.value_or(1.0), tp.problem.loss);
  o.rank = rep.nnzc_x;
  o.sparsity = rep.nnz_s;
  o.objective = rep.objective;
  o.relaxed_objective = rep.relaxed_objective;
  o.consistency_ok = rep.consistency_ok;
  o.isolation_ok = rep.isolation_ok;
  o.kkt_residual = rep.kkt_residual;
  o.gradient_norm = rep.gradient_norm;
  o.init_seconds = std::chrono::duration<double>(t1 - t0).count();
  o.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  return run;
}

ExperimentConfig apply_overrides(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.run.seed = *options.seed;
  if (options.data_path) {
    if (config.problem.data.kind == DataKind::kSynthetic) {
      throw std::invalid_argument("--data given but the experiment uses synthetic data");
    }
    config.problem.data.path = *options.data_path;
  }
  return config;
}

int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  namespace fs = std::filesystem;
  const std::vector<Point> points = expand_points(config);
  fs::create_directories(options.out_dir);
  DatasetCache cache = load_dataset(config);

  // The manifest goes first so that partial results can be interpreted.
  json manifest;
  manifest["kind"] = "rpca-manifest";
  manifest["schema_version"] = kSchemaVersion;
  manifest["library_version"] = kVersion;
  manifest["config"] = json::parse(config_to_json(config));
  json point_list = json::array();
  for (const Point& p : points) {
    json pj;
    pj["index"] = p.index;
    pj["label"] = p.label;
    pj["method"] = method_name(p.config);
    pj["data"] = p.config.problem.data.kind == DataKind::kSynthetic ? "synthetic" : "ratings";
    json trials = json::array();
    for (int t = 0; t < config.run.trials; ++t) {
      const std::string stem = trial_stem(p.index, t, points.size());
      trials.push_back({{"trial", t},
                        {"seed", config.run.seed + static_cast<std::uint64_t>(t)},
                        {"trace", stem + ".trace.jsonl"},
                        {"result", stem + ".result.json"}});
    }
    pj["trials"] = trials;
    point_list.push_back(pj);
  }
  manifest["points"] = point_list;
  write_atomically(options.out_dir / "manifest.json", manifest.dump(2) + "\n");

  struct Task {
    int point;
    int trial;
  };
  std::vector<Task> tasks;
  for (const Point& p : points) {
    for (int t = 0; t < config.run.trials; ++t) tasks.push_back({p.index, t});
  }
  std::vector<std::optional<TrialOutcome>> outcomes(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task task = tasks[i];
      const Point& p = points[task.point];
      const std::uint64_t seed = config.run.seed + static_cast<std::uint64_t>(task.trial);
      const std::string stem = trial_stem(task.point, task.trial, points.size());
      try {
        TrialRun run = run_trial(p.config, cache, task.point, task.trial, seed);
        std::ostringstream trace;
        write_trace(trace, run.result.trace, true);
        trace << outcome_json(run.outcome, false).dump() << "\n";
        write_atomically(options.out_dir / (stem + ".trace.jsonl"), trace.str());
        json result = outcome_json(run.outcome, true);
        result.erase("type");
        result["label"] = p.label;
        result["method"] = method_name(p.config);
        write_atomically(options.out_dir / (stem + ".result.json"), result.dump(2) + "\n");
        std::lock_guard<std::mutex> lock(log_mutex);
        const TrialOutcome& o = run.outcome;
        log << "[" << p.label << "] trial " << task.trial << " seed " << seed << ": " << o.stop
            << " after " << o.iterations << " iterations";
        if (o.rse) log << ", RSE " << format_number(*o.rse);
        if (o.nmae) log << ", NMAE " << format_number(*o.nmae);
        log << ", rank " << o.rank << ", " << format_number(o.init_seconds + o.solve_seconds)
            << " s\n";
        outcomes[i] = run.outcome;
      } catch (const std::exception& e) {
        errors[i] = e.what();
        std::lock_guard<std::mutex> lock(log_mutex);
        log << "[" << p.label << "] trial " << task.trial << " failed: " << e.what() << "\n";
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(options.trials_parallel, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  if (std::any_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); })) {
    log << "error: some trials failed; per-trial results written so far are kept in "
        << options.out_dir.string() << "\n";
    return 2;
  }

  write_atomically(options.out_dir / "summary.csv", aggregate_summary(options.out_dir));
  std::ostringstream timing;
  timing << "point,trial,init_seconds,solve_seconds,total_seconds\n";
  for (const Point& p : points) {
    std::vector<double> totals;
    for (const auto& o : outcomes) {
      if (!o || o->point != p.index) continue;
      const double total = o->init_seconds + o->solve_seconds;
      totals.push_back(total);
      timing << p.index << "," << o->trial << "," << format_number(o->init_seconds) << ","
             << format_number(o->solve_seconds) << "," << format_number(total) << "\n";
    }
    timing << p.index << ",mean,,," << format_number(mean(totals)) << "\n";
  }
  write_atomically(options.out_dir / "timing.csv", timing.str());
  return 0;
}

std::string aggregate_summary(const std::filesystem::path& out_dir) {
  const json manifest = json::parse(read_file(out_dir / "manifest.json"));
  if (manifest.value("kind", "") != "rpca-manifest") {
    throw std::runtime_error((out_dir / "manifest.json").string() + " is not a run manifest");
  }
  std::ostringstream csv;
  csv << "metric,size/SR,method,value\n";
  for (const json& p : manifest.at("points")) {
    const std::string label = p.at("label").get<std::string>();
    const std::string method = p.at("method").get<std::string>();
    const bool synthetic = p.at("data").get<std::string>() == "synthetic";
    std::vector<double> error, rank, sparsity, iterations;
    for (const json& t : p.at("trials")) {
      const json e = read_evaluation(out_dir / t.at("trace").get<std::string>());
      const json& metric = e.at(synthetic ? "rse" : "nmae");
      if (metric.is_null()) throw std::runtime_error("trace lacks the error metric");
      error.push_back(metric.get<double>());
      rank.push_back(e.at("rank").get<double>());
      sparsity.push_back(e.at("sparsity").get<double>());
      iterations.push_back(e.at("iterations").get<double>());
    }
    auto row = [&](const char* metric, const std::vector<double>& values) {
      csv << metric << "," << label << "," << method << "," << format_number(mean(values)) << "\n";
    };
    row(synthetic ? "RSE" : "NMAE", error);
    row("rank", rank);
    if (synthetic) row("sparsity", sparsity);
    row("iterations", iterations);
  }
  return csv.str();
}

int report(const std::filesystem::path& out_dir, std::ostream& out) {
  const std::string summary = aggregate_summary(out_dir);
  write_atomically(out_dir / "summary.csv", summary);
  out << summary;
  return 0;
}

int validate(const ExperimentConfig& config, std::ostream& out) {
  std::vector<Point> points;
  try {
    points = expand_points(config);
  } catch (const std::exception& e) {
    out << "INVALID: " << e.what() << "\n";
    return 1;
  }
  DatasetCache cache;
  try {
    cache = load_dataset(config);
  } catch (const std::exception& e) {
    out << "INVALID: cannot load data: " << e.what() << "\n";
    return 1;
  }
  for (const Point& p : points) {
    out << "[" << p.label << "] " << method_name(p.config) << "\n";
    std::optional<TrialProblem> resolved;
    try {
      resolved = resolve_trial(p.config, cache, config.run.seed);
      p.config.solver.config.validate();
    } catch (const std::exception& e) {
      out << "INVALID: " << e.what() << "\n";
      return 1;
    }
    const TrialProblem& tp = *resolved;
    const DerivedParams& dp = tp.params;
    const RelaxationParams& rel = dp.relaxation;
    out << "  m = " << tp.dims.m << ", n = " << tp.dims.n << ", d = " << tp.dims.d
        << ", |Omega| = " << tp.train.size() << "\n";
    out << "  lambda = " << format_number(dp.penalties.lambda)
        << (p.config.problem.lambda ? " (override)" : " (sqrt(max(m, n)) beta / 2)")
        << ", beta = " << format_number(dp.penalties.beta) << "\n";
    out << "  a1 = " << format_number(dp.bounds.a1) << ", a2 = " << format_number(dp.bounds.a2)
        << ", Delta = " << format_number(dp.bounds.delta) << "\n";
    out << "  L_X = " << format_number(dp.bounds.l_x) << ", L_Y = " << format_number(dp.bounds.l_y)
        << ", L_S = " << format_number(dp.bounds.l_s) << "\n";
    out << "  tau = " << format_number(dp.tau) << ", S box = ["
        << format_number(tp.problem.constraints.s_lower) << ", "
        << format_number(tp.problem.constraints.s_upper) << "]\n";
    if (rel.r) {
      out << "  r = " << format_number(*rel.r) << "\n";
      print_schedule(out, "r", rel.r_schedule, rel.freeze_r());
    } else {
      out << "  r disabled (lambda = 0)\n";
    }
    if (rel.s) {
      out << "  s = " << format_number(*rel.s) << "\n";
      print_schedule(out, "s", rel.s_schedule, rel.freeze_s());
    } else {
      out << "  s disabled (beta = 0)\n";
    }
    out << "  checks: dimensions, penalty weights, threshold bounds, schedules, S box, solver "
           "settings\n";
  }
  out << "OK\n";
  return 0;
}

}  // namespace rpca::cli
