#include "rpca_cli/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rpca::cli {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::invalid_argument(path + ": " + why);
}

// Reads the members of one JSON object and rejects any member left unread.
class Fields {
 public:
  Fields(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) fail(path_, "expected an object");
  }

  void mark(const std::string& key) { used_.insert(key); }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const {
    return object_.contains(key) && !object_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!object_.contains(key)) fail(child(key), "missing required key");
    return object_.at(key);
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(child(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    used_.insert(key);
    return has(key) ? number(key) : fallback;
  }
  std::optional<double> optional_number(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    used_.insert(key);
    return has(key) ? integer(key) : fallback;
  }
  std::optional<int> optional_int(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return static_cast<int>(integer(key));
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_boolean()) fail(child(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!used_.count(key)) fail(child(key), "unknown key");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E>
E choice(const std::string& path, const std::string& value,
         std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  fail(path, "unknown value \"" + value + "\" (expected one of " + allowed + ")");
}

int checked_int(const std::string& path, long long v, long long lo, long long hi) {
  if (v < lo || v > hi) {
    fail(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

const char* kind_name(DataKind k) {
  switch (k) {
    case DataKind::kSynthetic: return "synthetic";
    case DataKind::kMovieLens: return "movielens";
    case DataKind::kJester: return "jester";
  }
  return "";
}

std::string short_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

DataConfig parse_data(Fields f, const std::filesystem::path& base_dir) {
  DataConfig d;
  d.kind = choice(f.child("kind"), f.string("kind"),
                  {std::pair{"synthetic", DataKind::kSynthetic},
                   std::pair{"movielens", DataKind::kMovieLens},
                   std::pair{"jester", DataKind::kJester}});
  if (d.kind == DataKind::kSynthetic) {
    SyntheticSpec& s = d.synthetic;
    s.n = checked_int(f.child("n"), f.integer("n"), 1, 1 << 20);
    s.true_rank = checked_int(f.child("true_rank"), f.integer("true_rank"), 1, 1 << 20);
    s.corruption_fraction = f.number("corruption_fraction", s.corruption_fraction);
    s.corruption_magnitude = f.number("corruption_magnitude", s.corruption_magnitude);
    s.noise_factor = f.number("noise_factor", s.noise_factor);
    s.sampling_ratio = f.number("sampling_ratio", s.sampling_ratio);
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      fail(f.path(), e.what());
    }
  } else {
    std::filesystem::path p = f.string("path");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    d.path = p.lexically_normal().string();
    if (d.kind == DataKind::kMovieLens) {
      d.format = choice(f.child("format"), f.string("format", "tab_100k"),
                        {std::pair{"tab_100k", MovieLensFormat::kTab100k},
                         std::pair{"colon_1m", MovieLensFormat::kColon1m}});
    } else {
      d.max_users = checked_int(f.child("max_users"), f.integer("max_users", 0), 0, 1 << 30);
    }
    d.sampling_ratio = f.number("sampling_ratio");
    if (!(d.sampling_ratio > 0.0 && d.sampling_ratio < 1.0)) {
      fail(f.child("sampling_ratio"), "must lie in (0, 1)");
    }
    d.scheme = choice(f.child("scheme"), f.string("scheme", "nonuniform"),
                      {std::pair{"uniform", SamplingScheme::kUniform},
                       std::pair{"nonuniform", SamplingScheme::kNonuniform}});
    d.weights = choice(f.child("weights"), f.string("weights", "counts"),
                       {std::pair{"counts", SamplingWeights::kCounts},
                        std::pair{"index_tiers", SamplingWeights::kIndexTiers}});
  }
  f.finish();
  return d;
}

LossKind parse_loss(Fields f) {
  const std::string kind = f.string("kind");
  LossKind loss;
  if (kind == "squared") {
    loss = LossKind::squared();
  } else if (kind == "huber") {
    const double delta = f.number("delta");
    try {
      loss = LossKind::huber(delta);
    } catch (const std::invalid_argument& e) {
      fail(f.child("delta"), e.what());
    }
  } else {
    fail(f.child("kind"), "unknown value \"" + kind + "\" (expected squared or huber)");
  }
  f.finish();
  return loss;
}

ProblemConfig parse_problem(Fields f, const std::filesystem::path& base_dir) {
  ProblemConfig p;
  p.data = parse_data(Fields(f.raw("data"), f.child("data")), base_dir);
  if (f.has("loss")) p.loss = parse_loss(Fields(f.raw("loss"), f.child("loss")));
  f.mark("loss");
  p.d = checked_int(f.child("d"), f.integer("d"), 1, 1 << 20);
  p.beta = f.number("beta");
  if (p.beta < 0.0) fail(f.child("beta"), "must be nonnegative");
  p.lambda = f.optional_number("lambda");
  if (p.lambda && *p.lambda < 0.0) fail(f.child("lambda"), "must be nonnegative");
  p.tau = f.optional_number("tau");
  if (p.tau && !(*p.tau > 0.0)) fail(f.child("tau"), "must be positive");
  p.a1 = f.optional_number("a1");
  p.a2 = f.optional_number("a2");
  if (p.a1 && !(*p.a1 > 0.0)) fail(f.child("a1"), "must be positive");
  if (p.a2 && !(*p.a2 > 0.0)) fail(f.child("a2"), "must be positive");
  if (p.beta == 0.0 && !p.lambda) {
    fail(f.child("lambda"), "required when beta = 0 (the recipe derives lambda from beta)");
  }
  if (f.has("s_box")) {
    const json& box = f.raw("s_box");
    if (box.is_string()) {
      p.s_box = choice(f.child("s_box"), box.get<std::string>(),
                       {std::pair{"symmetric", SBoxKind::kSymmetric},
                        std::pair{"zero", SBoxKind::kZero}, std::pair{"free", SBoxKind::kFree}});
    } else if (box.is_array() && box.size() == 2 && box[0].is_number() && box[1].is_number()) {
      p.s_box = SBoxKind::kExplicit;
      p.s_lower = box[0].get<double>();
      p.s_upper = box[1].get<double>();
      if (!(p.s_lower <= 0.0 && p.s_upper >= 0.0)) {
        fail(f.child("s_box"), "the box must contain zero");
      }
    } else {
      fail(f.child("s_box"), "expected symmetric, zero, free or [lower, upper]");
    }
  }
  f.mark("s_box");
  f.finish();
  return p;
}

SolverBlock parse_solver(Fields f) {
  SolverBlock s;
  s.algorithm = choice(f.child("algorithm"), f.string("algorithm", "ajapg"),
                       {std::pair{"japg", Algorithm::kJapg}, std::pair{"ajapg", Algorithm::kAjapg}});
  s.japg_regularizer =
      choice(f.child("japg_regularizer"), f.string("japg_regularizer", "exact"),
             {std::pair{"exact", JapgRegularizer::kExact},
              std::pair{"relaxed", JapgRegularizer::kRelaxed}});
  s.k_max = checked_int(f.child("k_max"), f.integer("k_max", s.k_max), 0, 1 << 30);
  s.r = f.optional_number("r");
  s.s = f.optional_number("s");
  s.r_start = f.optional_number("r_start");
  s.s_start = f.optional_number("s_start");
  s.freeze_r = f.optional_int("K");
  s.freeze_s = f.optional_int("K_tilde");
  if (s.freeze_r && *s.freeze_r < 0) fail(f.child("K"), "must be nonnegative");
  if (s.freeze_s && *s.freeze_s < 0) fail(f.child("K_tilde"), "must be nonnegative");

  SolverConfig& c = s.config;
  c.max_iters = checked_int(f.child("max_iters"), f.integer("max_iters", c.max_iters), 0, 1 << 30);
  c.rel_tol = f.number("rel_tol", c.rel_tol);
  c.iota_lo = f.number("iota_lo", c.iota_lo);
  c.iota_hi = f.number("iota_hi", c.iota_hi);
  c.varrho = f.number("varrho", c.varrho);
  c.base_divisor = f.number("base_divisor", c.base_divisor);
  c.c_min = f.number("c_min", c.c_min);
  c.c_max = f.number("c_max", c.c_max);
  c.c1 = f.number("c1", c.c1);
  c.c2 = f.number("c2", c.c2);
  c.max_backtracks =
      checked_int(f.child("max_backtracks"), f.integer("max_backtracks", c.max_backtracks), 1,
                  1 << 20);
  c.check_invariants = f.boolean("check_invariants", c.check_invariants);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    fail(f.path(), e.what());
  }
  f.finish();
  return s;
}

RunBlock parse_run(Fields f) {
  RunBlock r;
  r.trials = checked_int(f.child("trials"), f.integer("trials", r.trials), 1, 1 << 20);
  const long long seed = f.integer("seed", 0);
  if (seed < 0) fail(f.child("seed"), "must be nonnegative");
  r.seed = static_cast<std::uint64_t>(seed);
  f.finish();
  return r;
}

std::vector<SweepAxis> parse_sweep(const json& array, const std::string& path) {
  if (!array.is_array()) fail(path, "expected an array of {field, values}");
  std::vector<SweepAxis> axes;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < array.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    Fields f(array[i], item);
    SweepAxis axis;
    axis.field = f.string("field");
    const auto& allowed = sweepable_fields();
    if (std::find(allowed.begin(), allowed.end(), axis.field) == allowed.end()) {
      fail(f.child("field"), "cannot sweep \"" + axis.field + "\"");
    }
    if (!seen.insert(axis.field).second) fail(f.child("field"), "swept twice");
    const json& values = f.raw("values");
    if (!values.is_array() || values.empty()) fail(f.child("values"), "expected a non-empty array");
    for (const json& v : values) {
      if (!v.is_number()) fail(f.child("values"), "expected numbers");
      axis.values.push_back(v.get<double>());
    }
    f.finish();
    axes.push_back(std::move(axis));
  }
  return axes;
}

void apply_axis(ExperimentConfig& c, const std::string& field, double v) {
  auto as_int = [&](double x) {
    if (x != std::floor(x)) throw std::invalid_argument("sweep." + field + ": expected integers");
    return static_cast<int>(x);
  };
  SyntheticSpec& s = c.problem.data.synthetic;
  const bool synthetic = c.problem.data.kind == DataKind::kSynthetic;
  auto need_synthetic = [&] {
    if (!synthetic) throw std::invalid_argument("sweep." + field + ": synthetic data only");
  };
  if (field == "n") {
    need_synthetic();
    s.n = as_int(v);
  } else if (field == "true_rank") {
    need_synthetic();
    s.true_rank = as_int(v);
  } else if (field == "corruption_fraction") {
    need_synthetic();
    s.corruption_fraction = v;
  } else if (field == "noise_factor") {
    need_synthetic();
    s.noise_factor = v;
  } else if (field == "sampling_ratio") {
    if (synthetic) {
      s.sampling_ratio = v;
    } else {
      c.problem.data.sampling_ratio = v;
    }
  } else if (field == "beta") {
    c.problem.beta = v;
  } else if (field == "lambda") {
    c.problem.lambda = v;
  } else if (field == "d") {
    c.problem.d = as_int(v);
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

const std::vector<std::string>& sweepable_fields() {
  static const std::vector<std::string> fields = {
      "n", "true_rank", "corruption_fraction", "noise_factor", "sampling_ratio", "beta", "lambda",
      "d"};
  return fields;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("kind") && root["kind"] == "rpca-manifest") {
    if (!root.contains("config")) fail("manifest", "missing config");
    root = root["config"];
  }
  Fields f(root, "");
  const long long version = f.integer("schema_version");
  if (version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig c;
  c.name = f.string("name", c.name);
  c.problem = parse_problem(Fields(f.raw("problem"), "problem"), base_dir);
  if (f.has("solver")) c.solver = parse_solver(Fields(f.raw("solver"), "solver"));
  f.mark("solver");
  if (f.has("run")) c.run = parse_run(Fields(f.raw("run"), "run"));
  f.mark("run");
  if (f.has("sweep")) c.sweep = parse_sweep(f.raw("sweep"), "sweep");
  f.mark("sweep");
  f.finish();
  // Surface sweep errors (wrong data kind, non-integers) at parse time.
  expand_points(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["name"] = c.name;

  const DataConfig& d = c.problem.data;
  json data;
  data["kind"] = kind_name(d.kind);
  if (d.kind == DataKind::kSynthetic) {
    data["n"] = d.synthetic.n;
    data["true_rank"] = d.synthetic.true_rank;
    data["corruption_fraction"] = d.synthetic.corruption_fraction;
    data["corruption_magnitude"] = d.synthetic.corruption_magnitude;
    data["noise_factor"] = d.synthetic.noise_factor;
    data["sampling_ratio"] = d.synthetic.sampling_ratio;
  } else {
    data["path"] = d.path;
    if (d.kind == DataKind::kMovieLens) {
      data["format"] = d.format == MovieLensFormat::kTab100k ? "tab_100k" : "colon_1m";
    } else {
      data["max_users"] = d.max_users;
    }
    data["sampling_ratio"] = d.sampling_ratio;
    data["scheme"] = d.scheme == SamplingScheme::kUniform ? "uniform" : "nonuniform";
    data["weights"] = d.weights == SamplingWeights::kCounts ? "counts" : "index_tiers";
  }

  const ProblemConfig& p = c.problem;
  json problem;
  problem["data"] = data;
  json loss;
  if (p.loss.tag == LossKind::Tag::kSquared) {
    loss["kind"] = "squared";
  } else {
    loss["kind"] = "huber";
    loss["delta"] = p.loss.delta;
  }
  problem["loss"] = loss;
  problem["d"] = p.d;
  problem["beta"] = p.beta;
  problem["lambda"] = optional_json(p.lambda);
  problem["tau"] = optional_json(p.tau);
  problem["a1"] = optional_json(p.a1);
  problem["a2"] = optional_json(p.a2);
  switch (p.s_box) {
    case SBoxKind::kSymmetric: problem["s_box"] = "symmetric"; break;
    case SBoxKind::kZero: problem["s_box"] = "zero"; break;
    case SBoxKind::kFree: problem["s_box"] = "free"; break;
    case SBoxKind::kExplicit: problem["s_box"] = json::array({p.s_lower, p.s_upper}); break;
  }
  root["problem"] = problem;

  const SolverBlock& s = c.solver;
  json solver;
  solver["algorithm"] = s.algorithm == Algorithm::kAjapg ? "ajapg" : "japg";
  solver["japg_regularizer"] = s.japg_regularizer == JapgRegularizer::kExact ? "exact" : "relaxed";
  solver["k_max"] = s.k_max;
  solver["r"] = optional_json(s.r);
  solver["s"] = optional_json(s.s);
  solver["r_start"] = optional_json(s.r_start);
  solver["s_start"] = optional_json(s.s_start);
  solver["K"] = optional_json(s.freeze_r);
  solver["K_tilde"] = optional_json(s.freeze_s);
  solver["max_iters"] = s.config.max_iters;
  solver["rel_tol"] = s.config.rel_tol;
  solver["iota_lo"] = s.config.iota_lo;
  solver["iota_hi"] = s.config.iota_hi;
  solver["varrho"] = s.config.varrho;
  solver["base_divisor"] = s.config.base_divisor;
  solver["c_min"] = s.config.c_min;
  solver["c_max"] = s.config.c_max;
  solver["c1"] = s.config.c1;
  solver["c2"] = s.config.c2;
  solver["max_backtracks"] = s.config.max_backtracks;
  solver["check_invariants"] = s.config.check_invariants;
  root["solver"] = solver;

  root["run"] = {{"trials", c.run.trials}, {"seed", c.run.seed}};
  json sweep = json::array();
  for (const SweepAxis& axis : c.sweep) sweep.push_back({{"field", axis.field}, {"values", axis.values}});
  root["sweep"] = sweep;
  return root.dump(indent);
}

std::vector<Point> expand_points(const ExperimentConfig& config) {
  std::vector<Point> points;
  std::vector<std::size_t> at(config.sweep.size(), 0);
  while (true) {
    Point point;
    point.index = static_cast<int>(points.size());
    point.config = config;
    point.config.sweep.clear();
    for (std::size_t a = 0; a < config.sweep.size(); ++a) {
      apply_axis(point.config, config.sweep[a].field, config.sweep[a].values[at[a]]);
    }
    if (point.config.problem.data.kind == DataKind::kSynthetic) {
      point.config.problem.data.synthetic.validate();
    }
    point.label = point_label(point.config);
    points.push_back(std::move(point));
    // Odometer over the axes, last axis fastest.
    std::size_t a = config.sweep.size();
    while (a > 0) {
      --a;
      if (++at[a] < config.sweep[a].values.size()) break;
      at[a] = 0;
      if (a == 0) return points;
    }
    if (config.sweep.empty()) return points;
  }
}

std::string method_name(const ExperimentConfig& config) {
  std::string name = config.solver.algorithm == Algorithm::kAjapg ? "AJA-PG" : "JA-PG";
  if (config.solver.algorithm == Algorithm::kJapg) {
    name += config.solver.japg_regularizer == JapgRegularizer::kExact ? "_l0" : "_capped";
  }
  return name + "_ball";
}

std::string point_label(const ExperimentConfig& config) {
  const DataConfig& d = config.problem.data;
  if (d.kind == DataKind::kSynthetic) {
    const SyntheticSpec& s = d.synthetic;
    return "n=" + std::to_string(s.n) + " r=" + std::to_string(s.true_rank) +
           " cf=" + short_number(s.corruption_fraction) + " nf=" + short_number(s.noise_factor) +
           " sr=" + short_number(s.sampling_ratio);
  }
  return "SR=" + short_number(d.sampling_ratio);
}

}  // namespace rpca::cli
