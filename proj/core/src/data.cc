#include "rpca/data.h"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "rpca/rng.h"

namespace rpca {

namespace {

enum Stream : std::uint64_t { kFactorP = 1, kFactorQ, kCorruption, kNoise, kMask };

std::string read_file(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot open " + path);
  std::string out;
  char buffer[1 << 16];
  int got;
  while ((got = gzread(file, buffer, sizeof buffer)) > 0) out.append(buffer, got);
  int err = 0;
  const char* msg = gzerror(file, &err);
  const std::string detail = err < 0 && msg ? msg : "";
  gzclose(file);
  if (got < 0 || err < 0) throw std::runtime_error("read error on " + path + ": " + detail);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end && !field.empty();
}

// Calls fn(line_number, line) for every non-blank line.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t number = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++number;
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    if (!line.empty()) fn(number, line);
    pos = end + 1;
  }
}

[[noreturn]] void malformed(const std::string& path, std::size_t line, const std::string& why) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + why);
}

std::size_t rounded_count(double fraction, std::size_t population) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(population)));
}

ObservedMatrix subset(const ObservedMatrix& full, const std::vector<bool>& keep, bool value) {
  std::vector<Entry> entries;
  const auto rows = full.row_index();
  const auto cols = full.col_index();
  const auto vals = full.values();
  for (std::size_t e = 0; e < full.size(); ++e) {
    if (keep[e] == value) entries.push_back({rows[e], cols[e], vals[e]});
  }
  return ObservedMatrix(full.rows(), full.cols(), std::move(entries));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SyntheticSpec::validate() const {
  if (n < 1) throw std::invalid_argument("synthetic n must be >= 1");
  if (true_rank < 1 || true_rank > n) {
    throw std::invalid_argument("synthetic true_rank must lie in [1, n]");
  }
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0)) {
    throw std::invalid_argument("corruption_fraction must lie in [0, 1]");
  }
  if (!(corruption_magnitude >= 0.0) || !std::isfinite(corruption_magnitude)) {
    throw std::invalid_argument("corruption_magnitude must be finite and >= 0");
  }
  if (!(noise_factor >= 0.0) || !std::isfinite(noise_factor)) {
    throw std::invalid_argument("noise_factor must be finite and >= 0");
  }
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw std::invalid_argument("sampling_ratio must lie in (0, 1]");
  }
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  if (rounded_count(sampling_ratio, total) == 0) {
    throw std::invalid_argument("sampling_ratio leaves no observed entries");
  }
}

SyntheticInstance generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const int r = spec.true_rank;
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

  auto gaussian = [](Rng& rng, int rows, int cols) {
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) out(i, j) = rng.normal();
    }
    return out;
  };
  Rng rng_p(derive_seed(spec.seed, kFactorP));
  Rng rng_q(derive_seed(spec.seed, kFactorQ));
  const Matrix p = gaussian(rng_p, n, r);
  const Matrix q = gaussian(rng_q, n, r);

  GroundTruth truth;
  truth.z_low = p * q.transpose();

  truth.s_corrupt = Matrix::Zero(n, n);
  Rng rng_s(derive_seed(spec.seed, kCorruption));
  const std::size_t corrupt = rounded_count(spec.corruption_fraction, total);
  const std::vector<std::size_t> support = rng_s.sample_without_replacement(total, corrupt);
  for (std::size_t idx : support) {
    truth.s_corrupt(idx / n, idx % n) =
        rng_s.uniform(-spec.corruption_magnitude, spec.corruption_magnitude);
  }
  truth.corruption_count = corrupt;

  truth.r_noise = Matrix::Zero(n, n);
  if (spec.noise_factor > 0.0) {
    Rng rng_r(derive_seed(spec.seed, kNoise));
    truth.r_noise = spec.noise_factor * gaussian(rng_r, n, n);
  }
  truth.m_input = truth.z_low + truth.s_corrupt + truth.r_noise;

  std::vector<std::size_t> observed;
  if (spec.sampling_ratio >= 1.0) {
    observed.resize(total);
    std::iota(observed.begin(), observed.end(), std::size_t{0});
  } else {
    Rng rng_o(derive_seed(spec.seed, kMask));
    observed = rng_o.sample_without_replacement(total, rounded_count(spec.sampling_ratio, total));
  }
  std::vector<Entry> entries;
  entries.reserve(observed.size());
  for (std::size_t idx : observed) {
    const int i = static_cast<int>(idx / n);
    const int j = static_cast<int>(idx % n);
    entries.push_back({i, j, truth.m_input(i, j)});
  }
  return {std::move(truth), ObservedMatrix(n, n, std::move(entries))};
}

RatingDataset load_movielens(const std::string& path, MovieLensFormat format) {
  const std::string text = read_file(path);
  const std::string_view sep = format == MovieLensFormat::kTab100k ? "\t" : "::";
  struct Raw {
    long user;
    long item;
    double rating;
    std::size_t line;
  };
  std::vector<Raw> raw;
  for_each_line(text, [&](std::size_t number, std::string_view line) {
    const auto fields = split(line, sep);
    if (fields.size() < 3 || fields.size() > 4) {
      malformed(path, number, "expected user, item, rating[, timestamp]");
    }
    Raw rec{0, 0, 0.0, number};
    if (!parse_number(fields[0], rec.user) || !parse_number(fields[1], rec.item)) {
      malformed(path, number, "bad user or item id");
    }
    if (!parse_number(fields[2], rec.rating) || !std::isfinite(rec.rating)) {
      malformed(path, number, "bad rating");
    }
    if (rec.rating < 1.0 || rec.rating > 5.0) malformed(path, number, "rating outside [1, 5]");
    raw.push_back(rec);
  });
  if (raw.empty()) throw std::runtime_error("no observations");

  std::map<long, int> users, items;
  for (const Raw& rec : raw) {
    users.emplace(rec.user, 0);
    items.emplace(rec.item, 0);
  }
  int next = 0;
  for (auto& [id, index] : users) index = next++;
  next = 0;
  for (auto& [id, index] : items) index = next++;

  RatingDataset out{ObservedMatrix(1, 1, {{0, 0, 0.0}}), 1.0, 5.0, {}};
  std::map<std::pair<int, int>, std::pair<double, std::size_t>> cells;
  for (const Raw& rec : raw) {
    const std::pair<int, int> key{users[rec.user], items[rec.item]};
    auto [it, inserted] = cells.try_emplace(key, rec.rating, rec.line);
    if (!inserted) {
      out.warnings.push_back("line " + std::to_string(rec.line) + ": duplicate rating for user " +
                             std::to_string(rec.user) + ", item " + std::to_string(rec.item) +
                             " (first seen on line " + std::to_string(it->second.second) +
                             "); keeping the last");
      it->second = {rec.rating, rec.line};
    }
  }
  std::vector<Entry> entries;
  entries.reserve(cells.size());
  for (const auto& [key, value] : cells) entries.push_back({key.first, key.second, value.first});
  out.observed = ObservedMatrix(static_cast<int>(users.size()), static_cast<int>(items.size()),
                                std::move(entries));
  return out;
}

RatingDataset load_jester(const std::string& path, const JesterOptions& options) {
  constexpr int kJokes = 100;
  constexpr double kMissing = 99.0;
  if (options.max_users < 0) throw std::invalid_argument("max_users must be >= 0");
  const std::string text = read_file(path);

  RatingDataset out{ObservedMatrix(1, 1, {{0, 0, 0.0}}), -10.0, 10.0, {}};
  std::vector<std::vector<std::pair<int, double>>> rows;
  for_each_line(text, [&](std::size_t number, std::string_view line) {
    const auto fields = split(line, ",");
    if (fields.size() != kJokes && fields.size() != kJokes + 1) {
      malformed(path, number, "expected 100 or 101 columns, found " +
                                  std::to_string(fields.size()));
    }
    const std::size_t offset = fields.size() - kJokes;
    std::vector<std::pair<int, double>> ratings;
    for (int j = 0; j < kJokes; ++j) {
      double v = 0.0;
      if (!parse_number(fields[offset + j], v)) {
        malformed(path, number, "bad rating in column " + std::to_string(offset + j + 1));
      }
      if (v == kMissing) continue;
      if (!(v >= -10.0 && v <= 10.0)) {
        malformed(path, number, "rating outside [-10, 10] in column " +
                                    std::to_string(offset + j + 1));
      }
      ratings.emplace_back(j, v);
    }
    if (ratings.empty()) {
      out.warnings.push_back("line " + std::to_string(number) + ": user has no ratings; dropped");
      return;
    }
    rows.push_back(std::move(ratings));
  });
  if (rows.empty()) throw std::runtime_error("no observations");

  std::vector<std::size_t> keep(rows.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (options.max_users > 0 && static_cast<std::size_t>(options.max_users) < rows.size()) {
    Rng rng(options.seed);
    keep = rng.sample_without_replacement(rows.size(), options.max_users);
    std::sort(keep.begin(), keep.end());
  }
  std::vector<Entry> entries;
  for (std::size_t u = 0; u < keep.size(); ++u) {
    for (const auto& [j, v] : rows[keep[u]]) entries.push_back({static_cast<int>(u), j, v});
  }
  out.observed = ObservedMatrix(static_cast<int>(keep.size()), kJokes, std::move(entries));
  return out;
}

namespace {

std::vector<double> index_tier_weights(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  for (int k = 1; k <= n; ++k) {
    if (10 * k <= n) {
      w[k - 1] = 2.0;
    } else if (5 * k <= n) {
      w[k - 1] = 4.0;
    }
  }
  return w;
}

}  // namespace

std::vector<double> nonuniform_inclusion_probabilities(const ObservedMatrix& full,
                                                       std::size_t train_size,
                                                       SamplingWeights weights) {
  const std::size_t total = full.size();
  if (train_size > total) throw std::invalid_argument("train size exceeds |Omega|");
  const auto rows = full.row_index();
  const auto cols = full.col_index();
  std::vector<double> row_w, col_w;
  if (weights == SamplingWeights::kCounts) {
    row_w.assign(full.rows(), 0.0);
    col_w.assign(full.cols(), 0.0);
    for (std::size_t e = 0; e < total; ++e) {
      row_w[rows[e]] += 1.0;
      col_w[cols[e]] += 1.0;
    }
  } else {
    row_w = index_tier_weights(full.rows());
    col_w = index_tier_weights(full.cols());
  }
  std::vector<double> weight(total);
  for (std::size_t e = 0; e < total; ++e) weight[e] = row_w[rows[e]] * col_w[cols[e]];

  // Cap at 1 and redistribute the remaining mass until no uncapped entry
  // exceeds 1.
  std::vector<double> pi(total, 0.0);
  std::vector<bool> capped(total, false);
  std::size_t n_capped = 0;
  while (true) {
    double free_weight = 0.0;
    for (std::size_t e = 0; e < total; ++e) {
      if (!capped[e]) free_weight += weight[e];
    }
    const double budget = static_cast<double>(train_size) - static_cast<double>(n_capped);
    const double c = free_weight > 0.0 ? budget / free_weight : 0.0;
    bool changed = false;
    for (std::size_t e = 0; e < total; ++e) {
      if (capped[e]) continue;
      if (c * weight[e] >= 1.0) {
        capped[e] = true;
        ++n_capped;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t e = 0; e < total; ++e) pi[e] = capped[e] ? 1.0 : c * weight[e];
      return pi;
    }
  }
}

MaskSplit sample_mask(const ObservedMatrix& full, double sr, SamplingScheme scheme,
                      std::uint64_t seed, SamplingWeights weights) {
  if (!(sr > 0.0 && sr < 1.0)) throw std::invalid_argument("sampling ratio must lie in (0, 1)");
  const std::size_t total = full.size();
  const std::size_t k = rounded_count(sr, total);
  if (k == 0 || k == total) {
    throw std::invalid_argument("sampling ratio leaves the train or test set empty");
  }
  std::vector<bool> in_train(total, false);
  Rng rng(seed);
  if (scheme == SamplingScheme::kUniform) {
    for (std::size_t e : rng.sample_without_replacement(total, k)) in_train[e] = true;
  } else {
    const std::vector<double> pi = nonuniform_inclusion_probabilities(full, k, weights);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    // Systematic sampling: points u, u + 1, ..., u + k - 1 on the cumulative
    // probability line; each point selects the entry whose interval holds it.
    const double u = rng.uniform();
    long double cumulative = 0.0L;
    std::size_t selected = 0;
    long double point = u;
    for (std::size_t idx : order) {
      cumulative += pi[idx];
      if (selected < k && point < cumulative) {
        in_train[idx] = true;
        ++selected;
        point += 1.0L;
      }
    }
    // Rounding can leave the last point just past the total mass.
    for (std::size_t t = order.size(); selected < k && t > 0; --t) {
      const std::size_t idx = order[t - 1];
      if (!in_train[idx]) {
        in_train[idx] = true;
        ++selected;
      }
    }
  }
  return {subset(full, in_train, true), subset(full, in_train, false)};
}

}  // namespace rpca
