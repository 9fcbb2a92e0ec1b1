#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rpca/observed_matrix.h"
#include "rpca/types.h"

namespace rpca {

// Square synthetic instance M = Z + S + R with Z = P Q^T (standard Gaussian
// factors), S supported on round(corruption_fraction n^2) entries chosen
// uniformly without replacement with values uniform in [-corruption_magnitude,
// corruption_magnitude], and R = noise_factor * randn(n). Omega keeps
// round(sampling_ratio n^2) entries chosen uniformly.
struct SyntheticSpec {
  int n = 100;
  int true_rank = 2;
  double corruption_fraction = 0.1;
  double corruption_magnitude = 5.0;
  double noise_factor = 0.0;
  double sampling_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  Matrix z_low;
  Matrix s_corrupt;
  Matrix r_noise;
  Matrix m_input;
  std::size_t corruption_count = 0;
};

struct SyntheticInstance {
  GroundTruth truth;
  ObservedMatrix observed;
};

// Each component draws from its own stream derived from the seed, so e.g.
// changing the noise factor leaves Z, S and Omega unchanged.
SyntheticInstance generate_synthetic(const SyntheticSpec& spec);

// Observations with the rating scale they were recorded on.
struct RatingDataset {
  ObservedMatrix observed;
  double rating_min = 0.0;
  double rating_max = 0.0;
  std::vector<std::string> warnings;
};

enum class MovieLensFormat { kTab100k, kColon1m };

// MovieLens ratings: "user<TAB>item<TAB>rating<TAB>timestamp" (100K) or
// "user::item::rating::timestamp" (1M). User and item ids are reindexed
// densely in increasing id order. A repeated (user, item) keeps the last
// rating and adds a warning. Ratings live on [1, 5]. Gzip input is read
// transparently. Throws std::runtime_error naming the line of a malformed
// record, and "no observations" for an empty file.
RatingDataset load_movielens(const std::string& path, MovieLensFormat format);

struct JesterOptions {
  int max_users = 0;  // keep at most this many users (uniform, seeded); 0 = all
  std::uint64_t seed = 0;
};

// Jester ratings as comma-separated rows, one per user, with 100 joke columns
// or 101 when the first column is the user's rating count. 99 marks a missing
// rating, other values must lie in [-10, 10]. Users without any rating are
// dropped with a warning.
RatingDataset load_jester(const std::string& path, const JesterOptions& options = {});

enum class SamplingScheme { kUniform, kNonuniform };

// Row and column weights p_i, q_j of the kNonuniform scheme. kCounts uses the
// observation counts of the row and column. kIndexTiers weights index k (1-based)
// of a dimension of size n by 2 when k <= n/10, by 4 when n/10 < k <= n/5 and
// by 1 otherwise.
enum class SamplingWeights { kCounts, kIndexTiers };

struct MaskSplit {
  ObservedMatrix train;
  ObservedMatrix test;
};

// Splits the observations into round(sr |Omega|) training entries and the
// remaining test entries.
//
// kUniform picks the training set uniformly without replacement. kNonuniform
// includes entry (i, j) with probability pi_ij = min(1, c p_i q_j), where p_i
// and q_j are the row and column weights and c is chosen so that the pi sum
// to the training size; the draw is systematic sampling over
// a seeded random order, so the training size is exact and every inclusion
// probability equals pi_ij.
MaskSplit sample_mask(const ObservedMatrix& full, double sr, SamplingScheme scheme,
                      std::uint64_t seed, SamplingWeights weights = SamplingWeights::kCounts);

// Inclusion probabilities used by the kNonuniform scheme.
std::vector<double> nonuniform_inclusion_probabilities(
    const ObservedMatrix& full, std::size_t train_size,
    SamplingWeights weights = SamplingWeights::kCounts);

// Independent stream seed for component `stream` of a run seeded with `seed`
// (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rpca
