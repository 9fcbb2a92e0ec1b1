#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <utility>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "rpca/data.h"
#include "support/test_util.h"

namespace rpca {
namespace {

using testing::fixture;

TEST(Synthetic, NoiseFreeFullSamplingIsLowRank) {
  SyntheticSpec spec;
  spec.n = 30;
  spec.true_rank = 3;
  spec.corruption_fraction = 0.0;
  spec.seed = 9;
  const SyntheticInstance inst = generate_synthetic(spec);
  EXPECT_EQ(inst.observed.size(), 900u);
  EXPECT_TRUE((inst.truth.m_input.array() == inst.truth.z_low.array()).all());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.truth.z_low);
  EXPECT_LT(svd.singularValues()(3), 1e-10 * svd.singularValues()(0));
}

TEST(Synthetic, GroundTruthInvariants) {
  SyntheticSpec spec;
  spec.n = 40;
  spec.corruption_fraction = 0.15;
  spec.noise_factor = 0.1;
  spec.sampling_ratio = 0.5;
  spec.seed = 1;
  const SyntheticInstance inst = generate_synthetic(spec);
  const auto nonzero = (inst.truth.s_corrupt.array() != 0.0).count();
  EXPECT_EQ(static_cast<std::size_t>(nonzero), inst.truth.corruption_count);
  EXPECT_EQ(inst.truth.corruption_count, 240u);
  EXPECT_LE(inst.truth.s_corrupt.cwiseAbs().maxCoeff(), 5.0);
  EXPECT_EQ(inst.observed.size(), 800u);
  const Matrix sum = inst.truth.z_low + inst.truth.s_corrupt + inst.truth.r_noise;
  EXPECT_TRUE((sum.array() == inst.truth.m_input.array()).all());
}

TEST(Synthetic, DeterministicAndComponentwiseStreams) {
  SyntheticSpec spec;
  spec.n = 20;
  spec.seed = 4;
  const SyntheticInstance a = generate_synthetic(spec);
  const SyntheticInstance b = generate_synthetic(spec);
  EXPECT_TRUE((a.truth.m_input.array() == b.truth.m_input.array()).all());
  spec.noise_factor = 0.5;
  const SyntheticInstance c = generate_synthetic(spec);
  EXPECT_TRUE((a.truth.z_low.array() == c.truth.z_low.array()).all());
  EXPECT_TRUE((a.truth.s_corrupt.array() == c.truth.s_corrupt.array()).all());
}

// E ||P Q^T||_F^2 = n^2 r for standard Gaussian factors.
TEST(Synthetic, LowRankMomentMatchesAnalyticValue) {
  SyntheticSpec spec;
  spec.n = 30;
  spec.true_rank = 2;
  double total = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    spec.seed = static_cast<std::uint64_t>(seed);
    total += generate_synthetic(spec).truth.z_low.squaredNorm();
  }
  EXPECT_NEAR(total / 50.0 / (30.0 * 30.0 * 2.0), 1.0, 0.05);
}

TEST(Synthetic, RejectsInvalidSpecs) {
  SyntheticSpec spec;
  spec.true_rank = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = SyntheticSpec{};
  spec.corruption_fraction = 1.5;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = SyntheticSpec{};
  spec.sampling_ratio = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(MovieLens, ToyFileReindexes) {
  const RatingDataset ds = load_movielens(fixture("ml_toy.tsv"), MovieLensFormat::kTab100k);
  ASSERT_EQ(ds.observed.size(), 3u);
  EXPECT_EQ(ds.observed.rows(), 3);  // users 22, 186, 196
  EXPECT_EQ(ds.observed.cols(), 2);  // items 242, 302
  EXPECT_EQ(ds.observed.find(2, 0), 2);  // user 196, item 242
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(0, 0)], 1.0);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(1, 1)], 3.0);
  EXPECT_DOUBLE_EQ(ds.rating_min, 1.0);
  EXPECT_DOUBLE_EQ(ds.rating_max, 5.0);
  EXPECT_TRUE(ds.warnings.empty());
}

TEST(MovieLens, ColonFormatAndGzip) {
  const RatingDataset ds = load_movielens(fixture("ml_toy_1m.dat"), MovieLensFormat::kColon1m);
  EXPECT_EQ(ds.observed.rows(), 2);
  EXPECT_EQ(ds.observed.cols(), 2);
  EXPECT_EQ(ds.observed.size(), 3u);
  const RatingDataset gz = load_movielens(fixture("ml_toy.tsv.gz"), MovieLensFormat::kTab100k);
  EXPECT_EQ(gz.observed.size(), 1u);
}

TEST(MovieLens, Errors) {
  try {
    load_movielens(fixture("ml_bad_rating.tsv"), MovieLensFormat::kTab100k);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_movielens(fixture("ml_out_of_range.tsv"), MovieLensFormat::kTab100k),
               std::runtime_error);
  try {
    load_movielens(fixture("ml_empty.tsv"), MovieLensFormat::kTab100k);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "no observations");
  }
  EXPECT_THROW(load_movielens(fixture("missing.tsv"), MovieLensFormat::kTab100k),
               std::runtime_error);
}

TEST(MovieLens, DuplicateKeepsLastAndWarns) {
  const RatingDataset ds = load_movielens(fixture("ml_duplicate.tsv"), MovieLensFormat::kTab100k);
  EXPECT_EQ(ds.observed.size(), 2u);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(0, 0)], 5.0);
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("line 2"), std::string::npos);
}

TEST(MovieLens, FullHundredK) {
  const std::string path = RPCA_MOVIELENS_100K;
  if (!std::ifstream(path)) GTEST_SKIP() << "MovieLens-100K not found at " << path;
  const RatingDataset ds = load_movielens(path, MovieLensFormat::kTab100k);
  EXPECT_EQ(ds.observed.size(), 100000u);
  EXPECT_EQ(ds.observed.rows(), 943);
  EXPECT_EQ(ds.observed.cols(), 1682);
}

TEST(Jester, ToyFile) {
  const RatingDataset ds = load_jester(fixture("jester_toy.csv"));
  EXPECT_EQ(ds.observed.rows(), 2);  // the all-missing user is dropped
  EXPECT_EQ(ds.observed.cols(), 100);
  EXPECT_EQ(ds.observed.size(), 5u);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(0, 0)], 7.5);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(0, 3)], -2.25);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(0, 99)], 10.0);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(1, 1)], -10.0);
  EXPECT_DOUBLE_EQ(ds.observed.values()[ds.observed.find(1, 50)], 0.0);
  EXPECT_EQ(ds.observed.find(0, 1), -1);
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("line 2"), std::string::npos);
  EXPECT_DOUBLE_EQ(ds.rating_min, -10.0);
  EXPECT_DOUBLE_EQ(ds.rating_max, 10.0);
}

TEST(Jester, Errors) {
  EXPECT_THROW(load_jester(fixture("jester_out_of_range.csv")), std::runtime_error);
  EXPECT_THROW(load_jester(fixture("jester_short.csv")), std::runtime_error);
}

TEST(Jester, MaxUsersSubsamples) {
  const RatingDataset ds = load_jester(fixture("jester_toy.csv"), {1, 3});
  EXPECT_EQ(ds.observed.rows(), 1);
}

ObservedMatrix dense_ones(int m, int n) {
  return testing::full_observed(Matrix::Constant(m, n, 1.0));
}

TEST(SampleMask, SizesAndPartition) {
  const ObservedMatrix two(1, 2, {{0, 0, 1.0}, {0, 1, 2.0}});
  const MaskSplit tiny = sample_mask(two, 0.5, SamplingScheme::kUniform, 1);
  EXPECT_EQ(tiny.train.size(), 1u);
  EXPECT_EQ(tiny.test.size(), 1u);

  const ObservedMatrix full = dense_ones(20, 30);
  for (SamplingScheme scheme : {SamplingScheme::kUniform, SamplingScheme::kNonuniform}) {
    const MaskSplit split = sample_mask(full, 0.25, scheme, 7);
    EXPECT_EQ(split.train.size(), 150u);
    EXPECT_EQ(split.test.size(), 450u);
    std::set<std::pair<int, int>> seen;
    for (const ObservedMatrix* part : {&split.train, &split.test}) {
      for (const Entry& e : part->entries()) EXPECT_TRUE(seen.insert({e.row, e.col}).second);
    }
    EXPECT_EQ(seen.size(), 600u);
  }
  EXPECT_THROW(sample_mask(two, 0.1, SamplingScheme::kUniform, 1), std::invalid_argument);
  EXPECT_THROW(sample_mask(two, 1.0, SamplingScheme::kUniform, 1), std::invalid_argument);
}

TEST(SampleMask, Deterministic) {
  const ObservedMatrix full = dense_ones(15, 15);
  const auto a = sample_mask(full, 0.4, SamplingScheme::kNonuniform, 3, SamplingWeights::kIndexTiers);
  const auto b = sample_mask(full, 0.4, SamplingScheme::kNonuniform, 3, SamplingWeights::kIndexTiers);
  const auto ea = a.train.entries();
  const auto eb = b.train.entries();
  ASSERT_EQ(ea.size(), eb.size());
  for (std::size_t k = 0; k < ea.size(); ++k) {
    EXPECT_EQ(ea[k].row, eb[k].row);
    EXPECT_EQ(ea[k].col, eb[k].col);
  }
}

// Oracle (tests/oracles/eval_oracle.py): capped and rescaled probabilities.
TEST(InclusionProbabilities, CountsWeighting) {
  const ObservedMatrix pattern(3, 4, {{0, 0, 1}, {0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {1, 0, 1},
                                      {1, 1, 1}, {2, 0, 1}, {2, 2, 1}, {2, 3, 1}});
  const std::vector<double> expected{0.8955223880597014, 0.5970149253731343, 0.5970149253731343,
                                     0.5970149253731343, 0.4477611940298507, 0.29850746268656714,
                                     0.6716417910447761, 0.4477611940298507, 0.4477611940298507};
  const std::vector<double> pi = nonuniform_inclusion_probabilities(pattern, 5);
  ASSERT_EQ(pi.size(), expected.size());
  for (std::size_t k = 0; k < pi.size(); ++k) EXPECT_NEAR(pi[k], expected[k], 1e-12);
}

TEST(InclusionProbabilities, IndexTiers) {
  const std::vector<double> row_sums{3.682926829268294, 3.682926829268294, 6.29268292682927,
                                     6.29268292682927, 1.8780487804878057};
  const std::vector<double> pi =
      nonuniform_inclusion_probabilities(dense_ones(20, 10), 50, SamplingWeights::kIndexTiers);
  double total = 0.0;
  for (int i = 0; i < 20; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 10; ++j) sum += pi[i * 10 + j];
    EXPECT_NEAR(sum, row_sums[std::min(i, 4)], 1e-12) << "row " << i;
    total += sum;
  }
  EXPECT_NEAR(total, 50.0, 1e-9);
}

// Per-row inclusion frequency over 200 seeds matches the sampler's law.
TEST(SampleMask, NonuniformFrequenciesFollowProbabilities) {
  std::vector<Entry> entries;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (j <= i || (i + j) % 3 == 0) entries.push_back({i, j, 1.0});
    }
  }
  const ObservedMatrix full(12, 10, entries);
  const std::size_t train = static_cast<std::size_t>(std::llround(0.3 * full.size()));
  const std::vector<double> pi = nonuniform_inclusion_probabilities(full, train);
  std::vector<double> expected(12, 0.0), observed(12, 0.0);
  for (std::size_t e = 0; e < full.size(); ++e) expected[full.row_index()[e]] += pi[e];
  constexpr int kSeeds = 200;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const MaskSplit split = sample_mask(full, 0.3, SamplingScheme::kNonuniform, seed);
    for (const Entry& e : split.train.entries()) observed[e.row] += 1.0 / kSeeds;
  }
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(observed[i], expected[i], 0.1 * expected[i]) << i;
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(0, 1), derive_seed(0, 2));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
}

}  // namespace
}  // namespace rpca
