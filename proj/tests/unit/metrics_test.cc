#include <gtest/gtest.h>

#include "rpca/metrics.h"
#include "support/test_util.h"

namespace rpca {
namespace {

TEST(Rse, Basic) {
  Rng rng(1);
  const Matrix x = testing::random_matrix(rng, 5, 2);
  const Matrix y = testing::random_matrix(rng, 4, 2);
  const Matrix z = x * y.transpose();
  EXPECT_NEAR(rse(x, y, z), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(rse(Matrix::Zero(5, 2), y, z), 1.0);
  EXPECT_NEAR(rse(3.0 * x, y, 3.0 * z), 0.0, 1e-15);
  EXPECT_THROW(rse(x, y, Matrix::Zero(5, 4)), std::invalid_argument);
  EXPECT_THROW(rse(x, y, Matrix::Zero(4, 4)), std::invalid_argument);
}

// Oracle (tests/oracles/eval_oracle.py): X = (1, 2)^T, Y = (1, 1)^T against
// Z = [[1, 2], [3, 4]] gives sqrt(5) / sqrt(30).
TEST(Rse, TwoByTwo) {
  Matrix x(2, 1), y(2, 1), z(2, 2);
  x << 1.0, 2.0;
  y << 1.0, 1.0;
  z << 1.0, 2.0, 3.0, 4.0;
  EXPECT_NEAR(rse(x, y, z), 0.44721359549995787, 1e-15);
}

TEST(Rse, ScaleCovariant) {
  Rng rng(6);
  const Matrix x = testing::random_matrix(rng, 7, 3);
  const Matrix y = testing::random_matrix(rng, 6, 3);
  const Matrix z = testing::random_matrix(rng, 7, 6);
  EXPECT_NEAR(rse(x, y, z), rse(-2.5 * x, y, -2.5 * z), 1e-14);
}

TEST(Nmae, Basic) {
  const ObservedMatrix test(1, 3, {{0, 0, 1.0}, {0, 1, 3.0}, {0, 2, 4.0}});
  EXPECT_DOUBLE_EQ(nmae(std::vector<double>{1.0, 3.0, 4.0}, test, 1.0, 5.0), 0.0);
  // Oracle: clamped predictions (1, 3.5, 5) give 0.125.
  EXPECT_DOUBLE_EQ(nmae(std::vector<double>{0.0, 3.5, 6.0}, test, 1.0, 5.0), 0.125);
  const ObservedMatrix top(1, 2, {{0, 0, 5.0}, {0, 1, 5.0}});
  EXPECT_DOUBLE_EQ(nmae(std::vector<double>{1.0, -3.0}, top, 1.0, 5.0), 1.0);
  EXPECT_THROW(nmae(std::vector<double>{1.0}, top, 1.0, 5.0), std::invalid_argument);
  EXPECT_THROW(nmae(std::vector<double>{1.0, 1.0}, top, 5.0, 5.0), std::invalid_argument);
}

TEST(Nmae, AffineInvariant) {
  const ObservedMatrix test(1, 3, {{0, 0, 1.0}, {0, 1, 3.0}, {0, 2, 4.0}});
  const ObservedMatrix scaled(1, 3, {{0, 0, 3.0}, {0, 1, 7.0}, {0, 2, 9.0}});
  EXPECT_DOUBLE_EQ(nmae(std::vector<double>{2.0, 2.5, 5.0}, test, 1.0, 5.0),
                   nmae(std::vector<double>{5.0, 6.0, 11.0}, scaled, 3.0, 11.0));
}

TEST(PredictOn, MatchesDense) {
  Rng rng(3);
  const ObservedMatrix mask = testing::random_observed(rng, 5, 6, 0.4);
  const Matrix x = testing::random_matrix(rng, 5, 2);
  const Matrix y = testing::random_matrix(rng, 6, 2);
  const auto pred = predict_on(x, y, mask);
  const Matrix dense = x * y.transpose();
  for (std::size_t e = 0; e < mask.size(); ++e) {
    EXPECT_NEAR(pred[e], dense(mask.row_index()[e], mask.col_index()[e]), 1e-14);
  }
}

}  // namespace
}  // namespace rpca
