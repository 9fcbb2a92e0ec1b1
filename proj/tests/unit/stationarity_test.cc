#include <gtest/gtest.h>

#include "rpca/stationarity.h"
#include "support/test_util.h"

namespace rpca {
namespace {

TEST(Consistency, Basic) {
  FactorState st = FactorState::zeros(3, 3, 2, 1);
  EXPECT_TRUE(check_consistency(st));
  st.x(0, 0) = 1.0;
  EXPECT_FALSE(check_consistency(st));
  EXPECT_TRUE(check_consistency(st, 0.0));
  st.y(2, 0) = -1.0;
  EXPECT_TRUE(check_consistency(st));
}

TEST(Isolation, Basic) {
  FactorState st = FactorState::zeros(2, 2, 1, 2);
  EXPECT_TRUE(check_isolation(st, 1.0, 1.0));
  st.x(0, 0) = 0.5;
  EXPECT_FALSE(check_isolation(st, 1.0, 1.0));
  EXPECT_TRUE(check_isolation(st, 1.0, 1.0, {0.0, 1.0}));
  st.x(0, 0) = 1.0;
  EXPECT_TRUE(check_isolation(st, 1.0, 1.0));
  st.s_values[1] = -0.2;
  EXPECT_FALSE(check_isolation(st, 1.0, 0.5));
  EXPECT_TRUE(check_isolation(st, 1.0, 0.2));
  EXPECT_TRUE(check_isolation(st, 1.0, 0.5, {1.0, 0.0}));
}

FactorState exact_fit_state() {
  FactorState st = FactorState::zeros(3, 3, 2, 9);
  st.x << 1.0, 0.0, 0.0, 2.0, 1.0, 1.0;
  st.y << 2.0, 1.0, 1.0, 0.0, 0.0, 1.0;
  return st;
}

// Oracle (tests/oracles/eval_oracle.py): residual 0 at the exact fit and
// 0.6708203932499366 after shifting M(0, 0) by 0.3.
TEST(KktResidual, ConstructedPoints) {
  const FactorState st = exact_fit_state();
  Matrix m = st.x * st.y.transpose();
  const ConstraintSpec box{kInfinity, -5.0, 5.0};
  EXPECT_EQ(kkt_residual(st, testing::full_observed(m), {1.0, 1.0}, box, 0.5, 0.5), 0.0);
  m(0, 0) += 0.3;
  EXPECT_NEAR(kkt_residual(st, testing::full_observed(m), {1.0, 1.0}, box, 0.5, 0.5),
              0.6708203932499366, 1e-14);
}

TEST(KktResidual, GenericPointIsNotStationary) {
  Rng rng(2);
  const ObservedMatrix data = testing::random_observed(rng, 6, 6, 0.8);
  const FactorState st = testing::random_state(rng, data, 2);
  EXPECT_GT(kkt_residual(st, data, {0.5, 0.5}, {}, 0.1, 0.1), 1e-3);
}

TEST(KktResidual, BoundaryColumnUsesNormalCone) {
  // One observation that wants the column to grow past the ball of radius 1.
  const ObservedMatrix data(1, 1, {{0, 0, 4.0}});
  FactorState st = FactorState::zeros(1, 1, 1, 1);
  st.x(0, 0) = 1.0;
  st.y(0, 0) = 1.0;
  const ConstraintSpec ball{1.0, 0.0, 0.0};
  EXPECT_EQ(kkt_residual(st, data, {1.0, 0.0}, ball, 0.5, 1.0), 0.0);
  const ConstraintSpec open{kInfinity, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(kkt_residual(st, data, {1.0, 0.0}, open, 0.5, 1.0), 3.0);
}

TEST(Certify, ExactFitIsStrongStationary) {
  const FactorState st = exact_fit_state();
  const ObservedMatrix data = testing::full_observed(st.x * st.y.transpose());
  const StationarityReport rep = certify(st, data, {1.0, 1.0}, {kInfinity, -1.0, 1.0}, 0.5, 0.5);
  EXPECT_TRUE(rep.strong_stationary);
  EXPECT_EQ(rep.nnzc_x, 2);
  EXPECT_EQ(rep.nnz_s, 0u);
  EXPECT_DOUBLE_EQ(rep.objective, 4.0);
  EXPECT_DOUBLE_EQ(rep.relaxed_objective, 4.0);
}

}  // namespace
}  // namespace rpca
