#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rpca/data.h"
#include "rpca/init.h"
#include "rpca/loss.h"
#include "rpca/metrics.h"
#include "rpca/solver.h"
#include "rpca/stationarity.h"
#include "rpca/trace_io.h"
#include "support/test_util.h"

namespace rpca {
namespace {

const ColumnProx kIdentityColumn = [](int, double, Eigen::Ref<const Vector> in,
                                      Eigen::Ref<Vector> out) { out = in; };
const FactorPenalty kNoFactorPenalty = [](const Matrix&, const Matrix&) { return 0.0; };

TEST(BaseStepRule, Defaults) {
  SolverConfig cfg;
  const StepSizes first = base_step_rule(0, std::nullopt, cfg);
  EXPECT_EQ(first.iota1, cfg.iota_lo);
  EXPECT_EQ(first.iota2, cfg.iota_lo);
  EXPECT_EQ(first.iota, cfg.iota_lo);
  const StepSizes low = base_step_rule(3, StepSizes{2e-4, 2e-4, 2e-4}, cfg);
  EXPECT_DOUBLE_EQ(low.iota1, cfg.iota_lo);
  const StepSizes high = base_step_rule(3, StepSizes{1e5, 8.0, 1e5}, cfg);
  EXPECT_DOUBLE_EQ(high.iota1, cfg.iota_hi);
  EXPECT_DOUBLE_EQ(high.iota2, 4.0);
  cfg.base_divisor = 0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.varrho = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.c1 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.iota_lo = 2e4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

// Oracle (tests/oracles/step_oracle.py): M = 3, X = Y = 1, base step 1 is
// rejected once and accepted at iota = 2 with X = Y = 2, f = 0.5.
TEST(JaJStep, ScalarOracle) {
  const ObservedMatrix data(1, 1, {{0, 0, 3.0}});
  const Matrix x = Matrix::Constant(1, 1, 1.0);
  const Matrix y = Matrix::Constant(1, 1, 1.0);
  const std::vector<double> s{0.0};
  const auto res = residual(x, y, s, data);
  const FactorGradients g = grad_factors(res.values, x, y, data);
  SolverConfig cfg;
  const JointStepResult step =
      ja_j_step(data, s, LossKind::squared(), x, y, g, loss_value(res, LossKind::squared()),
                kIdentityColumn, kIdentityColumn, kNoFactorPenalty, cfg.c1, 1.0, 1.0, cfg);
  EXPECT_DOUBLE_EQ(step.iota1, 2.0);
  EXPECT_DOUBLE_EQ(step.iota2, 2.0);
  EXPECT_EQ(step.backtracks, 1);
  EXPECT_DOUBLE_EQ(step.x(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(step.y(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(step.value, 0.5);
  EXPECT_DOUBLE_EQ(step.product[0], 4.0);
}

TEST(JaJStep, FixedPointAcceptedImmediately) {
  const ObservedMatrix data(1, 1, {{0, 0, 4.0}});
  const Matrix x = Matrix::Constant(1, 1, 2.0);
  const Matrix y = Matrix::Constant(1, 1, 2.0);
  const std::vector<double> s{0.0};
  const auto res = residual(x, y, s, data);
  const FactorGradients g = grad_factors(res.values, x, y, data);
  SolverConfig cfg;
  const JointStepResult step = ja_j_step(data, s, LossKind::squared(), x, y, g, 0.0,
                                         kIdentityColumn, kIdentityColumn, kNoFactorPenalty,
                                         cfg.c1, 1e-4, 1e-4, cfg);
  EXPECT_EQ(step.backtracks, 0);
  EXPECT_EQ(step.x(0, 0), 2.0);
  EXPECT_EQ(step.y(0, 0), 2.0);
}

TEST(JaJStep, NonFiniteDataAborts) {
  const ObservedMatrix data(1, 1, {{0, 0, 3.0}});
  const Matrix x = Matrix::Constant(1, 1, 1.0);
  const std::vector<double> s{0.0};
  FactorGradients g{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  SolverConfig cfg;
  cfg.max_backtracks = 5;
  // A reference value no candidate can reach.
  EXPECT_THROW(ja_j_step(data, s, LossKind::squared(), x, x, g, -1.0, kIdentityColumn,
                         kIdentityColumn, kNoFactorPenalty, cfg.c1, 1.0, 1.0, cfg),
               std::runtime_error);
}

EntryProx l0_entry(double beta) {
  return [beta](std::size_t, double iota, double z) {
    return prox_scalar_l0(z, beta / iota, -5.0, 5.0);
  };
}

EntryPenalty l0_penalty(double beta) {
  return [beta](const std::vector<double>& s) { return beta * static_cast<double>(count_nonzero(s)); };
}

// Oracle: M = 3, Z = 1, S = 0, beta = 0.5. Base 1 is accepted with S = 2;
// base 0.125 backtracks three times to the same point.
TEST(JaAStep, ScalarOracle) {
  const ObservedMatrix data(1, 1, {{0, 0, 3.0}});
  const std::vector<double> product{1.0};
  const std::vector<double> s{0.0};
  const std::vector<double> grad{-2.0};
  SolverConfig cfg;
  for (const auto& [base, backtracks] : {std::pair{1.0, 0}, std::pair{0.125, 3}}) {
    const SparseStepResult step = ja_a_step(data, product, s, grad, LossKind::squared(), 2.0,
                                            l0_entry(0.5), l0_penalty(0.5), cfg.c2, base, cfg);
    EXPECT_DOUBLE_EQ(step.iota, 1.0);
    EXPECT_EQ(step.backtracks, backtracks);
    EXPECT_DOUBLE_EQ(step.s_values[0], 2.0);
    EXPECT_DOUBLE_EQ(step.value, 0.5);
  }
}

TEST(JaAStep, ZeroGradientLeavesFixedPoint) {
  const ObservedMatrix data(1, 2, {{0, 0, 3.0}, {0, 1, 1.0}});
  const std::vector<double> product{1.0, 1.0};
  const std::vector<double> s{2.0, 0.0};
  const std::vector<double> grad{0.0, 0.0};
  SolverConfig cfg;
  const SparseStepResult step = ja_a_step(data, product, s, grad, LossKind::squared(), 0.5,
                                          l0_entry(0.5), l0_penalty(0.5), cfg.c2, 1.0, cfg);
  EXPECT_EQ(step.backtracks, 0);
  EXPECT_EQ(step.s_values, s);
}

TEST(JaAStep, ActiveSetLeavesOtherEntries) {
  const ObservedMatrix data(1, 2, {{0, 0, 3.0}, {0, 1, 4.0}});
  const std::vector<double> product{1.0, 1.0};
  const std::vector<double> s{0.0, 0.0};
  const std::vector<double> grad{-2.0, -3.0};
  const std::vector<std::size_t> active{0};
  SolverConfig cfg;
  const SparseStepResult step =
      ja_a_step(data, product, s, grad, LossKind::squared(), 0.5 * (4.0 + 9.0), l0_entry(0.5),
                l0_penalty(0.5), cfg.c2, 1.0, cfg, std::span<const std::size_t>(active));
  EXPECT_DOUBLE_EQ(step.s_values[0], 2.0);
  EXPECT_EQ(step.s_values[1], 0.0);
}

TEST(BranchTags, Definition) {
  Matrix v = Matrix::Zero(2, 3);
  v.col(0) << 3.0, 4.0;
  v.col(1) << 0.3, 0.4;
  EXPECT_EQ(column_branch_tags(v, 5.0, true), (std::vector<int>{2, 1, 1}));
  EXPECT_EQ(column_branch_tags(v, 0.5, true), (std::vector<int>{2, 2, 1}));
  EXPECT_EQ(column_branch_tags(v, 0.5, false), (std::vector<int>{2, 2, 2}));
  const std::vector<double> s{0.0, -0.5, 0.7};
  EXPECT_EQ(entry_branch_tags(s, 0.5, true), (std::vector<int>{1, 2, 2}));
  EXPECT_EQ(entry_branch_tags(s, 1.0, true), (std::vector<int>{1, 1, 1}));
}

TEST(SolveJapg, UnregularizedFactorizationConverges) {
  Rng rng(21);
  const Matrix truth = testing::random_matrix(rng, 20, 2) * testing::random_matrix(rng, 20, 2).transpose();
  const ObservedMatrix data = testing::full_observed(truth);
  ProblemSpec problem;
  problem.constraints.s_lower = 0.0;
  problem.constraints.s_upper = 0.0;
  SolverConfig cfg;
  cfg.rel_tol = 0.0;
  FactorState init = FactorState::zeros(20, 20, 2, data.size());
  init.x = testing::random_matrix(rng, 20, 2, 0.5);
  init.y = testing::random_matrix(rng, 20, 2, 0.5);
  const double start = objective_exact(init, data, problem.penalties);
  std::vector<double> values;
  const SolveResult out =
      solve_japg(data, problem, ExactL0{}, cfg, init,
                 [&](const IterationView& v) { values.push_back(v.record.objective); });
  ASSERT_FALSE(values.empty());
  for (std::size_t k = 1; k < values.size(); ++k) EXPECT_LE(values[k], values[k - 1]);
  EXPECT_LE(values.back(), 1e-10 * start);
}

TEST(SolveJapg, FixedPointIsStationary) {
  const ObservedMatrix data(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}});
  FactorState init = FactorState::zeros(2, 2, 1, data.size());
  init.x.col(0) << 1.0, 2.0;
  init.y.col(0) << 1.0, 2.0;
  ProblemSpec problem;
  problem.penalties = {0.1, 0.0};
  problem.constraints.s_lower = 0.0;
  problem.constraints.s_upper = 0.0;
  SolverConfig cfg;
  cfg.max_iters = 5;
  cfg.rel_tol = 0.0;
  const SolveResult out = solve_japg(data, problem, ExactL0{}, cfg, init);
  EXPECT_TRUE((out.state.x.array() == init.x.array()).all());
  EXPECT_TRUE((out.state.y.array() == init.y.array()).all());
}

TEST(SolveJapg, HugeLambdaCollapsesFactors) {
  Rng rng(4);
  const ObservedMatrix data = testing::random_observed(rng, 6, 5, 0.8);
  double half_norm = 0.0;
  for (double v : data.values()) half_norm += 0.5 * v * v;
  ProblemSpec problem;
  problem.penalties = {2.0 * half_norm + 1.0, 0.0};
  problem.constraints.s_lower = 0.0;
  problem.constraints.s_upper = 0.0;
  const FactorState init = default_init(data, {6, 5, 2}, problem.constraints, 1);
  SolverConfig cfg;
  cfg.max_iters = 50;
  const SolveResult out = solve_japg(data, problem, ExactL0{}, cfg, init);
  EXPECT_EQ(count_nonzero_columns(out.state.x), 0);
  EXPECT_EQ(count_nonzero_columns(out.state.y), 0);
}

TEST(SolveJapg, RejectsInfeasibleInit) {
  const ObservedMatrix data(1, 1, {{0, 0, 1.0}});
  FactorState init = FactorState::zeros(1, 1, 1, 1);
  init.x(0, 0) = 5.0;
  ProblemSpec problem;
  problem.constraints.tau = 1.0;
  EXPECT_THROW(solve_japg(data, problem, ExactL0{}, SolverConfig{}, init), std::invalid_argument);
}

struct SyntheticRun {
  SyntheticInstance inst;
  DerivedParams params;
  ProblemSpec problem;
  FactorState init;
};

SyntheticRun small_synthetic(std::uint64_t seed, double beta, double lambda) {
  SyntheticSpec spec;
  spec.n = 40;
  spec.true_rank = 2;
  spec.corruption_fraction = 0.05;
  spec.seed = seed;
  SyntheticRun run{generate_synthetic(spec), {}, {}, FactorState::zeros(1, 1, 1, 1)};
  const ProblemDims dims{40, 40, 6};
  const double a = run.inst.observed.max_abs_value();
  run.params = derive_params(dims, beta, a, a, lambda);
  run.problem.penalties = run.params.penalties;
  run.problem.constraints = {run.params.tau, -a, a};
  run.init = default_init(run.inst.observed, dims, run.problem.constraints, seed + 100);
  return run;
}

TEST(SolveAjapg, RecoversSmallInstanceAndCertifies) {
  const SyntheticRun run = small_synthetic(3, 0.1, 40.0);
  SolverConfig cfg;
  cfg.rel_tol = 0.0;
  const SolveResult out =
      solve_ajapg(run.inst.observed, run.problem, run.params.relaxation, cfg, run.init);
  EXPECT_EQ(count_nonzero_columns(out.state.x), 2);
  EXPECT_LE(rse(out.state.x, out.state.y, run.inst.truth.z_low), 1e-2);
  const StationarityReport rep =
      certify(out.state, run.inst.observed, run.problem.penalties, run.problem.constraints,
              *run.params.relaxation.r, *run.params.relaxation.s);
  EXPECT_TRUE(rep.consistency_ok);
  EXPECT_TRUE(rep.isolation_ok);
  EXPECT_LE(std::abs(rep.objective - rep.relaxed_objective), 1e-12 * (1.0 + rep.objective));
}

TEST(SolveAjapg, PrunedColumnsStayPruned) {
  const SyntheticRun run = small_synthetic(5, 0.1, 40.0);
  SolverConfig cfg;
  int violations = 0;
  solve_ajapg(run.inst.observed, run.problem, run.params.relaxation, cfg, run.init,
              [&](const IterationView& v) {
                const auto before = support_columns(v.previous);
                const auto after_x = nonzero_columns(v.next.x);
                const auto after_y = nonzero_columns(v.next.y);
                for (std::size_t c = 0; c < before.size(); ++c) {
                  if (!before[c] && (after_x[c] || after_y[c])) ++violations;
                }
              });
  EXPECT_EQ(violations, 0);
}

TEST(SolveAjapg, ZeroInitWithLargeThresholdsStaysZero) {
  const ObservedMatrix data(2, 2, {{0, 0, 0.1}, {1, 1, -0.1}});
  ProblemSpec problem;
  problem.penalties = {1.0, 1.0};
  problem.constraints = {kInfinity, -1.0, 1.0};
  RelaxationParams rel;
  rel.r = 0.01;
  rel.s = 0.01;
  rel.r_schedule = ThresholdSchedule::constant(0.01);
  rel.s_schedule = ThresholdSchedule::constant(0.01);
  SolverConfig cfg;
  cfg.max_iters = 10;
  const SolveResult out =
      solve_ajapg(data, problem, rel, cfg, FactorState::zeros(2, 2, 1, data.size()));
  // Every gradient entry is 0.1 while the zero thresholds are lambda / (iota r) and
  // beta / (iota s) with iota <= 1e4, so the prox keeps everything at zero.
  EXPECT_TRUE((out.state.x.array() == 0.0).all());
  EXPECT_EQ(count_nonzero(out.state.s_values), 0u);
}

TEST(SolveAjapg, DeterministicTraces) {
  const SyntheticRun run = small_synthetic(7, 0.1, 40.0);
  SolverConfig cfg;
  std::ostringstream a, b;
  write_trace(a, solve_ajapg(run.inst.observed, run.problem, run.params.relaxation, cfg, run.init).trace,
              false);
  write_trace(b, solve_ajapg(run.inst.observed, run.problem, run.params.relaxation, cfg, run.init).trace,
              false);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
}

}  // namespace
}  // namespace rpca
