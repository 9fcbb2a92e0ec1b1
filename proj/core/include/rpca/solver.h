#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rpca/factor_state.h"
#include "rpca/loss.h"
#include "rpca/model.h"
#include "rpca/observed_matrix.h"

namespace rpca {

struct SolverConfig {
  double iota_lo = 1e-4;  // lower bound of the base step sizes
  double iota_hi = 1e4;   // upper bound of the base step sizes
  double varrho = 2.0;    // backtracking growth factor (> 1)
  // Each base step is the previous accepted step divided by this (>= 1).
  double base_divisor = 2.0;
  double c_min = 1e-4;
  double c_max = 1e-4;
  double c1 = 1e-4;  // sufficient-decrease constant of the factor step
  double c2 = 1e-4;  // sufficient-decrease constant of the sparse step
  int max_iters = 500;
  double rel_tol = 1e-5;  // on |F(W^{k+1}) - F(W^k)| / max(1, F(W^{k+1}))
  int max_backtracks = 60;
  // Re-check feasibility and support inclusions after every iteration and
  // throw std::logic_error on violation.
  bool check_invariants = true;

  void validate() const;
};

// Data term, penalty weights and feasible set shared by both solvers.
struct ProblemSpec {
  PenaltyParams penalties;
  ConstraintSpec constraints;
  LossKind loss = LossKind::squared();
};

struct StepSizes {
  double iota1 = 0.0;
  double iota2 = 0.0;
  double iota = 0.0;
};

// Warm start: previous accepted step divided by base_divisor, clamped to
// [iota_lo, iota_hi]; the first iteration uses iota_lo.
StepSizes base_step_rule(int k, const std::optional<StepSizes>& previous,
                         const SolverConfig& cfg);

// Column-separable prox for the factor step: writes prox of the column
// penalty scaled by 1/iota at `input` into `output`.
using ColumnProx = std::function<void(int column, double iota, Eigen::Ref<const Vector> input,
                                      Eigen::Ref<Vector> output)>;
// Entry-separable prox for the sparse step; `entry` indexes Omega.
using EntryProx = std::function<double(std::size_t entry, double iota, double input)>;
// lambda (u(X) + v(Y)) as used in f_J.
using FactorPenalty = std::function<double(const Matrix& x, const Matrix& y)>;
// beta w(S) as used in f_A.
using EntryPenalty = std::function<double(const std::vector<double>& s_values)>;

struct JointStepResult {
  Matrix x;
  Matrix y;
  double iota1 = 0.0;
  double iota2 = 0.0;
  int backtracks = 0;             // rejected trials before acceptance
  double loss = 0.0;              // f(X_new Y_new^T, S)
  double value = 0.0;             // f_J(X_new, Y_new; S)
  std::vector<double> product;    // (X_new Y_new^T) on Omega
};

// Factor step: candidates X_i = prox_x(X_i - (G_X)_i / iota1), Y_i likewise,
// with iota_l = base * varrho^(l - 1), until
//   f_J(X_new, Y_new) <= reference_value - c1/2 ||(X_new, Y_new) - (X, Y)||^2.
// Gradients are not re-evaluated during backtracking.
JointStepResult ja_j_step(const ObservedMatrix& data, std::span<const double> s_values,
                          const LossKind& loss, const Matrix& x, const Matrix& y,
                          const FactorGradients& grads, double reference_value,
                          const ColumnProx& prox_x, const ColumnProx& prox_y,
                          const FactorPenalty& penalty, double c1, double iota1_base,
                          double iota2_base, const SolverConfig& cfg);

struct SparseStepResult {
  std::vector<double> s_values;
  double iota = 0.0;
  int backtracks = 0;
  double loss = 0.0;   // f(Z, S_new)
  double value = 0.0;  // f_A(S_new)
};

// Sparse step on Omega at the fixed product Z = X_new Y_new^T:
//   S_new = prox_s(S - grad_s / iota), accepted once
//   f_A(S_new) <= reference_value - c2/2 ||S_new - S||^2.
// When `active` is given only those Omega entries are updated and all other
// entries are kept at their current value.
SparseStepResult ja_a_step(const ObservedMatrix& data, std::span<const double> product,
                           std::span<const double> s_values, std::span<const double> grad_s,
                           const LossKind& loss, double reference_value,
                           const EntryProx& prox_s, const EntryPenalty& penalty, double c2,
                           double iota_base, const SolverConfig& cfg,
                           std::optional<std::span<const std::size_t>> active = std::nullopt);

// One solver iteration as recorded in the trace.
struct IterationRecord {
  int k = 0;                       // produces W^{k+1} from W^k
  double r_k = 0.0;                // column threshold in use (0 if disabled)
  double s_k = 0.0;                // entry threshold in use (0 if disabled)
  double objective = 0.0;          // F(W^{k+1})
  double relaxed_objective = 0.0;  // G(W^{k+1}); F_theta^{r_k, s_k} for AJA-PG
  double reference_objective = 0.0;  // G at the step's starting point
  double displacement = 0.0;       // ||W^{k+1} - starting point||_F
  double step_norm = 0.0;          // ||W^{k+1} - W^k||_F
  double iota1 = 0.0;
  double iota2 = 0.0;
  double iota = 0.0;
  int backtracks_joint = 0;
  int backtracks_sparse = 0;
  int support_cols = 0;            // |I_X^{k+1} cap I_Y^{k+1}|
  int nnzc_x = 0;
  int nnzc_y = 0;
  std::size_t support_entries = 0;  // ||S^{k+1}||_0
  std::size_t off_support_violations = 0;  // frozen-S entries the prox would revive
  double seconds = 0.0;            // wall clock since the solve started
};

enum class StopReason { kConverged, kMaxIterations };
std::string to_string(StopReason reason);

struct RunTrace {
  std::vector<IterationRecord> iterations;
  StopReason stop = StopReason::kMaxIterations;
  double seconds = 0.0;
};

struct SolveResult {
  FactorState state;
  RunTrace trace;
};

// Read-only view of one iteration handed to an observer. `reference` is the
// starting point of the step: W^k for JA-PG and W^k restricted to the live
// column support for AJA-PG.
struct IterationView {
  const IterationRecord& record;
  const FactorState& previous;
  const FactorState& reference;
  const FactorState& next;
};
using IterationObserver = std::function<void(const IterationView&)>;

// Regularizers for JA-PG: the exact nnzc / l0 penalties, or the capped-l1
// relaxation with fixed scales.
struct ExactL0 {};
struct FixedCappedL1 {
  double rho_r = 1.0;
  double rho_s = 1.0;
};
using Regularizer = std::variant<ExactL0, FixedCappedL1>;

// JA-PG: joint prox-gradient step on (X, Y), then prox-gradient on S, each
// with backtracking, until the relative change of F drops below rel_tol or
// max_iters is reached. `init` must be feasible.
SolveResult solve_japg(const ObservedMatrix& data, const ProblemSpec& problem,
                       const Regularizer& regularizer, const SolverConfig& cfg,
                       FactorState init, const IterationObserver& observer = {});

// AJA-PG on the capped-l1 relaxation: columns outside I_k are zeroed before
// each step, prox calls use the branch fixed by the current iterate at the
// scheduled thresholds (r_k, s_k), and once s_k is frozen only the live S
// entries are updated.
SolveResult solve_ajapg(const ObservedMatrix& data, const ProblemSpec& problem,
                        const RelaxationParams& relaxation, const SolverConfig& cfg,
                        FactorState init, const IterationObserver& observer = {});

// Branch tag per column / entry: 2 when the scaled magnitude is >= 1 (the
// constant piece is active, ties to 2) and 1 otherwise. All tags are 2 when
// the corresponding weight is zero.
std::vector<int> column_branch_tags(const Matrix& v, double rho, bool enabled);
std::vector<int> entry_branch_tags(std::span<const double> s_values, double rho, bool enabled);

// Feasibility of a state for the given constraints (exact).
bool is_feasible(const FactorState& state, const ConstraintSpec& constraints);

}  // namespace rpca
