#pragma once

#include <optional>
#include <string>

#include "rpca/factor_state.h"
#include "rpca/loss.h"
#include "rpca/observed_matrix.h"
#include "rpca/prox.h"

namespace rpca {

struct ProblemDims {
  int m = 1;
  int n = 1;
  int d = 1;  // factorization width

  void validate() const;
};

struct PenaltyParams {
  double lambda = 0.0;  // weight on nnzc(X) + nnzc(Y)
  double beta = 0.0;    // weight on ||S||_0

  void validate() const;
};

// Feasible set: ||X_i||_2, ||Y_i||_2 <= tau and s_lower <= S_ij <= s_upper.
// tau = infinity gives the unconstrained factorization. The S box is uniform
// across entries.
struct ConstraintSpec {
  double tau = kInfinity;
  double s_lower = -kInfinity;
  double s_upper = kInfinity;

  void validate() const;
};

// a1 bounds the entries of the feasible Z and S, a2 the entries of M.
struct LipschitzBounds {
  double a1 = 0.0;
  double a2 = 0.0;
  double delta = 0.0;  // a1 sqrt(mn)
  double l_x = 0.0;    // n (a1 + a2) sqrt(m delta)
  double l_y = 0.0;    // m (a1 + a2) sqrt(n delta)
  double l_s = 0.0;    // a1 + a2

  static LipschitzBounds from(const ProblemDims& dims, double a1, double a2);
};

// Annealed threshold: `start` for k <= plateau, then max(start / (k - plateau),
// floor). Non-increasing and equal to `floor` from freeze_iteration() on.
struct ThresholdSchedule {
  double start = 1.0;
  double floor = 1.0;
  int plateau = 0;
  // When set, the threshold drops to `floor` at this iteration at the latest.
  std::optional<int> freeze_at;

  double at(int k) const;
  int freeze_iteration() const;
  static ThresholdSchedule constant(double value) { return {value, value, 0, std::nullopt}; }
};

enum class ThetaKind { kCappedL1 };

struct RelaxationParams {
  ThetaKind theta1 = ThetaKind::kCappedL1;
  double eta_tilde = 1.0;  // lower bound of the theta_1 subgradient
  // Column threshold r; disabled (no column penalty) when lambda = 0.
  std::optional<double> r;
  // Entry threshold s; disabled when beta = 0.
  std::optional<double> s;
  int k_max = 10;
  ThresholdSchedule r_schedule;
  ThresholdSchedule s_schedule;

  // Iterations from which r_k = r and s_k = s.
  int freeze_r() const { return r ? r_schedule.freeze_iteration() : 0; }
  int freeze_s() const { return s ? s_schedule.freeze_iteration() : 0; }
};

struct DerivedParams {
  PenaltyParams penalties;
  LipschitzBounds bounds;
  double tau = kInfinity;
  RelaxationParams relaxation;
};

inline constexpr int kDefaultPlateau = 10;

// Parameter recipe for the squared-loss RPCA experiments: lambda =
// sqrt(max(m, n)) beta / 2 (unless overridden), r = 0.99 lambda /
// max(L_X, L_Y), s = 0.99 beta / L_S, tau = sqrt(Delta), and schedules that
// start at sqrt(2 lambda), sqrt(2 beta). With beta = 0 the entry threshold is
// disabled and lambda must be supplied.
DerivedParams derive_params(const ProblemDims& dims, double beta, double a1, double a2,
                            std::optional<double> lambda_override = std::nullopt,
                            int k_max = kDefaultPlateau);

// Checks the threshold conditions
//   0 < r < min(min(1, eta) lambda / max(L_X, L_Y), tau)   (lambda > 0)
//   0 < s < min(1, eta) beta / L_S                          (beta > 0)
// plus schedule monotonicity; throws std::invalid_argument naming the violated
// bound. Returns normally when every condition holds.
void validate_relaxation(const RelaxationParams& rel, const PenaltyParams& p,
                         const LipschitzBounds& bounds, double tau);

// F(X, Y, S) = f(XY^T, S) + lambda (nnzc(X) + nnzc(Y)) + beta ||S||_0.
double objective_exact(const FactorState& state, const ObservedMatrix& data,
                       const PenaltyParams& p, const LossKind& loss = LossKind::squared());

// F_theta(X, Y, S) = f + lambda (Theta^rho_r(X) + Theta^rho_r(Y)) + beta Theta~^rho_s(S)
// with theta(t) = min(t, 1).
double objective_relaxed(const FactorState& state, const ObservedMatrix& data,
                         const PenaltyParams& p, double rho_r, double rho_s,
                         const LossKind& loss = LossKind::squared());

// Penalty pieces, also used by the solvers on cached loss values.
double column_penalty_exact(const Matrix& v);
double column_penalty_relaxed(const Matrix& v, double rho);
double entry_penalty_relaxed(const std::vector<double>& s_values, double rho);

}  // namespace rpca
