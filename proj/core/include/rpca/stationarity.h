#pragma once

#include <cstddef>

#include "rpca/factor_state.h"
#include "rpca/loss.h"
#include "rpca/model.h"
#include "rpca/observed_matrix.h"

namespace rpca {

struct StationarityReport {
  bool consistency_ok = false;
  bool isolation_ok = false;
  double kkt_residual = 0.0;
  double gradient_norm = 0.0;  // ||(grad_X f, grad_Y f, grad_S f)||_F
  int nnzc_x = 0;
  int nnzc_y = 0;
  std::size_t nnz_s = 0;
  double objective = 0.0;          // F
  double relaxed_objective = 0.0;  // F_theta^{r, s}
  // consistency && isolation && kkt_residual <= tol * (1 + gradient_norm)
  bool strong_stationary = false;
};

// Nonzero-column sets of X and Y coincide. Vacuously true when lambda = 0.
bool check_consistency(const FactorState& state, double lambda = 1.0);

// No column norm of X or Y in (0, r) (skipped when lambda = 0) and no |S_ij|
// in (0, s) (skipped when beta = 0).
bool check_isolation(const FactorState& state, double r, double s,
                     const PenaltyParams& penalties);
inline bool check_isolation(const FactorState& state, double r, double s) {
  return check_isolation(state, r, s, PenaltyParams{1.0, 1.0});
}

// Residual of the first-order inclusion of the relaxed problem at scales
// (r, s), with branches fixed by the state itself. Per block, each column or
// entry contributes the distance from zero to gradient + penalty
// subdifferential + normal cone; the block residual is the Euclidean norm of
// those distances and the result is the largest of the three blocks.
double kkt_residual(const FactorState& state, const ObservedMatrix& data,
                    const PenaltyParams& penalties, const ConstraintSpec& constraints,
                    double r, double s, const LossKind& loss = LossKind::squared());

StationarityReport certify(const FactorState& state, const ObservedMatrix& data,
                           const PenaltyParams& penalties, const ConstraintSpec& constraints,
                           double r, double s, const LossKind& loss = LossKind::squared(),
                           double tol = 1e-4);

}  // namespace rpca
