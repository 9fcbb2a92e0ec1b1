#include "rpca/stationarity.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rpca {

namespace {

constexpr double kBoundaryTol = 1e-12;

// Distance from 0 to the interval [lo, hi].
double distance_to_interval(double lo, double hi) {
  if (lo > 0.0) return lo;
  if (hi < 0.0) return -hi;
  return 0.0;
}

double column_block_residual(const Matrix& v, const Matrix& g, double lambda, double r,
                             double tau) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double norm = column_norm(v.col(c));
    Vector grad = g.col(c);
    if (norm == 0.0) {
      // Subdifferential of the linear branch at 0: ball of radius lambda / r.
      const double slab = lambda > 0.0 ? lambda / r : 0.0;
      const double excess = std::max(0.0, grad.norm() - slab);
      sum += excess * excess;
      continue;
    }
    if (lambda > 0.0 && norm < r) grad += (lambda / r / norm) * v.col(c);
    if (std::isfinite(tau) && norm >= tau * (1.0 - kBoundaryTol)) {
      // Normal cone of the ball at a boundary point: the outward ray.
      const Vector u = v.col(c) / norm;
      const double radial = grad.dot(u);
      if (radial < 0.0) grad -= radial * u;
    }
    sum += grad.squaredNorm();
  }
  return std::sqrt(sum);
}

double entry_block_residual(const std::vector<double>& s_values, const std::vector<double>& h_s,
                            double beta, double s, const ConstraintSpec& box) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t e = 0; e < s_values.size(); ++e) {
    const double v = s_values[e];
    double lo = h_s[e];
    double hi = h_s[e];
    if (beta > 0.0) {
      const double slope = beta / s;
      if (v == 0.0) {
        lo -= slope;
        hi += slope;
      } else if (std::abs(v) < s) {
        lo += v > 0.0 ? slope : -slope;
        hi = lo;
      }
    }
    if (v == box.s_lower) lo = -inf;
    if (v == box.s_upper) hi = inf;
    const double dist = distance_to_interval(lo, hi);
    sum += dist * dist;
  }
  return std::sqrt(sum);
}

struct Gradients {
  FactorGradients factors;
  std::vector<double> h_s;
};

Gradients gradients_at(const FactorState& state, const ObservedMatrix& data,
                       const LossKind& loss) {
  SparseResidual res = residual(state.x, state.y, state.s_values, data);
  Gradients g;
  g.h_s = grad_sparse(res, loss);
  g.factors = grad_factors(g.h_s, state.x, state.y, data);
  return g;
}

double kkt_from(const Gradients& g, const FactorState& state, const PenaltyParams& penalties,
                const ConstraintSpec& constraints, double r, double s) {
  const double rx =
      column_block_residual(state.x, g.factors.gx, penalties.lambda, r, constraints.tau);
  const double ry =
      column_block_residual(state.y, g.factors.gy, penalties.lambda, r, constraints.tau);
  const double rs = entry_block_residual(state.s_values, g.h_s, penalties.beta, s, constraints);
  return std::max({rx, ry, rs});
}

}  // namespace

bool check_consistency(const FactorState& state, double lambda) {
  if (lambda == 0.0) return true;
  return nonzero_columns(state.x) == nonzero_columns(state.y);
}

bool check_isolation(const FactorState& state, double r, double s,
                     const PenaltyParams& penalties) {
  if (penalties.lambda > 0.0) {
    for (const Matrix* v : {&state.x, &state.y}) {
      for (double norm : column_norms(*v)) {
        if (norm > 0.0 && norm < r) return false;
      }
    }
  }
  if (penalties.beta > 0.0) {
    for (double v : state.s_values) {
      const double a = std::abs(v);
      if (a > 0.0 && a < s) return false;
    }
  }
  return true;
}

double kkt_residual(const FactorState& state, const ObservedMatrix& data,
                    const PenaltyParams& penalties, const ConstraintSpec& constraints,
                    double r, double s, const LossKind& loss) {
  state.check_compatible(data);
  return kkt_from(gradients_at(state, data, loss), state, penalties, constraints, r, s);
}

StationarityReport certify(const FactorState& state, const ObservedMatrix& data,
                           const PenaltyParams& penalties, const ConstraintSpec& constraints,
                           double r, double s, const LossKind& loss, double tol) {
  state.check_compatible(data);
  StationarityReport report;
  const Gradients g = gradients_at(state, data, loss);
  report.consistency_ok = check_consistency(state, penalties.lambda);
  report.isolation_ok = check_isolation(state, r, s, penalties);
  report.kkt_residual = kkt_from(g, state, penalties, constraints, r, s);
  double gsq = g.factors.gx.squaredNorm() + g.factors.gy.squaredNorm();
  for (double h : g.h_s) gsq += h * h;
  report.gradient_norm = std::sqrt(gsq);
  report.nnzc_x = count_nonzero_columns(state.x);
  report.nnzc_y = count_nonzero_columns(state.y);
  report.nnz_s = count_nonzero(state.s_values);
  report.objective = objective_exact(state, data, penalties, loss);
  report.relaxed_objective = objective_relaxed(state, data, penalties, r, s, loss);
  report.strong_stationary = report.consistency_ok && report.isolation_ok &&
                             report.kkt_residual <= tol * (1.0 + report.gradient_norm);
  return report;
}

}  // namespace rpca
