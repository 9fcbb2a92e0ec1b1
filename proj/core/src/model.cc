#include "rpca/model.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rpca {

namespace {

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

FactorState FactorState::zeros(int m, int n, int d, std::size_t omega_size) {
  return {Matrix::Zero(m, d), Matrix::Zero(n, d), std::vector<double>(omega_size, 0.0)};
}

void FactorState::check_compatible(const ObservedMatrix& data) const {
  if (x.rows() != data.rows() || y.rows() != data.cols() || x.cols() != y.cols() ||
      s_values.size() != data.size()) {
    throw std::invalid_argument("state dimensions do not match the observed matrix");
  }
}

std::vector<bool> nonzero_columns(const Matrix& v) {
  std::vector<bool> out(static_cast<std::size_t>(v.cols()), false);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    out[c] = (v.col(c).array() != 0.0).any();
  }
  return out;
}

int count_nonzero_columns(const Matrix& v) {
  auto nz = nonzero_columns(v);
  return static_cast<int>(std::count(nz.begin(), nz.end(), true));
}

std::vector<double> column_norms(const Matrix& v) {
  std::vector<double> out(static_cast<std::size_t>(v.cols()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) out[c] = column_norm(v.col(c));
  return out;
}

std::vector<bool> support_columns(const FactorState& state) {
  auto nx = nonzero_columns(state.x);
  auto ny = nonzero_columns(state.y);
  for (std::size_t c = 0; c < nx.size(); ++c) nx[c] = nx[c] && ny[c];
  return nx;
}

std::vector<std::size_t> support_entries(const FactorState& state) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < state.s_values.size(); ++k) {
    if (state.s_values[k] != 0.0) out.push_back(k);
  }
  return out;
}

std::size_t count_nonzero(const std::vector<double>& values) {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; }));
}

void ProblemDims::validate() const {
  if (m < 1 || n < 1) throw std::invalid_argument("problem dimensions must be positive");
  if (d < 1 || d > std::min(m, n)) {
    throw std::invalid_argument("rank budget d must satisfy 1 <= d <= min(m, n)");
  }
}

void PenaltyParams::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
}

void ConstraintSpec::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(s_lower <= 0.0) || !(s_upper >= 0.0)) {
    throw std::invalid_argument("S box must contain zero (s_lower <= 0 <= s_upper)");
  }
}

LipschitzBounds LipschitzBounds::from(const ProblemDims& dims, double a1, double a2) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw std::invalid_argument("a1 and a2 must be positive");
  const double m = dims.m;
  const double n = dims.n;
  LipschitzBounds b;
  b.a1 = a1;
  b.a2 = a2;
  b.delta = a1 * std::sqrt(m * n);
  b.l_x = n * (a1 + a2) * std::sqrt(m * b.delta);
  b.l_y = m * (a1 + a2) * std::sqrt(n * b.delta);
  b.l_s = a1 + a2;
  return b;
}

double ThresholdSchedule::at(int k) const {
  if (freeze_at && k >= *freeze_at) return floor;
  if (k <= plateau) return start;
  return std::max(start / static_cast<double>(k - plateau), floor);
}

int ThresholdSchedule::freeze_iteration() const {
  if (start <= floor) return 0;
  // Smallest k > plateau with start / (k - plateau) <= floor.
  double steps = std::ceil(start / floor);
  int k = plateau + static_cast<int>(std::max(1.0, steps));
  while (k > plateau + 1 && start / static_cast<double>(k - 1 - plateau) <= floor) --k;
  while (start / static_cast<double>(k - plateau) > floor) ++k;
  if (freeze_at) k = std::min(k, std::max(*freeze_at, 0));
  return k;
}

DerivedParams derive_params(const ProblemDims& dims, double beta, double a1, double a2,
                            std::optional<double> lambda_override, int k_max) {
  dims.validate();
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  if (k_max < 0) throw std::invalid_argument("k_max must be nonnegative");
  DerivedParams out;
  out.bounds = LipschitzBounds::from(dims, a1, a2);
  out.penalties.beta = beta;
  if (lambda_override) {
    out.penalties.lambda = *lambda_override;
  } else if (beta != 0.0) {
    out.penalties.lambda = std::sqrt(static_cast<double>(std::max(dims.m, dims.n))) * beta / 2.0;
  } else {
    throw std::invalid_argument("beta = 0: lambda must be supplied explicitly");
  }
  out.penalties.validate();
  out.tau = std::sqrt(out.bounds.delta);

  RelaxationParams& rel = out.relaxation;
  rel.k_max = k_max;
  const double lambda = out.penalties.lambda;
  if (lambda > 0.0) {
    const double r = 0.99 * lambda / std::max(out.bounds.l_x, out.bounds.l_y);
    rel.r = r;
    rel.r_schedule = {std::sqrt(2.0 * lambda), r, k_max, std::nullopt};
  }
  if (beta > 0.0) {
    const double s = 0.99 * beta / out.bounds.l_s;
    rel.s = s;
    rel.s_schedule = {std::sqrt(2.0 * beta), s, k_max, std::nullopt};
  }
  validate_relaxation(rel, out.penalties, out.bounds, out.tau);
  return out;
}

void validate_relaxation(const RelaxationParams& rel, const PenaltyParams& p,
                         const LipschitzBounds& bounds, double tau) {
  p.validate();
  if (!(rel.eta_tilde > 0.0) || rel.eta_tilde > 1.0) {
    // For theta_1(t) = t the subgradient infimum is 1.
    throw std::invalid_argument("eta_tilde must lie in (0, 1] for the capped-l1 relaxation");
  }
  const double eta = std::min(1.0, rel.eta_tilde);
  if (p.lambda > 0.0) {
    if (!rel.r) throw std::invalid_argument("lambda > 0 requires a column threshold r");
    const double bound = std::min(eta * p.lambda / std::max(bounds.l_x, bounds.l_y), tau);
    if (!(*rel.r > 0.0) || !(*rel.r < bound)) {
      throw std::invalid_argument("r = " + format(*rel.r) +
                                  " violates 0 < r < min(min(1, eta) lambda / max(L_X, L_Y), "
                                  "tau) = " + format(bound));
    }
    if (rel.r_schedule.floor != *rel.r || rel.r_schedule.start < rel.r_schedule.floor) {
      throw std::invalid_argument("r schedule must be non-increasing and settle at r");
    }
  } else if (rel.r) {
    throw std::invalid_argument("lambda = 0: column threshold r must be disabled");
  }
  if (p.beta > 0.0) {
    if (!rel.s) throw std::invalid_argument("beta > 0 requires an entry threshold s");
    const double bound = eta * p.beta / bounds.l_s;
    if (!(*rel.s > 0.0) || !(*rel.s < bound)) {
      throw std::invalid_argument("s = " + format(*rel.s) +
                                  " violates 0 < s < min(1, eta) beta / L_S = " + format(bound));
    }
    if (rel.s_schedule.floor != *rel.s || rel.s_schedule.start < rel.s_schedule.floor) {
      throw std::invalid_argument("s schedule must be non-increasing and settle at s");
    }
  } else if (rel.s) {
    throw std::invalid_argument("beta = 0: entry threshold s must be disabled");
  }
}

double column_penalty_exact(const Matrix& v) {
  return static_cast<double>(count_nonzero_columns(v));
}

double column_penalty_relaxed(const Matrix& v, double rho) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < v.cols(); ++c) sum += std::min(column_norm(v.col(c)) / rho, 1.0);
  return sum;
}

double entry_penalty_relaxed(const std::vector<double>& s_values, double rho) {
  double sum = 0.0;
  for (double s : s_values) sum += std::min(std::abs(s) / rho, 1.0);
  return sum;
}

double objective_exact(const FactorState& state, const ObservedMatrix& data,
                       const PenaltyParams& p, const LossKind& loss) {
  state.check_compatible(data);
  const double f = loss_value(residual(state.x, state.y, state.s_values, data), loss);
  return f + p.lambda * (column_penalty_exact(state.x) + column_penalty_exact(state.y)) +
         p.beta * static_cast<double>(count_nonzero(state.s_values));
}

double objective_relaxed(const FactorState& state, const ObservedMatrix& data,
                         const PenaltyParams& p, double rho_r, double rho_s,
                         const LossKind& loss) {
  if (!(rho_r > 0.0) || !(rho_s > 0.0)) {
    throw std::invalid_argument("relaxation scales must be positive");
  }
  state.check_compatible(data);
  const double f = loss_value(residual(state.x, state.y, state.s_values, data), loss);
  return f +
         p.lambda * (column_penalty_relaxed(state.x, rho_r) +
                     column_penalty_relaxed(state.y, rho_r)) +
         p.beta * entry_penalty_relaxed(state.s_values, rho_s);
}

}  // namespace rpca
