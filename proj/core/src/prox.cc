#include "rpca/prox.h"
#include "rpca/types.h"

#include <algorithm>
#include <array>
#include <cmath>

namespace rpca {

namespace {

// Minimizes the radial objective over [0, limit] where limit = min(tau, norm)
// for the capped branch. Candidates: the soft-threshold radius clamped to the
// linear piece, the projection clamped to the constant piece, and the kink.
double capped_radius(double norm, double gamma, double rho, double tau) {
  const double limit = std::min(tau, norm);
  std::array<double, 3> candidates{};
  int count = 0;
  candidates[count++] = std::clamp(norm - gamma / rho, 0.0, std::min(rho, limit));
  if (rho <= limit) {
    candidates[count++] = limit;  // constant piece: closest point to norm in [rho, limit]
    candidates[count++] = rho;
  }
  double best_t = candidates[0];
  double best_v = radial_objective(best_t, norm, gamma, rho, Branch::kBoth);
  for (int k = 1; k < count; ++k) {
    double v = radial_objective(candidates[k], norm, gamma, rho, Branch::kBoth);
    if (v < best_v || (v == best_v && candidates[k] > best_t)) {
      best_t = candidates[k];
      best_v = v;
    }
  }
  return best_t;
}

// Same problem for a scalar whose magnitude may move within [0, bound].
double magnitude(double a, double bound, const ScalarPenalty& p) {
  switch (p.branch) {
    case Branch::kLinearOnly:
      return std::min(std::max(a - p.gamma / p.rho, 0.0), bound);
    case Branch::kConstantOnly:
      return std::min(a, bound);
    case Branch::kBoth:
      break;
  }
  return capped_radius(a, p.gamma, p.rho, bound);
}

// out = z * (t / norm), nudged so that ||out||_2 <= tau holds in floating point.
void scale_to_radius(Eigen::Ref<const Eigen::VectorXd> z, double norm, double t, double tau,
                     Eigen::Ref<Eigen::VectorXd> out) {
  out = z * (t / norm);
  if (t < tau) return;
  double factor = 1.0;
  while (column_norm(out) > tau) {
    factor = std::nextafter(factor, 0.0);
    out = z * (t / norm * factor);
  }
}

}  // namespace

double theta(double t, Branch branch) {
  switch (branch) {
    case Branch::kLinearOnly:
      return t;
    case Branch::kConstantOnly:
      return 1.0;
    case Branch::kBoth:
      break;
  }
  return std::min(t, 1.0);
}

double radial_objective(double t, double norm, double gamma, double rho, Branch branch) {
  const double diff = t - norm;
  return gamma * theta(t / rho, branch) + 0.5 * diff * diff;
}

double prox_group_radius(double norm, const GroupPenalty& p) {
  switch (p.branch) {
    case Branch::kLinearOnly:
      return std::min(std::max(norm - p.gamma / p.rho, 0.0), p.tau);
    case Branch::kConstantOnly:
      return std::min(norm, p.tau);
    case Branch::kBoth:
      break;
  }
  return capped_radius(norm, p.gamma, p.rho, p.tau);
}

void prox_group(Eigen::Ref<const Eigen::VectorXd> z, const GroupPenalty& p,
                Eigen::Ref<Eigen::VectorXd> out) {
  const double norm = column_norm(z);
  if (norm == 0.0) {
    out.setZero();
    return;
  }
  const double t = prox_group_radius(norm, p);
  if (t == 0.0) {
    out.setZero();
  } else if (t == norm) {
    out = z;
  } else {
    scale_to_radius(z, norm, t, p.tau, out);
  }
}

Eigen::VectorXd prox_group(const Eigen::VectorXd& z, const GroupPenalty& p) {
  Eigen::VectorXd out(z.size());
  prox_group(z, p, out);
  return out;
}

double prox_scalar(double z, const ScalarPenalty& p) {
  if (z == 0.0) return 0.0;
  const double bound = z > 0.0 ? p.upper : -p.lower;
  if (bound <= 0.0) return 0.0;
  const double a = std::abs(z);
  const double t = magnitude(a, bound, p);
  if (t == 0.0) return 0.0;
  return z > 0.0 ? t : -t;
}

void prox_group_l0(Eigen::Ref<const Eigen::VectorXd> z, double gamma, double tau,
                   Eigen::Ref<Eigen::VectorXd> out) {
  const double norm = column_norm(z);
  if (norm == 0.0) {
    out.setZero();
    return;
  }
  const double t = std::min(norm, tau);
  const double keep_cost = gamma + 0.5 * (norm - t) * (norm - t);
  const double zero_cost = 0.5 * norm * norm;
  if (zero_cost < keep_cost) {
    out.setZero();
  } else if (t == norm) {
    out = z;
  } else {
    scale_to_radius(z, norm, t, tau, out);
  }
}

Eigen::VectorXd prox_group_l0(const Eigen::VectorXd& z, double gamma, double tau) {
  Eigen::VectorXd out(z.size());
  prox_group_l0(z, gamma, tau, out);
  return out;
}

double prox_scalar_l0(double z, double gamma, double lower, double upper) {
  const double kept = std::clamp(z, lower, upper);
  if (kept == 0.0) return 0.0;
  const double keep_cost = gamma + 0.5 * (kept - z) * (kept - z);
  const double zero_cost = 0.5 * z * z;
  return zero_cost < keep_cost ? 0.0 : kept;
}

}  // namespace rpca
