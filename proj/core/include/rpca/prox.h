#pragma once

#include <limits>

#include <Eigen/Core>

namespace rpca {

// Which piece of the capped-l1 function theta(t) = min{t, 1} a prox uses.
//   kBoth         theta itself,
//   kLinearOnly   theta_1(t) = t on all of R_+,
//   kConstantOnly theta_2(t) = 1 on all of R_+.
// The solver's branch indices select kLinearOnly for tag 1 and kConstantOnly
// for tag 2.
enum class Branch { kBoth, kLinearOnly, kConstantOnly };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// gamma * theta_branch(||x||_2 / rho) + indicator(||x||_2 <= tau).
struct GroupPenalty {
  double gamma = 0.0;
  double rho = 1.0;
  Branch branch = Branch::kBoth;
  double tau = kInfinity;
};

// gamma * theta_branch(|x| / rho) + indicator(lower <= x <= upper).
struct ScalarPenalty {
  double gamma = 0.0;
  double rho = 1.0;
  Branch branch = Branch::kBoth;
  double lower = -kInfinity;
  double upper = kInfinity;
};

double theta(double t, Branch branch);

// Value of the 1-D radial prox objective gamma*theta(t/rho) + (t - norm)^2/2.
double radial_objective(double t, double norm, double gamma, double rho, Branch branch);

// Optimal radius of prox_group for an input of Euclidean norm `norm`.
double prox_group_radius(double norm, const GroupPenalty& p);

// Exact prox of the group capped-l1 penalty with a ball constraint. Ties are
// broken toward the larger radius. The output is exactly zero or exactly the
// input whenever the optimal radius is 0 or ||z||.
void prox_group(Eigen::Ref<const Eigen::VectorXd> z, const GroupPenalty& p,
                Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd prox_group(const Eigen::VectorXd& z, const GroupPenalty& p);

double prox_scalar(double z, const ScalarPenalty& p);

// prox of gamma * 1[x != 0] + indicator(||x||_2 <= tau).
void prox_group_l0(Eigen::Ref<const Eigen::VectorXd> z, double gamma, double tau,
                   Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd prox_group_l0(const Eigen::VectorXd& z, double gamma, double tau);

// prox of gamma * 1[x != 0] + indicator(lower <= x <= upper).
double prox_scalar_l0(double z, double gamma, double lower, double upper);

}  // namespace rpca
