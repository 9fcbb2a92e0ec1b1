#include "rpca/solver.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rpca/prox.h"

namespace rpca {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

double squared_distance(const FactorState& a, const FactorState& b) {
  return (a.x - b.x).squaredNorm() + (a.y - b.y).squaredNorm() +
         squared_distance(a.s_values, b.s_values);
}

// Candidate columns: out_i = prox(v_i - g_i / iota).
void prox_columns(const Matrix& v, const Matrix& g, double iota, const ColumnProx& prox,
                  Matrix& out) {
  out.resize(v.rows(), v.cols());
  Vector input(v.rows());
  Vector output(v.rows());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    input = v.col(c) - g.col(c) / iota;
    prox(static_cast<int>(c), iota, input, output);
    out.col(c) = output;
  }
}

void check_finite(double value, const char* what, int k) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite " << what << " at iteration " << k;
    throw std::runtime_error(os.str());
  }
}

[[noreturn]] void backtrack_failure(const char* step, int attempts, double reference) {
  std::ostringstream os;
  os << step << ": no step accepted after " << attempts
     << " backtracking trials (reference value " << reference
     << "); check the data for non-finite values";
  throw std::runtime_error(os.str());
}

bool is_subset(const std::vector<bool>& a, const std::vector<bool>& b) {
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c] && !b[c]) return false;
  }
  return true;
}

// Shared bookkeeping of both solvers: evaluation of F, stopping rule, trace.
class Driver {
 public:
  Driver(const ObservedMatrix& data, const ProblemSpec& problem, const SolverConfig& cfg,
         const FactorState& init)
      : problem_(problem), cfg_(cfg), start_(Clock::now()) {
    cfg.validate();
    problem.penalties.validate();
    problem.constraints.validate();
    init.check_compatible(data);
    if (!is_feasible(init, problem.constraints)) {
      throw std::invalid_argument("initial point is not feasible");
    }
  }

  double exact_objective(double loss, const FactorState& s) const {
    const PenaltyParams& p = problem_.penalties;
    return loss + p.lambda * (column_penalty_exact(s.x) + column_penalty_exact(s.y)) +
           p.beta * static_cast<double>(count_nonzero(s.s_values));
  }

  // Fills support statistics, timing; returns whether to stop.
  bool finish(IterationRecord& rec, const FactorState& next, double previous_objective) {
    auto cx = nonzero_columns(next.x);
    auto cy = nonzero_columns(next.y);
    rec.nnzc_x = static_cast<int>(std::count(cx.begin(), cx.end(), true));
    rec.nnzc_y = static_cast<int>(std::count(cy.begin(), cy.end(), true));
    int both = 0;
    for (std::size_t c = 0; c < cx.size(); ++c) both += (cx[c] && cy[c]) ? 1 : 0;
    rec.support_cols = both;
    rec.support_entries = count_nonzero(next.s_values);
    rec.seconds = seconds_since(start_);
    check_finite(rec.objective, "objective", rec.k);
    if (cfg_.check_invariants && !is_feasible(next, problem_.constraints)) {
      throw std::logic_error("iterate left the feasible set at iteration " +
                             std::to_string(rec.k));
    }
    const double change = std::abs(rec.objective - previous_objective) /
                          std::max(1.0, rec.objective);
    return change <= cfg_.rel_tol;
  }

  double elapsed() const { return seconds_since(start_); }

 private:
  const ProblemSpec& problem_;
  const SolverConfig& cfg_;
  Clock::time_point start_;
};

}  // namespace

void SolverConfig::validate() const {
  if (!(iota_lo > 0.0) || !(iota_lo <= iota_hi)) {
    throw std::invalid_argument("step bounds must satisfy 0 < iota_lo <= iota_hi");
  }
  if (!(varrho > 1.0)) throw std::invalid_argument("varrho must exceed 1");
  if (!(base_divisor >= 1.0)) throw std::invalid_argument("base_divisor must be at least 1");
  if (!(c_min > 0.0) || !(c_min <= c_max)) {
    throw std::invalid_argument("decrease constants must satisfy 0 < c_min <= c_max");
  }
  if (c1 < c_min || c1 > c_max || c2 < c_min || c2 > c_max) {
    throw std::invalid_argument("c1 and c2 must lie in [c_min, c_max]");
  }
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (!(rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be nonnegative");
  if (max_backtracks < 1) throw std::invalid_argument("max_backtracks must be positive");
}

std::string to_string(StopReason reason) {
  return reason == StopReason::kConverged ? "converged" : "max_iterations";
}

StepSizes base_step_rule(int k, const std::optional<StepSizes>& previous,
                         const SolverConfig& cfg) {
  if (k == 0 || !previous) return {cfg.iota_lo, cfg.iota_lo, cfg.iota_lo};
  auto base = [&](double accepted) {
    return std::clamp(accepted / cfg.base_divisor, cfg.iota_lo, cfg.iota_hi);
  };
  return {base(previous->iota1), base(previous->iota2), base(previous->iota)};
}

JointStepResult ja_j_step(const ObservedMatrix& data, std::span<const double> s_values,
                          const LossKind& loss, const Matrix& x, const Matrix& y,
                          const FactorGradients& grads, double reference_value,
                          const ColumnProx& prox_x, const ColumnProx& prox_y,
                          const FactorPenalty& penalty, double c1, double iota1_base,
                          double iota2_base, const SolverConfig& cfg) {
  JointStepResult out;
  out.product.resize(data.size());
  double scale = 1.0;
  for (int l = 0; l < cfg.max_backtracks; ++l, scale *= cfg.varrho) {
    const double iota1 = iota1_base * scale;
    const double iota2 = iota2_base * scale;
    prox_columns(x, grads.gx, iota1, prox_x, out.x);
    prox_columns(y, grads.gy, iota2, prox_y, out.y);
    product_on_support(out.x, out.y, data, out.product);
    const double f = loss_value(residual_from_product(out.product, s_values, data), loss);
    const double value = f + penalty(out.x, out.y);
    const double moved = (out.x - x).squaredNorm() + (out.y - y).squaredNorm();
    if (value <= reference_value - 0.5 * c1 * moved) {
      out.iota1 = iota1;
      out.iota2 = iota2;
      out.backtracks = l;
      out.loss = f;
      out.value = value;
      return out;
    }
  }
  backtrack_failure("factor step", cfg.max_backtracks, reference_value);
}

SparseStepResult ja_a_step(const ObservedMatrix& data, std::span<const double> product,
                           std::span<const double> s_values, std::span<const double> grad_s,
                           const LossKind& loss, double reference_value,
                           const EntryProx& prox_s, const EntryPenalty& penalty, double c2,
                           double iota_base, const SolverConfig& cfg,
                           std::optional<std::span<const std::size_t>> active) {
  SparseStepResult out;
  const std::size_t size = data.size();
  double scale = 1.0;
  for (int l = 0; l < cfg.max_backtracks; ++l, scale *= cfg.varrho) {
    const double iota = iota_base * scale;
    out.s_values.assign(s_values.begin(), s_values.end());
    if (active) {
      for (std::size_t e : *active) out.s_values[e] = prox_s(e, iota, s_values[e] - grad_s[e] / iota);
    } else {
      for (std::size_t e = 0; e < size; ++e) {
        out.s_values[e] = prox_s(e, iota, s_values[e] - grad_s[e] / iota);
      }
    }
    const double f = loss_value(residual_from_product(product, out.s_values, data), loss);
    const double value = f + penalty(out.s_values);
    double moved = 0.0;
    for (std::size_t e = 0; e < size; ++e) {
      double diff = out.s_values[e] - s_values[e];
      moved += diff * diff;
    }
    if (value <= reference_value - 0.5 * c2 * moved) {
      out.iota = iota;
      out.backtracks = l;
      out.loss = f;
      out.value = value;
      return out;
    }
  }
  backtrack_failure("sparse step", cfg.max_backtracks, reference_value);
}

std::vector<int> column_branch_tags(const Matrix& v, double rho, bool enabled) {
  std::vector<int> tags(static_cast<std::size_t>(v.cols()), 2);
  if (!enabled) return tags;
  for (Eigen::Index c = 0; c < v.cols(); ++c) tags[c] = column_norm(v.col(c)) / rho >= 1.0 ? 2 : 1;
  return tags;
}

std::vector<int> entry_branch_tags(std::span<const double> s_values, double rho, bool enabled) {
  std::vector<int> tags(s_values.size(), 2);
  if (!enabled) return tags;
  for (std::size_t e = 0; e < s_values.size(); ++e) {
    tags[e] = std::abs(s_values[e]) / rho >= 1.0 ? 2 : 1;
  }
  return tags;
}

bool is_feasible(const FactorState& state, const ConstraintSpec& constraints) {
  if (std::isfinite(constraints.tau)) {
    for (double norm : column_norms(state.x)) {
      if (!(norm <= constraints.tau)) return false;
    }
    for (double norm : column_norms(state.y)) {
      if (!(norm <= constraints.tau)) return false;
    }
  }
  for (double s : state.s_values) {
    if (!(s >= constraints.s_lower && s <= constraints.s_upper)) return false;
  }
  return state.x.allFinite() && state.y.allFinite();
}

SolveResult solve_japg(const ObservedMatrix& data, const ProblemSpec& problem,
                       const Regularizer& regularizer, const SolverConfig& cfg,
                       FactorState init, const IterationObserver& observer) {
  Driver driver(data, problem, cfg, init);
  const double lambda = problem.penalties.lambda;
  const double beta = problem.penalties.beta;
  const ConstraintSpec& box = problem.constraints;
  const bool exact = std::holds_alternative<ExactL0>(regularizer);
  const FixedCappedL1 capped =
      exact ? FixedCappedL1{} : std::get<FixedCappedL1>(regularizer);
  if (!exact && (!(capped.rho_r > 0.0) || !(capped.rho_s > 0.0))) {
    throw std::invalid_argument("relaxation scales must be positive");
  }

  ColumnProx prox_col = [&](int, double iota, Eigen::Ref<const Vector> in,
                            Eigen::Ref<Vector> out) {
    if (exact) {
      prox_group_l0(in, lambda / iota, box.tau, out);
    } else {
      prox_group(in, GroupPenalty{lambda / iota, capped.rho_r, Branch::kBoth, box.tau}, out);
    }
  };
  EntryProx prox_entry = [&](std::size_t, double iota, double in) {
    if (exact) return prox_scalar_l0(in, beta / iota, box.s_lower, box.s_upper);
    return prox_scalar(in, ScalarPenalty{beta / iota, capped.rho_s, Branch::kBoth, box.s_lower,
                                         box.s_upper});
  };
  FactorPenalty factor_penalty = [&](const Matrix& x, const Matrix& y) {
    if (lambda == 0.0) return 0.0;
    if (exact) return lambda * (column_penalty_exact(x) + column_penalty_exact(y));
    return lambda * (column_penalty_relaxed(x, capped.rho_r) +
                     column_penalty_relaxed(y, capped.rho_r));
  };
  EntryPenalty entry_penalty = [&](const std::vector<double>& s) {
    if (beta == 0.0) return 0.0;
    if (exact) return beta * static_cast<double>(count_nonzero(s));
    return beta * entry_penalty_relaxed(s, capped.rho_s);
  };

  SolveResult result{std::move(init), {}};
  FactorState& state = result.state;
  std::vector<double> product(data.size());
  product_on_support(state.x, state.y, data, product);
  double current_loss =
      loss_value(residual_from_product(product, state.s_values, data), problem.loss);
  double current_objective = driver.exact_objective(current_loss, state);
  std::optional<StepSizes> previous_steps;

  for (int k = 0; k < cfg.max_iters; ++k) {
    SparseResidual res = residual_from_product(product, state.s_values, data);
    const double f_ref = loss_value(res, problem.loss);
    const FactorGradients grads =
        grad_factors(grad_sparse(res, problem.loss), state.x, state.y, data);
    const double joint_ref = f_ref + factor_penalty(state.x, state.y);
    const double reference_g = joint_ref + entry_penalty(state.s_values);
    const StepSizes base = base_step_rule(k, previous_steps, cfg);

    JointStepResult joint =
        ja_j_step(data, state.s_values, problem.loss, state.x, state.y, grads, joint_ref,
                  prox_col, prox_col, factor_penalty, cfg.c1, base.iota1, base.iota2, cfg);

    SparseResidual res_s = residual_from_product(joint.product, state.s_values, data);
    const std::vector<double> grad_s = grad_sparse(res_s, problem.loss);
    const double sparse_ref = joint.loss + entry_penalty(state.s_values);
    SparseStepResult sparse =
        ja_a_step(data, joint.product, state.s_values, grad_s, problem.loss, sparse_ref,
                  prox_entry, entry_penalty, cfg.c2, base.iota, cfg);

    FactorState next{std::move(joint.x), std::move(joint.y), std::move(sparse.s_values)};
    IterationRecord rec;
    rec.k = k;
    rec.r_k = exact ? 0.0 : capped.rho_r;
    rec.s_k = exact ? 0.0 : capped.rho_s;
    rec.objective = driver.exact_objective(sparse.loss, next);
    rec.relaxed_objective = sparse.value + factor_penalty(next.x, next.y);
    rec.reference_objective = reference_g;
    rec.displacement = std::sqrt(squared_distance(next, state));
    rec.step_norm = rec.displacement;
    rec.iota1 = joint.iota1;
    rec.iota2 = joint.iota2;
    rec.iota = sparse.iota;
    rec.backtracks_joint = joint.backtracks;
    rec.backtracks_sparse = sparse.backtracks;
    const bool converged = driver.finish(rec, next, current_objective);
    if (observer) observer(IterationView{rec, state, state, next});

    result.trace.iterations.push_back(rec);
    previous_steps = StepSizes{joint.iota1, joint.iota2, sparse.iota};
    state = std::move(next);
    product = std::move(joint.product);
    current_objective = rec.objective;
    if (converged) {
      result.trace.stop = StopReason::kConverged;
      break;
    }
  }
  result.trace.seconds = driver.elapsed();
  return result;
}

SolveResult solve_ajapg(const ObservedMatrix& data, const ProblemSpec& problem,
                        const RelaxationParams& relaxation, const SolverConfig& cfg,
                        FactorState init, const IterationObserver& observer) {
  Driver driver(data, problem, cfg, init);
  const double lambda = problem.penalties.lambda;
  const double beta = problem.penalties.beta;
  const ConstraintSpec& box = problem.constraints;
  const bool columns_on = lambda > 0.0;
  const bool entries_on = beta > 0.0;
  if (columns_on && !relaxation.r) throw std::invalid_argument("lambda > 0 requires r");
  if (entries_on && !relaxation.s) throw std::invalid_argument("beta > 0 requires s");
  const int freeze_s = relaxation.freeze_s();

  SolveResult result{std::move(init), {}};
  FactorState& state = result.state;
  std::vector<double> product(data.size());
  product_on_support(state.x, state.y, data, product);
  double current_objective = driver.exact_objective(
      loss_value(residual_from_product(product, state.s_values, data), problem.loss), state);
  std::optional<StepSizes> previous_steps;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const double r_k = columns_on ? relaxation.r_schedule.at(k) : 1.0;
    const double s_k = entries_on ? relaxation.s_schedule.at(k) : 1.0;

    // Restriction to I_k. Zeroing a column whose partner is already zero
    // leaves the product XY^T, and hence the cached product, unchanged.
    FactorState reference = state;
    if (columns_on) {
      const std::vector<bool> live = support_columns(state);
      for (std::size_t c = 0; c < live.size(); ++c) {
        if (!live[c]) {
          reference.x.col(static_cast<Eigen::Index>(c)).setZero();
          reference.y.col(static_cast<Eigen::Index>(c)).setZero();
        }
      }
    }

    const std::vector<int> tags_x = column_branch_tags(reference.x, r_k, columns_on);
    const std::vector<int> tags_y = column_branch_tags(reference.y, r_k, columns_on);
    const std::vector<int> tags_s = entry_branch_tags(reference.s_values, s_k, entries_on);

    auto branch_of = [](int tag) { return tag == 1 ? Branch::kLinearOnly : Branch::kConstantOnly; };
    ColumnProx prox_x = [&](int c, double iota, Eigen::Ref<const Vector> in,
                            Eigen::Ref<Vector> out) {
      prox_group(in, GroupPenalty{lambda / iota, r_k, branch_of(tags_x[c]), box.tau}, out);
    };
    ColumnProx prox_y = [&](int c, double iota, Eigen::Ref<const Vector> in,
                            Eigen::Ref<Vector> out) {
      prox_group(in, GroupPenalty{lambda / iota, r_k, branch_of(tags_y[c]), box.tau}, out);
    };
    EntryProx prox_s = [&](std::size_t e, double iota, double in) {
      return prox_scalar(in, ScalarPenalty{beta / iota, s_k, branch_of(tags_s[e]), box.s_lower,
                                           box.s_upper});
    };
    FactorPenalty factor_penalty = [&](const Matrix& x, const Matrix& y) {
      if (!columns_on) return 0.0;
      return lambda * (column_penalty_relaxed(x, r_k) + column_penalty_relaxed(y, r_k));
    };
    EntryPenalty entry_penalty = [&](const std::vector<double>& s) {
      if (!entries_on) return 0.0;
      return beta * entry_penalty_relaxed(s, s_k);
    };

    SparseResidual res = residual_from_product(product, reference.s_values, data);
    const double f_ref = loss_value(res, problem.loss);
    const FactorGradients grads =
        grad_factors(grad_sparse(res, problem.loss), reference.x, reference.y, data);
    const double joint_ref = f_ref + factor_penalty(reference.x, reference.y);
    const double reference_g = joint_ref + entry_penalty(reference.s_values);
    const StepSizes base = base_step_rule(k, previous_steps, cfg);

    JointStepResult joint =
        ja_j_step(data, reference.s_values, problem.loss, reference.x, reference.y, grads,
                  joint_ref, prox_x, prox_y, factor_penalty, cfg.c1, base.iota1, base.iota2,
                  cfg);

    SparseResidual res_s = residual_from_product(joint.product, reference.s_values, data);
    const std::vector<double> grad_s = grad_sparse(res_s, problem.loss);
    const double sparse_ref = joint.loss + entry_penalty(reference.s_values);

    std::optional<std::vector<std::size_t>> active;
    if (entries_on && k >= freeze_s) active = support_entries(reference);
    std::optional<std::span<const std::size_t>> active_view;
    if (active) active_view = std::span<const std::size_t>(*active);

    SparseStepResult sparse =
        ja_a_step(data, joint.product, reference.s_values, grad_s, problem.loss, sparse_ref,
                  prox_s, entry_penalty, cfg.c2, base.iota, cfg, active_view);

    IterationRecord rec;
    rec.k = k;
    if (active) {
      // Entries outside the frozen support are kept at zero; count those whose
      // prox would have come out nonzero.
      for (std::size_t e = 0; e < data.size(); ++e) {
        if (reference.s_values[e] == 0.0 &&
            prox_s(e, sparse.iota, -grad_s[e] / sparse.iota) != 0.0) {
          ++rec.off_support_violations;
        }
      }
    }

    FactorState next{std::move(joint.x), std::move(joint.y), std::move(sparse.s_values)};
    rec.r_k = columns_on ? r_k : 0.0;
    rec.s_k = entries_on ? s_k : 0.0;
    rec.objective = driver.exact_objective(sparse.loss, next);
    rec.relaxed_objective = sparse.value + factor_penalty(next.x, next.y);
    rec.reference_objective = reference_g;
    rec.displacement = std::sqrt(squared_distance(next, reference));
    rec.step_norm = std::sqrt(squared_distance(next, state));
    rec.iota1 = joint.iota1;
    rec.iota2 = joint.iota2;
    rec.iota = sparse.iota;
    rec.backtracks_joint = joint.backtracks;
    rec.backtracks_sparse = sparse.backtracks;

    if (cfg.check_invariants && columns_on) {
      const std::vector<bool> live = support_columns(state);
      if (!is_subset(nonzero_columns(next.x), live) ||
          !is_subset(nonzero_columns(next.y), live)) {
        throw std::logic_error("column support grew at iteration " + std::to_string(k));
      }
    }
    const bool converged = driver.finish(rec, next, current_objective);
    if (observer) observer(IterationView{rec, state, reference, next});

    result.trace.iterations.push_back(rec);
    previous_steps = StepSizes{joint.iota1, joint.iota2, sparse.iota};
    state = std::move(next);
    product = std::move(joint.product);
    current_objective = rec.objective;
    if (converged) {
      result.trace.stop = StopReason::kConverged;
      break;
    }
  }
  result.trace.seconds = driver.elapsed();
  return result;
}

}  // namespace rpca
