#pragma once

#include <cstdint>

#include "rpca/factor_state.h"
#include "rpca/model.h"
#include "rpca/observed_matrix.h"

namespace rpca {

struct RandomizedSvdOptions {
  int oversampling = 10;
  int power_iterations = 4;
};

struct TruncatedSvd {
  Matrix u;  // m x k, orthonormal columns
  Vector sigma;
  Matrix v;  // n x k, orthonormal columns
};

// Rank-k SVD of a sparse matrix by a randomized range finder with power
// iterations (orthonormalized at every pass).
TruncatedSvd randomized_svd(const Eigen::SparseMatrix<double>& a, int k, std::uint64_t seed,
                            const RandomizedSvdOptions& options = {});

// Starting point: X0 = U_d Sigma_d^{1/2}, Y0 = V_d Sigma_d^{1/2} from the
// rank-d SVD of (mn / |Omega|) P_Omega(M), columns projected onto the tau
// ball, S0 = 0. All-zero data gives the zero state.
FactorState default_init(const ObservedMatrix& data, const ProblemDims& dims,
                         const ConstraintSpec& constraints, std::uint64_t seed = 0);

}  // namespace rpca
