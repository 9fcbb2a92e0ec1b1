#include "rpca/init.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rpca/prox.h"
#include "rpca/rng.h"

namespace rpca {

namespace {

using DenseCol = Eigen::MatrixXd;

DenseCol orthonormalize(const DenseCol& a) {
  Eigen::HouseholderQR<DenseCol> qr(a);
  return qr.householderQ() * DenseCol::Identity(a.rows(), a.cols());
}

}  // namespace

TruncatedSvd randomized_svd(const Eigen::SparseMatrix<double>& a, int k, std::uint64_t seed,
                            const RandomizedSvdOptions& options) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("invalid target rank");
  const Eigen::Index width = std::min<Eigen::Index>(k + options.oversampling, std::min(m, n));

  Rng rng(seed);
  DenseCol omega(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < width; ++j) omega(i, j) = rng.normal();
  }
  const Eigen::SparseMatrix<double> at = a.transpose();
  DenseCol q = orthonormalize(a * omega);
  for (int it = 0; it < options.power_iterations; ++it) {
    DenseCol w = orthonormalize(at * q);
    q = orthonormalize(a * w);
  }
  // B = Q^T A, computed as (A^T Q)^T.
  const DenseCol bt = at * q;  // n x width
  Eigen::JacobiSVD<DenseCol> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // bt = Ub S Vb^T  =>  A ~ Q B = (Q Vb) S Ub^T.
  TruncatedSvd out;
  out.sigma = svd.singularValues().head(k);
  out.u = (q * svd.matrixV().leftCols(k));
  out.v = svd.matrixU().leftCols(k);
  // Sign convention: largest-magnitude entry of each left vector positive.
  for (int c = 0; c < k; ++c) {
    Eigen::Index idx;
    out.u.col(c).cwiseAbs().maxCoeff(&idx);
    if (out.u(idx, c) < 0.0) {
      out.u.col(c) *= -1.0;
      out.v.col(c) *= -1.0;
    }
  }
  return out;
}

FactorState default_init(const ObservedMatrix& data, const ProblemDims& dims,
                         const ConstraintSpec& constraints, std::uint64_t seed) {
  dims.validate();
  if (dims.m != data.rows() || dims.n != data.cols()) {
    throw std::invalid_argument("dims do not match the observed matrix");
  }
  if (data.size() < static_cast<std::size_t>(dims.d)) {
    throw std::invalid_argument("need at least d observations");
  }
  FactorState state = FactorState::zeros(dims.m, dims.n, dims.d, data.size());
  if (data.max_abs_value() == 0.0) return state;

  const double scale =
      static_cast<double>(dims.m) * static_cast<double>(dims.n) / static_cast<double>(data.size());
  TruncatedSvd svd = randomized_svd(data.to_sparse(scale), dims.d, seed);
  for (int c = 0; c < dims.d; ++c) {
    const double root = std::sqrt(std::max(svd.sigma(c), 0.0));
    state.x.col(c) = svd.u.col(c) * root;
    state.y.col(c) = svd.v.col(c) * root;
  }
  if (std::isfinite(constraints.tau)) {
    const GroupPenalty projection{0.0, 1.0, Branch::kConstantOnly, constraints.tau};
    for (Matrix* v : {&state.x, &state.y}) {
      for (int c = 0; c < dims.d; ++c) {
        Vector column = v->col(c);
        v->col(c) = prox_group(column, projection);
      }
    }
  }
  return state;
}

}  // namespace rpca
