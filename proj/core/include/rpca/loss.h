#pragma once

#include <span>
#include <vector>

#include "rpca/observed_matrix.h"
#include "rpca/types.h"

namespace rpca {

// Data-fit term f(Z, S) = sum over Omega of h((Z + S - M)_ij), with h the
// half square or the Huber function.
struct LossKind {
  enum class Tag { kSquared, kHuber };

  Tag tag = Tag::kSquared;
  double delta = 1.0;  // Huber transition point; ignored for kSquared.

  static LossKind squared() { return {Tag::kSquared, 1.0}; }
  static LossKind huber(double delta);

  bool operator==(const LossKind&) const = default;
};

// Residual values (XY^T + S - M)_ij, aligned index-for-index with Omega.
struct SparseResidual {
  std::vector<double> values;
};

struct FactorGradients {
  Matrix gx;  // R * Y, m x d
  Matrix gy;  // R^T * X, n x d
};

// (XY^T)_ij for every (i, j) in Omega, written into `out` (size |Omega|).
// O(|Omega| d); the m x n product is never formed.
void product_on_support(const Matrix& x, const Matrix& y, const ObservedMatrix& data,
                        std::span<double> out);

SparseResidual residual(const Matrix& x, const Matrix& y, std::span<const double> s_values,
                        const ObservedMatrix& data);

// Residual from a precomputed product on Omega.
SparseResidual residual_from_product(std::span<const double> product,
                                     std::span<const double> s_values,
                                     const ObservedMatrix& data);

double loss_value(std::span<const double> residual, const LossKind& kind);
inline double loss_value(const SparseResidual& res, const LossKind& kind) {
  return loss_value(res.values, kind);
}

// Gradient of f with respect to S on Omega (zero elsewhere): the loss
// derivative h' evaluated at each residual value.
std::vector<double> grad_sparse(std::span<const double> residual, const LossKind& kind);
inline std::vector<double> grad_sparse(const SparseResidual& res, const LossKind& kind) {
  return grad_sparse(res.values, kind);
}

// G_X = R Y and G_Y = R^T X where R is the sparse matrix of `weights` on Omega
// (the loss derivative at the residual). One pass over Omega.
FactorGradients grad_factors(std::span<const double> weights, const Matrix& x,
                             const Matrix& y, const ObservedMatrix& data);

}  // namespace rpca
