#pragma once

#include <cmath>

#include <Eigen/Core>

namespace rpca {

// Factor matrices are stored row-major: the sparse residual touches one row of
// X and one row of Y per observed entry.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace rpca

namespace rpca {

// Euclidean norm with a fixed left-to-right summation order. Eigen's norm()
// picks its reduction order from the memory layout, so a contiguous vector
// and the same values in a strided matrix column can differ in the last bit;
// every column norm that is compared against tau or a threshold goes through
// this function instead.
template <typename Derived>
double column_norm(const Eigen::MatrixBase<Derived>& v) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += v.coeff(i) * v.coeff(i);
  return std::sqrt(sum);
}

}  // namespace rpca
