#pragma once

#include <cstddef>
#include <vector>

#include "rpca/observed_matrix.h"
#include "rpca/types.h"

namespace rpca {

// Iterate (X, Y, S). S lives on Omega only: s_values[k] is S at the k-th
// observed entry and S is identically zero off Omega.
struct FactorState {
  Matrix x;  // m x d
  Matrix y;  // n x d
  std::vector<double> s_values;

  static FactorState zeros(int m, int n, int d, std::size_t omega_size);

  int rank_budget() const { return static_cast<int>(x.cols()); }

  // Dimension check against the data; throws std::invalid_argument.
  void check_compatible(const ObservedMatrix& data) const;
};

// Columns with nonzero Euclidean norm (exact comparison).
std::vector<bool> nonzero_columns(const Matrix& v);
int count_nonzero_columns(const Matrix& v);
std::vector<double> column_norms(const Matrix& v);

// I_k = I_X intersect I_Y.
std::vector<bool> support_columns(const FactorState& state);
// Indices (in Omega order) of the nonzero S entries.
std::vector<std::size_t> support_entries(const FactorState& state);
std::size_t count_nonzero(const std::vector<double>& values);

}  // namespace rpca
