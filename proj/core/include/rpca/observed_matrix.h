#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "rpca/types.h"

namespace rpca {

struct Entry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// The observation set Omega together with the observed values M on it.
//
// Entries are kept sorted in row-major order; every Omega-aligned array in the
// library (residuals, S values, gradients of S) uses this order. The
// constructor rejects duplicates, out-of-range indices and an empty Omega.
class ObservedMatrix {
 public:
  ObservedMatrix(int rows, int cols, std::vector<Entry> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  std::span<const int> row_index() const { return row_index_; }
  std::span<const int> col_index() const { return col_index_; }
  std::span<const double> values() const { return values_; }

  // Position of entry (row, col) in the Omega order, or -1 when unobserved.
  std::ptrdiff_t find(int row, int col) const;

  // Entries of row `row` occupy [row_begin(row), row_begin(row + 1)).
  std::size_t row_begin(int row) const { return row_start_[row]; }

  double max_abs_value() const;
  std::vector<Entry> entries() const;

  // P_Omega(M) scaled by `scale`, as an Eigen sparse matrix.
  Eigen::SparseMatrix<double> to_sparse(double scale = 1.0) const;
  // P_Omega(M) as a dense matrix with zeros off Omega.
  Matrix to_dense() const;

 private:
  int rows_;
  int cols_;
  std::vector<int> row_index_;
  std::vector<int> col_index_;
  std::vector<double> values_;
  std::vector<std::size_t> row_start_;
};

}  // namespace rpca
