#include "rpca/observed_matrix.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rpca {

ObservedMatrix::ObservedMatrix(int rows, int cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("observed matrix needs at least one row and column");
  }
  if (entries.empty()) {
    throw std::invalid_argument("no observations");
  }
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw std::invalid_argument("entry (" + std::to_string(e.row) + ", " +
                                  std::to_string(e.col) + ") out of range");
    }
    if (!std::isfinite(e.value)) {
      throw std::invalid_argument("non-finite observed value");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
      throw std::invalid_argument("duplicate entry (" + std::to_string(entries[k].row) +
                                  ", " + std::to_string(entries[k].col) + ")");
    }
  }

  row_index_.reserve(entries.size());
  col_index_.reserve(entries.size());
  values_.reserve(entries.size());
  row_start_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (const Entry& e : entries) {
    row_index_.push_back(e.row);
    col_index_.push_back(e.col);
    values_.push_back(e.value);
    ++row_start_[e.row + 1];
  }
  for (int i = 0; i < rows; ++i) row_start_[i + 1] += row_start_[i];
}

std::ptrdiff_t ObservedMatrix::find(int row, int col) const {
  if (row < 0 || row >= rows_) return -1;
  auto first = col_index_.begin() + static_cast<std::ptrdiff_t>(row_start_[row]);
  auto last = col_index_.begin() + static_cast<std::ptrdiff_t>(row_start_[row + 1]);
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return -1;
  return it - col_index_.begin();
}

double ObservedMatrix::max_abs_value() const {
  double best = 0.0;
  for (double v : values_) best = std::max(best, std::abs(v));
  return best;
}

std::vector<Entry> ObservedMatrix::entries() const {
  std::vector<Entry> out(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) {
    out[k] = {row_index_[k], col_index_[k], values_[k]};
  }
  return out;
}

Eigen::SparseMatrix<double> ObservedMatrix::to_sparse(double scale) const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) {
    triplets.emplace_back(row_index_[k], col_index_[k], scale * values_[k]);
  }
  Eigen::SparseMatrix<double> out(rows_, cols_);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Matrix ObservedMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (std::size_t k = 0; k < values_.size(); ++k) {
    out(row_index_[k], col_index_[k]) = values_[k];
  }
  return out;
}

}  // namespace rpca
