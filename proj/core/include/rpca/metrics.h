#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpca/factor_state.h"
#include "rpca/observed_matrix.h"
#include "rpca/types.h"

namespace rpca {

struct EvalResult {
  double rse = 0.0;
  double nmae = 0.0;  // only meaningful when a test mask was scored
  int recovered_rank = 0;
  std::size_t recovered_sparsity = 0;
  double runtime_seconds = 0.0;
};

// ||X Y^T - Z||_F / ||Z||_F, accumulated over row blocks so that X Y^T is
// never formed in full. Throws when ||Z||_F = 0.
double rse(const Matrix& x, const Matrix& y, const Matrix& z_true);

// (X Y^T)_ij at every entry of `mask`, in the mask's order.
std::vector<double> predict_on(const Matrix& x, const Matrix& y, const ObservedMatrix& mask);

// Mean |clamp(pred) - actual| / (rating_max - rating_min) over the test
// entries, predictions clamped to [rating_min, rating_max] first.
double nmae(std::span<const double> predictions, const ObservedMatrix& test, double rating_min,
            double rating_max);

}  // namespace rpca
