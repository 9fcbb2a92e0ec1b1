#include "rpca/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rpca/loss.h"

namespace rpca {

namespace {
constexpr Eigen::Index kRowBlock = 256;
}

double rse(const Matrix& x, const Matrix& y, const Matrix& z_true) {
  if (x.rows() != z_true.rows() || y.rows() != z_true.cols() || x.cols() != y.cols()) {
    throw std::invalid_argument("rse: dimension mismatch");
  }
  const double denom = z_true.norm();
  if (denom == 0.0) throw std::invalid_argument("rse: reference matrix is zero");
  double err = 0.0;
  for (Eigen::Index i0 = 0; i0 < x.rows(); i0 += kRowBlock) {
    const Eigen::Index rows = std::min(kRowBlock, x.rows() - i0);
    Matrix block = x.middleRows(i0, rows) * y.transpose();
    block -= z_true.middleRows(i0, rows);
    err += block.squaredNorm();
  }
  return std::sqrt(err) / denom;
}

std::vector<double> predict_on(const Matrix& x, const Matrix& y, const ObservedMatrix& mask) {
  if (x.rows() != mask.rows() || y.rows() != mask.cols() || x.cols() != y.cols()) {
    throw std::invalid_argument("predict_on: dimension mismatch");
  }
  std::vector<double> out(mask.size());
  product_on_support(x, y, mask, out);
  return out;
}

double nmae(std::span<const double> predictions, const ObservedMatrix& test, double rating_min,
            double rating_max) {
  if (!(rating_max > rating_min)) throw std::invalid_argument("nmae: empty rating range");
  if (predictions.size() != test.size()) {
    throw std::invalid_argument("nmae: prediction count does not match the test mask");
  }
  const auto actual = test.values();
  double sum = 0.0;
  for (std::size_t e = 0; e < actual.size(); ++e) {
    const double p = std::clamp(predictions[e], rating_min, rating_max);
    sum += std::abs(p - actual[e]);
  }
  return sum / static_cast<double>(actual.size()) / (rating_max - rating_min);
}

}  // namespace rpca
