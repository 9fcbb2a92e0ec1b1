#include "rpca/loss.h"

#include <cmath>
#include <stdexcept>

namespace rpca {

namespace {

void check_factors(const Matrix& x, const Matrix& y, const ObservedMatrix& data) {
  if (x.rows() != data.rows() || y.rows() != data.cols() || x.cols() != y.cols()) {
    throw std::invalid_argument("factor dimensions do not match the observed matrix");
  }
}

// Neumaier compensated sum; keeps the reduction order fixed and accurate.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

LossKind LossKind::huber(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("Huber delta must be positive");
  return {Tag::kHuber, delta};
}

void product_on_support(const Matrix& x, const Matrix& y, const ObservedMatrix& data,
                        std::span<double> out) {
  check_factors(x, y, data);
  if (out.size() != data.size()) throw std::invalid_argument("output size mismatch");
  const auto rows = data.row_index();
  const auto cols = data.col_index();
  const Eigen::Index d = x.cols();
  const double* xp = x.data();
  const double* yp = y.data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* xr = xp + rows[k] * d;
    const double* yr = yp + cols[k] * d;
    double acc = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) acc += xr[c] * yr[c];
    out[k] = acc;
  }
}

SparseResidual residual_from_product(std::span<const double> product,
                                     std::span<const double> s_values,
                                     const ObservedMatrix& data) {
  if (product.size() != data.size() || s_values.size() != data.size()) {
    throw std::invalid_argument("residual inputs are not aligned with Omega");
  }
  SparseResidual res;
  res.values.resize(data.size());
  const auto m = data.values();
  for (std::size_t k = 0; k < res.values.size(); ++k) {
    res.values[k] = product[k] + s_values[k] - m[k];
  }
  return res;
}

SparseResidual residual(const Matrix& x, const Matrix& y, std::span<const double> s_values,
                        const ObservedMatrix& data) {
  std::vector<double> product(data.size());
  product_on_support(x, y, data, product);
  return residual_from_product(product, s_values, data);
}

double loss_value(std::span<const double> residual, const LossKind& kind) {
  CompensatedSum sum;
  if (kind.tag == LossKind::Tag::kSquared) {
    for (double r : residual) sum.add(r * r);
    return 0.5 * sum.value();
  }
  const double delta = kind.delta;
  for (double r : residual) {
    double a = std::abs(r);
    sum.add(a < delta ? 0.5 * r * r : delta * (a - 0.5 * delta));
  }
  return sum.value();
}

std::vector<double> grad_sparse(std::span<const double> residual, const LossKind& kind) {
  std::vector<double> out(residual.begin(), residual.end());
  if (kind.tag == LossKind::Tag::kHuber) {
    const double delta = kind.delta;
    for (double& g : out) {
      if (std::abs(g) >= delta) g = g > 0.0 ? delta : -delta;
    }
  }
  return out;
}

FactorGradients grad_factors(std::span<const double> weights, const Matrix& x,
                             const Matrix& y, const ObservedMatrix& data) {
  check_factors(x, y, data);
  if (weights.size() != data.size()) throw std::invalid_argument("weights not aligned with Omega");
  const Eigen::Index d = x.cols();
  FactorGradients g{Matrix::Zero(x.rows(), d), Matrix::Zero(y.rows(), d)};
  const auto rows = data.row_index();
  const auto cols = data.col_index();
  const double* xp = x.data();
  const double* yp = y.data();
  double* gxp = g.gx.data();
  double* gyp = g.gy.data();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (w == 0.0) continue;
    const Eigen::Index i = rows[k];
    const Eigen::Index j = cols[k];
    const double* xr = xp + i * d;
    const double* yr = yp + j * d;
    double* gxr = gxp + i * d;
    double* gyr = gyp + j * d;
    for (Eigen::Index c = 0; c < d; ++c) {
      gxr[c] += w * yr[c];
      gyr[c] += w * xr[c];
    }
  }
  return g;
}

}  // namespace rpca
