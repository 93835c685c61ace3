#include <cmath>

#include "bisparse/kernels.hpp"
#include "kernels_common.hpp"

namespace bisparse::serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.cols(), b.rows(), "matmul");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.rows(), b.rows(), "matmul_tn");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.cols(), b.cols(), "matmul_nt");
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix soft_threshold(const DenseMatrix& m, double alpha) {
  detail::require_nonnegative_threshold(alpha);
  DenseMatrix out = m;
  for (double& v : out.data()) v = detail::shrink(v, alpha);
  return out;
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double l1_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += std::abs(v);
  return s;
}

std::size_t l0_count(const DenseMatrix& m, double eps) {
  std::size_t c = 0;
  for (double v : m.data())
    if (std::abs(v) > eps) ++c;
  return c;
}

double inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

void axpby(double a, const DenseMatrix& x, double b, DenseMatrix& y) {
  require_same_shape(x, y, "axpby");
  for (std::size_t k = 0; k < y.size(); ++k) y.data()[k] = a * x.data()[k] + b * y.data()[k];
}

}  // namespace bisparse::serial
