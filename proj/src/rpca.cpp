#include "bisparse/rpca.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"

namespace bisparse {

namespace {

struct Thresholded {
  DenseMatrix value;
  double nuclear = 0.0;
  std::size_t rank = 0;
};

// `basis` carries the small-side singular vectors between calls as a warm
// start (identity on the first call).
Thresholded svt_impl(const DenseMatrix& m, double tau, DenseMatrix* basis = nullptr) {
  if (!(tau >= 0.0)) throw std::invalid_argument("svt: tau must be >= 0");
  Svd svd = jacobi_svd(m, basis);
  if (basis != nullptr) *basis = m.rows() >= m.cols() ? svd.v : svd.u;
  Thresholded out{DenseMatrix(m.rows(), m.cols()), 0.0, 0};
  for (double& s : svd.sigma) {
    s = std::max(s - tau, 0.0);
    out.nuclear += s;
    if (s > 0.0) ++out.rank;
  }
  if (out.rank == 0) return out;
  // Only the surviving leading components contribute.
  DenseMatrix us(m.rows(), out.rank);
  DenseMatrix vs(m.cols(), out.rank);
  for (std::size_t r = 0; r < out.rank; ++r) {
    for (std::size_t i = 0; i < m.rows(); ++i) us(i, r) = svd.u(i, r) * svd.sigma[r];
    for (std::size_t i = 0; i < m.cols(); ++i) vs(i, r) = svd.v(i, r);
  }
  out.value = matmul_nt(us, vs);
  return out;
}

}  // namespace

void RpcaConfig::validate() const {
  if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("RpcaConfig: lambda must be > 0");
  if (mu0 && !(*mu0 > 0.0)) throw std::invalid_argument("RpcaConfig: mu0 must be > 0");
  if (mu0 && mu_max && *mu_max < *mu0)
    throw std::invalid_argument("RpcaConfig: mu_max must be >= mu0");
  if (!(rho > 1.0)) throw std::invalid_argument("RpcaConfig: rho must be > 1");
  if (!(tol > 0.0)) throw std::invalid_argument("RpcaConfig: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("RpcaConfig: max_iter must be >= 1");
}

DenseMatrix svt(const DenseMatrix& m, double tau) { return svt_impl(m, tau).value; }

RpcaResult rpca_ialm(const DenseMatrix& x, const RpcaConfig& config,
                     const RpcaObserver& observer) {
  config.validate();
  if (!x.all_finite()) throw std::invalid_argument("rpca_ialm: X has non-finite entries");
  const double x_norm = frobenius_norm(x);
  RpcaResult result{DenseMatrix(x.rows(), x.cols()), DenseMatrix(x.rows(), x.cols()), {}, false, 0};
  if (x_norm == 0.0) {
    result.converged = true;
    return result;
  }

  const double lambda =
      config.lambda.value_or(1.0 / std::sqrt(static_cast<double>(std::max(x.rows(), x.cols()))));
  const double mu0 = config.mu0 ? *config.mu0 : 1.25 / spectral_norm(x).value;
  const double mu_max = config.mu_max.value_or(1e7 * mu0);
  if (mu_max < mu0) throw std::invalid_argument("RpcaConfig: mu_max must be >= mu0");

  DenseMatrix y(x.rows(), x.cols());
  DenseMatrix basis = DenseMatrix::identity(std::min(x.rows(), x.cols()));
  DenseMatrix& l = result.l;
  DenseMatrix& s = result.s;

  for (int k = 0; k < config.max_iter; ++k) {
    const double mu = std::min(mu0 * std::pow(config.rho, static_cast<double>(k)), mu_max);

    DenseMatrix arg = x - s;
    axpby(1.0 / mu, y, 1.0, arg);
    Thresholded low = svt_impl(arg, 1.0 / mu, &basis);
    l = std::move(low.value);

    arg = x - l;
    axpby(1.0 / mu, y, 1.0, arg);
    s = soft_threshold(arg, lambda / mu);

    DenseMatrix z = x - l;
    z -= s;
    axpby(mu, z, 1.0, y);

    RpcaRecord rec;
    rec.iter = k;
    rec.residual = frobenius_norm(z) / x_norm;
    rec.objective = low.nuclear + lambda * l1_norm(s);
    rec.mu = mu;
    rec.rank = low.rank;
    result.history.push_back(rec);
    if (observer) observer(rec);
    result.iterations = k + 1;
    if (rec.residual < config.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace bisparse
