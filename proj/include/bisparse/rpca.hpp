#pragma once

// Robust PCA baseline, X = L + S with L low rank and S sparse, solved by the
// inexact augmented Lagrange multiplier method.

#include <functional>
#include <optional>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

struct RpcaConfig {
  std::optional<double> lambda;  // default 1 / sqrt(max(m, n))
  std::optional<double> mu0;     // default 1.25 / ||X||_2
  std::optional<double> mu_max;  // default 1e7 * mu0
  double rho = 1.5;
  double tol = 1e-7;
  int max_iter = 1000;

  void validate() const;
};

struct RpcaRecord {
  int iter = 0;
  double residual = 0.0;   // ||X - L - S||_F / ||X||_F
  double objective = 0.0;  // ||L||_* + lambda ||S||_1
  double mu = 0.0;
  std::size_t rank = 0;
};

struct RpcaResult {
  DenseMatrix l;
  DenseMatrix s;
  std::vector<RpcaRecord> history;
  bool converged = false;
  int iterations = 0;
};

/// Singular value thresholding U T_tau(Sigma) V^T. Throws on tau < 0.
DenseMatrix svt(const DenseMatrix& m, double tau);

using RpcaObserver = std::function<void(const RpcaRecord&)>;

RpcaResult rpca_ialm(const DenseMatrix& x, const RpcaConfig& config = {},
                     const RpcaObserver& observer = {});

}  // namespace bisparse
