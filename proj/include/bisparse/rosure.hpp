#pragma once

// Robust subspace recovery by bi-sparsity pursuit: a linearized ADMM that
// solves
//
//   min ||W||_1 + lambda ||E||_1   s.t.  X = L + E,  L = L W,  diag(W) = 0
//
// by alternating soft-thresholded steps in W and E with multiplier updates.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

/// Default sparsity trade-off, calibrated on unit-variance union-of-subspaces
/// data with unit-magnitude corruptions (see tools/calibrate_lambda.cpp).
inline constexpr double kDefaultLambda = 1.0;

struct SolverConfig {
  double lambda = kDefaultLambda;
  double rho = 1.1;
  std::optional<double> mu0;     // default 0.1 / ||X||_2
  std::optional<double> mu_max;  // default 1e10 * mu0
  double eta_margin = 1.02;
  double tol = 1e-7;
  int max_iter = 2000;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Concrete (mu0, mu_max) for a given data matrix.
struct MuSchedule {
  double mu0;
  double mu_max;
  double rho;

  /// min(mu0 * rho^k, mu_max), evaluated directly from k.
  double at(int k) const;
};

MuSchedule resolve_mu(const DenseMatrix& x, const SolverConfig& config);

struct SolverState {
  DenseMatrix w;  // n x n, zero diagonal
  DenseMatrix e;  // m x n
  DenseMatrix y;  // m x n multiplier
  double mu;
  int iter = 0;

  /// W = 0, E = 0, Y = 0 with mu = mu0.
  static SolverState initial(std::size_t m, std::size_t n, double mu0);
};

struct IterationRecord {
  int iter = 0;
  double residual = 0.0;    // ||L W - L||_F / ||X||_F
  double objective = 0.0;   // ||W||_1 + lambda ||E||_1
  double lagrangian = 0.0;  // augmented Lagrangian after the E step
  double mu = 0.0;          // mu used in this iteration
};

struct SolverResult {
  DenseMatrix l;  // X - E
  DenseMatrix w;
  DenseMatrix e;
  std::vector<IterationRecord> history;
  bool converged = false;
  int iterations = 0;
};

/// Power-iteration vectors carried across iterations so each eta bound is
/// warm-started from the previous iterate's singular vector.
struct StepCache {
  std::vector<double> l_vector;
  std::vector<double> what_vector;
};

/// Thrown when a step size bound degenerates (zero L or zero I - W).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Linearized soft-thresholding step in W for L = X - E_k:
///   W+ = T_{1/(mu eta1)}(W + L^T (L (I - W) - Y / mu) / eta1),  diag(W+) = 0,
/// with eta1 = eta_margin * ||L||_2^2.
DenseMatrix update_w(const SolverState& state, const DenseMatrix& l, const SolverConfig& config,
                     StepCache* cache = nullptr);

/// Linearized soft-thresholding step in E given the new W (state.w):
///   E+ = T_{lambda/(mu eta2)}(E + (L Wh - Y / mu) Wh^T / eta2),
/// with Wh = I - W and eta2 = eta_margin * ||Wh||_2^2. L is X - state.e.
DenseMatrix update_e(const SolverState& state, const DenseMatrix& x, const SolverConfig& config,
                     StepCache* cache = nullptr);

struct MultiplierUpdate {
  DenseMatrix y;
  double mu;
};

/// Y+ = Y + mu (L W - L); mu+ = min(rho mu, mu_max).
MultiplierUpdate update_multipliers(const SolverState& state, const DenseMatrix& l,
                                    const DenseMatrix& w, const MuSchedule& schedule);

/// lambda ||E||_1 + ||W||_1 + <(X-E)W - (X-E), Y> + mu/2 ||(X-E)W - (X-E)||_F^2.
double augmented_lagrangian(const DenseMatrix& x, const DenseMatrix& e, const DenseMatrix& w,
                            const DenseMatrix& y, double mu, double lambda);

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Runs the full loop until the constraint residual and the relative change
/// of both W and E drop below config.tol, or max_iter is reached (flagged,
/// not thrown). Throws std::invalid_argument for zero columns or n < 2.
SolverResult solve(const DenseMatrix& x, const SolverConfig& config,
                   const IterationObserver& observer = {});

}  // namespace bisparse
