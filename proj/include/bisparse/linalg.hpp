#pragma once

#include <cstdint>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

struct SpectralNormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration on M^T M.
///
/// The iteration starts from the normalized all-ones vector, or from
/// `*warm_start` when it is non-null and has length cols(M); on return the
/// final right singular vector estimate is written back to `*warm_start`.
/// If an iterate collapses to zero it is re-drawn from a generator seeded
/// with `seed`. Stops when the relative change of the estimate drops below
/// `tol`; otherwise the best estimate is returned with converged = false.
SpectralNormEstimate spectral_norm(const DenseMatrix& m, double tol = 1e-12,
                                   int max_iter = 10000,
                                   std::vector<double>* warm_start = nullptr,
                                   std::uint64_t seed = 0x5eed);

struct Svd {
  DenseMatrix u;              // m x r, orthonormal columns, r = min(m, n)
  std::vector<double> sigma;  // length r, descending
  DenseMatrix v;              // n x r, orthonormal columns
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// `start`, if given, is an orthogonal k x k matrix with k = min(rows, cols):
/// the v (rows >= cols) or u (rows < cols) of a nearby earlier decomposition.
/// Rotating from it instead of the identity needs far fewer sweeps when the
/// input changes slowly, as inside an iterative solver.
Svd jacobi_svd(const DenseMatrix& m, const DenseMatrix* start = nullptr);

/// U diag(sigma) V^T.
DenseMatrix reconstruct(const Svd& svd);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column i pairs with values[i]
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Throws std::invalid_argument when |S_ij - S_ji| > 1e-10 * max(1, max|S|).
SymmetricEigen jacobi_eigh(const DenseMatrix& s);

/// Singular values above rel_tol * sigma_max.
std::size_t numeric_rank(const DenseMatrix& m, double rel_tol = 1e-10);

}  // namespace bisparse
