#pragma once

// Data-parallel dense kernels. The functions in `bisparse` run OpenMP loops;
// the ones in `bisparse::serial` are plain reference loops kept for testing
// and benchmarking.
//
// Determinism: every output entry of a product or elementwise kernel is
// produced by exactly one thread using a fixed loop order, and reductions
// sum fixed-size chunks in chunk order. Results are therefore bitwise
// identical for any thread count.

#include <cstddef>

#include "bisparse/matrix.hpp"

namespace bisparse {

/// Entry count per partial sum in the parallel reductions.
inline constexpr std::size_t kReductionChunk = 4096;

struct Norms {
  double frobenius = 0.0;
  double l1 = 0.0;
  std::size_t l0_count = 0;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);     // A B
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // A^T B
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // A B^T

/// Entrywise sign(m) * max(|m| - alpha, 0). Throws on alpha < 0.
DenseMatrix soft_threshold(const DenseMatrix& m, double alpha);

double frobenius_norm(const DenseMatrix& m);
double l1_norm(const DenseMatrix& m);
/// Entries with |m| > eps.
std::size_t l0_count(const DenseMatrix& m, double eps);
double max_abs(const DenseMatrix& m);
/// Frobenius inner product <A, B>.
double inner(const DenseMatrix& a, const DenseMatrix& b);
Norms norms(const DenseMatrix& m, double eps);

/// y = a * x + b * y, entrywise.
void axpby(double a, const DenseMatrix& x, double b, DenseMatrix& y);

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix soft_threshold(const DenseMatrix& m, double alpha);
double frobenius_norm(const DenseMatrix& m);
double l1_norm(const DenseMatrix& m);
std::size_t l0_count(const DenseMatrix& m, double eps);
double inner(const DenseMatrix& a, const DenseMatrix& b);
void axpby(double a, const DenseMatrix& x, double b, DenseMatrix& y);

}  // namespace serial

/// Threads used by the parallel kernels (1 when built without OpenMP).
int kernel_threads();
void set_kernel_threads(int n);

}  // namespace bisparse
