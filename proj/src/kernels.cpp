#include "bisparse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_common.hpp"

namespace bisparse {

namespace {

// Below this many flops (or entries) the loops stay on the calling thread.
constexpr std::size_t kParallelWork = 1 << 15;

using Index = std::ptrdiff_t;

// One 4x4 block of C = A B held in registers while k runs the full inner
// dimension in ascending order. `panel` holds the 4 B columns packed k-major.
using Quad = double __attribute__((vector_size(32)));

using BlockFn = void (*)(const double*, std::size_t, const double*, double*, std::size_t,
                         std::size_t);

// One 4x8 block of C = A B held in registers while k runs the full inner
// dimension in ascending order. `panel` holds the 8 B columns packed k-major.
[[gnu::always_inline]] inline void block_body(const double* a, std::size_t lda,
                                              const double* panel, double* c, std::size_t ldc,
                                              std::size_t inner_dim) {
  Quad acc[4][2] = {};
  for (std::size_t k = 0; k < inner_dim; ++k) {
    Quad lo, hi;
    std::memcpy(&lo, panel + 8 * k, sizeof lo);
    std::memcpy(&hi, panel + 8 * k + 4, sizeof hi);
    for (int r = 0; r < 4; ++r) {
      const double ark = a[r * lda + k];
      const Quad av = {ark, ark, ark, ark};
      acc[r][0] += av * lo;
      acc[r][1] += av * hi;
    }
  }
  for (int r = 0; r < 4; ++r) {
    std::memcpy(c + r * ldc, &acc[r][0], sizeof(Quad));
    std::memcpy(c + r * ldc + 4, &acc[r][1], sizeof(Quad));
  }
}

void block_generic(const double* a, std::size_t lda, const double* panel, double* c,
                   std::size_t ldc, std::size_t inner_dim) {
  block_body(a, lda, panel, c, ldc, inner_dim);
}

[[gnu::target("avx2,fma")]] void block_avx2(const double* a, std::size_t lda,
                                             const double* panel, double* c, std::size_t ldc,
                                             std::size_t inner_dim) {
  block_body(a, lda, panel, c, ldc, inner_dim);
}

// Picked once per process, so every product in a run uses the same rounding.
BlockFn select_block() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return block_avx2;
  return block_generic;
}

// Edge blocks: same ascending-k accumulation, any shape.
void gemm_edge(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, std::size_t rows, std::size_t cols, std::size_t inner_dim) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) {
      double s = 0.0;
      for (std::size_t k = 0; k < inner_dim; ++k) s += a[r * lda + k] * b[k * ldb + q];
      c[r * ldc + q] = s;
    }
  }
}

// Parallel over 4-row bands of C. Every entry is a plain ascending-k sum, so
// the result does not depend on the thread count.
void gemm_rows(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t m = a.rows();
  const std::size_t inner_dim = a.cols();
  const std::size_t n = b.cols();
  const std::size_t full_panels = n / 8;
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();

  std::vector<double> packed(full_panels * 8 * inner_dim);
  for (std::size_t k = 0; k < inner_dim; ++k)
    for (std::size_t p = 0; p < full_panels; ++p)
      for (int q = 0; q < 8; ++q) packed[(p * inner_dim + k) * 8 + q] = pb[k * n + p * 8 + q];

  static const BlockFn block = select_block();
  const Index bands = static_cast<Index>((m + 3) / 4);
  const bool par = m * inner_dim * n > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index band = 0; band < bands; ++band) {
    const std::size_t i = static_cast<std::size_t>(band) * 4;
    const std::size_t rows = std::min<std::size_t>(4, m - i);
    const double* arow = pa + i * inner_dim;
    double* crow = pc + i * n;
    std::size_t j = 0;
    if (rows == 4) {
      for (std::size_t p = 0; p < full_panels; ++p, j += 8)
        block(arow, inner_dim, packed.data() + p * inner_dim * 8, crow + j, n, inner_dim);
    }
    if (j < n) gemm_edge(arow, inner_dim, pb + j, n, crow + j, n, rows, n - j, inner_dim);
  }
}

template <typename ChunkFn>
double chunked_sum(std::size_t count, ChunkFn&& fn) {
  const std::size_t chunks = (count + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
  const bool par = count > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index c = 0; c < static_cast<Index>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t end = std::min(count, begin + kReductionChunk);
    partial[static_cast<std::size_t>(c)] = fn(begin, end);
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.cols(), b.rows(), "matmul");
  DenseMatrix c(a.rows(), b.cols());
  gemm_rows(a, b, c);
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.rows(), b.rows(), "matmul_tn");
  DenseMatrix c(a.cols(), b.cols());
  gemm_rows(a.transpose(), b, c);
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_inner_dims(a.cols(), b.cols(), "matmul_nt");
  DenseMatrix c(a.rows(), b.rows());
  gemm_rows(a, b.transpose(), c);
  return c;
}

DenseMatrix soft_threshold(const DenseMatrix& m, double alpha) {
  detail::require_nonnegative_threshold(alpha);
  DenseMatrix out(m.rows(), m.cols());
  const double* src = m.data().data();
  double* dst = out.data().data();
  const Index n = static_cast<Index>(m.size());
#pragma omp parallel for simd schedule(static) if (m.size() > kParallelWork)
  for (Index k = 0; k < n; ++k) dst[k] = detail::shrink(src[k], alpha);
  return out;
}

double frobenius_norm(const DenseMatrix& m) {
  const double* p = m.data().data();
  return std::sqrt(chunked_sum(m.size(), [p](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s += p[k] * p[k];
    return s;
  }));
}

double l1_norm(const DenseMatrix& m) {
  const double* p = m.data().data();
  return chunked_sum(m.size(), [p](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s += std::abs(p[k]);
    return s;
  });
}

std::size_t l0_count(const DenseMatrix& m, double eps) {
  std::size_t c = 0;
  const double* p = m.data().data();
  const Index n = static_cast<Index>(m.size());
#pragma omp parallel for reduction(+ : c) schedule(static) if (m.size() > kParallelWork)
  for (Index k = 0; k < n; ++k)
    if (std::abs(p[k]) > eps) ++c;
  return c;
}

double max_abs(const DenseMatrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

double inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "inner");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  return chunked_sum(a.size(), [pa, pb](std::size_t b0, std::size_t e) {
    double s = 0.0;
    for (std::size_t k = b0; k < e; ++k) s += pa[k] * pb[k];
    return s;
  });
}

Norms norms(const DenseMatrix& m, double eps) {
  return Norms{frobenius_norm(m), l1_norm(m), l0_count(m, eps)};
}

void axpby(double a, const DenseMatrix& x, double b, DenseMatrix& y) {
  require_same_shape(x, y, "axpby");
  const double* px = x.data().data();
  double* py = y.data().data();
  const Index n = static_cast<Index>(y.size());
#pragma omp parallel for simd schedule(static) if (y.size() > kParallelWork)
  for (Index k = 0; k < n; ++k) py[k] = a * px[k] + b * py[k];
}

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_kernel_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

}  // namespace bisparse
