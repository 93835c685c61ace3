#include "bisparse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "bisparse/kernels.hpp"

namespace bisparse {

namespace {

// Four interleaved partial sums; fixed order, so results are reproducible.
[[gnu::always_inline]] inline double dot_body(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += x[k] * y[k];
    s1 += x[k + 1] * y[k + 1];
    s2 += x[k + 2] * y[k + 2];
    s3 += x[k + 3] * y[k + 3];
  }
  for (; k < n; ++k) s0 += x[k] * y[k];
  return (s0 + s1) + (s2 + s3);
}

[[gnu::always_inline]] inline void rotate_body(double* x, double* y, std::size_t n, double c,
                                               double s) {
  for (std::size_t k = 0; k < n; ++k) {
    const double xk = x[k];
    const double yk = y[k];
    x[k] = c * xk - s * yk;
    y[k] = s * xk + c * yk;
  }
}

double dot_generic(const double* x, const double* y, std::size_t n) { return dot_body(x, y, n); }
[[gnu::target("avx2,fma")]] double dot_avx2(const double* x, const double* y, std::size_t n) {
  return dot_body(x, y, n);
}
void rotate_generic(double* x, double* y, std::size_t n, double c, double s) {
  rotate_body(x, y, n, c, s);
}
[[gnu::target("avx2,fma")]] void rotate_avx2(double* x, double* y, std::size_t n, double c,
                                              double s) {
  rotate_body(x, y, n, c, s);
}

bool use_avx2() {
  static const bool yes = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return yes;
}

double dot(const double* x, const double* y, std::size_t n) {
  return use_avx2() ? dot_avx2(x, y, n) : dot_generic(x, y, n);
}

void rotate(double* x, double* y, std::size_t n, double c, double s) {
  if (use_avx2()) {
    rotate_avx2(x, y, n, c, s);
  } else {
    rotate_generic(x, y, n, c, s);
  }
}

double norm2(const std::vector<double>& x) { return std::sqrt(dot(x.data(), x.data(), x.size())); }

// y = M v, z = M^T y.
void gram_apply(const DenseMatrix& m, const std::vector<double>& v, std::vector<double>& y,
                std::vector<double>& z) {
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i).data(), v.data(), m.cols());
  std::fill(z.begin(), z.end(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i).data();
    const double yi = y[i];
    for (std::size_t j = 0; j < m.cols(); ++j) z[j] += yi * r[j];
  }
}

// Replaces `col` with a unit vector orthogonal to the columns flagged in
// `done` (all of them unit length). Unit vectors are tried in order from
// `cursor`, which persists across calls so rejected ones are not retried; with fewer than `len` finished columns some e_i keeps a residual of
// at least 1/sqrt(len) after projection, so a small acceptance bar suffices.
void orthonormal_completion(std::vector<std::vector<double>>& basis, std::vector<bool>& done,
                            std::size_t col, std::size_t len, std::size_t& cursor) {
  const double accept = 0.5 / std::sqrt(static_cast<double>(len));
  std::vector<double> cand(len);
  // Second scan restarts at e_0, where the bound above is guaranteed.
  for (int scan = 0; scan < 2; ++scan, cursor = 0) {
    for (; cursor < len; ++cursor) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[cursor] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
          if (!done[j]) continue;
          const double proj = dot(basis[j].data(), cand.data(), len);
          for (std::size_t k = 0; k < len; ++k) cand[k] -= proj * basis[j][k];
        }
        if (pass == 0 && norm2(cand) < accept) break;
      }
      const double nrm = norm2(cand);
      if (nrm >= accept) {
        for (double& x : cand) x /= nrm;
        basis[col] = cand;
        done[col] = true;
        ++cursor;
        return;
      }
    }
  }
  throw std::logic_error("orthonormal_completion: no candidate direction");
}

Svd jacobi_svd_tall(const DenseMatrix& input, const DenseMatrix* start) {
  const std::size_t m = input.rows();
  const std::size_t n = input.cols();

  const double scale = max_abs(input);
  std::vector<std::vector<double>> a(n, std::vector<double>(m));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  if (start != nullptr) {
    const DenseMatrix rotated = matmul(input, *start);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) a[j][i] = scale > 0.0 ? rotated(i, j) / scale : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v[j][i] = (*start)(i, j);
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) a[j][i] = scale > 0.0 ? input(i, j) / scale : 0.0;
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;
  }

  const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(m));
  constexpr int kMaxSweeps = 100;
  std::vector<double> sq(n);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (std::size_t j = 0; j < n; ++j) sq[j] = dot(a[j].data(), a[j].data(), m);
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = sq[p];
        const double beta = sq[q];
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = dot(a[p].data(), a[q].data(), m);
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate(a[p].data(), a[q].data(), m, c, s);
        rotate(v[p].data(), v[q].data(), n, c, s);
        sq[p] = alpha - t * gamma;
        sq[q] = beta + t * gamma;
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(a[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  std::vector<std::vector<double>> ucols(n);
  std::vector<std::vector<double>> vcols(n);
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < n; ++r) {
    sorted[r] = sigma[order[r]];
    ucols[r] = a[order[r]];
    vcols[r] = v[order[r]];
  }
  const double negligible = sorted.empty() ? 0.0 : sorted[0] * 1e-13;
  std::vector<bool> done(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    if (sorted[r] > negligible && sorted[r] > 0.0) {
      for (double& x : ucols[r]) x /= sorted[r];
      done[r] = true;
    }
  }
  std::size_t cursor = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!done[r]) orthonormal_completion(ucols, done, r, m, cursor);
  }

  Svd out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t r = 0; r < n; ++r) {
    out.sigma[r] = sorted[r] * scale;
    for (std::size_t i = 0; i < m; ++i) out.u(i, r) = ucols[r][i];
    for (std::size_t i = 0; i < n; ++i) out.v(i, r) = vcols[r][i];
  }
  return out;
}

}  // namespace

SpectralNormEstimate spectral_norm(const DenseMatrix& m, double tol, int max_iter,
                                   std::vector<double>* warm_start, std::uint64_t seed) {
  const std::size_t n = m.cols();
  std::vector<double> v;
  if (warm_start != nullptr && warm_start->size() == n && norm2(*warm_start) > 0.0) {
    v = *warm_start;
  } else {
    v.assign(n, 1.0);
  }
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> y(m.rows());
  std::vector<double> z(n);

  SpectralNormEstimate est;
  double prev = -1.0;
  int redraws = 0;
  for (int it = 1; it <= max_iter; ++it) {
    gram_apply(m, v, y, z);
    const double sigma = norm2(y);
    const double nz = norm2(z);
    est.iterations = it;
    if (nz == 0.0) {
      // v sits in the null space (or M is zero); restart from a random vector.
      if (++redraws > 3) {
        est.value = 0.0;
        est.converged = max_abs(m) == 0.0;
        break;
      }
      for (double& x : v) x = normal(rng);
      nv = norm2(v);
      for (double& x : v) x /= nv;
      prev = -1.0;
      continue;
    }
    est.value = std::max(est.value, sigma);
    for (std::size_t j = 0; j < n; ++j) v[j] = z[j] / nz;
    if (prev >= 0.0 && std::abs(sigma - prev) <= tol * sigma) {
      est.converged = true;
      break;
    }
    prev = sigma;
  }
  if (warm_start != nullptr) *warm_start = v;
  return est;
}

Svd jacobi_svd(const DenseMatrix& m, const DenseMatrix* start) {
  if (!m.all_finite()) throw std::invalid_argument("jacobi_svd: non-finite input");
  const std::size_t k = std::min(m.rows(), m.cols());
  if (start != nullptr && (start->rows() != k || start->cols() != k))
    throw std::invalid_argument("jacobi_svd: start basis must be min(rows, cols) square");
  if (m.rows() >= m.cols()) return jacobi_svd_tall(m, start);
  Svd t = jacobi_svd_tall(m.transpose(), start);
  return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

DenseMatrix reconstruct(const Svd& svd) {
  DenseMatrix us = svd.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t r = 0; r < us.cols(); ++r) us(i, r) *= svd.sigma[r];
  return matmul_nt(us, svd.v);
}

SymmetricEigen jacobi_eigh(const DenseMatrix& s) {
  if (!s.is_square()) throw std::invalid_argument("jacobi_eigh: matrix must be square");
  const std::size_t n = s.rows();
  const double asym_tol = 1e-10 * std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > asym_tol)
        throw std::invalid_argument("jacobi_eigh: matrix is not symmetric");

  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  DenseMatrix vec = DenseMatrix::identity(n);

  const double total = frobenius_norm(a);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= 1e-14 * total || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * total) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double sn = t * c;
        // A <- J^T A J with J the (p, q) rotation.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vec(k, p);
          const double vkq = vec(k, q);
          vec(k, p) = c * vkp - sn * vkq;
          vec(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t r = 0; r < n; ++r) {
    out.values[r] = a(order[r], order[r]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, r) = vec(k, order[r]);
  }
  return out;
}

std::size_t numeric_rank(const DenseMatrix& m, double rel_tol) {
  const Svd svd = jacobi_svd(m);
  if (svd.sigma.empty() || svd.sigma[0] == 0.0) return 0;
  const double cut = rel_tol * svd.sigma[0];
  return static_cast<std::size_t>(
      std::count_if(svd.sigma.begin(), svd.sigma.end(), [cut](double x) { return x > cut; }));
}

}  // namespace bisparse
