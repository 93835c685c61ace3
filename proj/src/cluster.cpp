#include "bisparse/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"
#include "bisparse/synth.hpp"

namespace bisparse {

namespace {

constexpr double kDegreeFloor = 1e-12;
constexpr int kMaxLloyd = 300;

double sq_dist(const DenseMatrix& p, std::size_t i, const DenseMatrix& c, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.cols(); ++k) {
    const double d = p(i, k) - c(j, k);
    s += d * d;
  }
  return s;
}

KMeansResult lloyd(const DenseMatrix& points, std::size_t clusters, std::uint64_t seed) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  DenseMatrix centers(clusters, dim);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t chosen = pick(rng);
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t k = 0; k < dim; ++k) centers(c, k) = points(chosen, k);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], sq_dist(points, i, centers, c));
    chosen = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
  }

  std::vector<std::size_t> labels(n, 0);
  std::vector<double> dist(n, 0.0);
  for (int it = 0; it < kMaxLloyd; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < clusters; ++c) {
        const double d = sq_dist(points, i, centers, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (labels[i] != best) changed = true;
      labels[i] = best;
      dist[i] = bd;
    }
    if (!changed) break;

    DenseMatrix sums(clusters, dim);
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      for (std::size_t k = 0; k < dim; ++k) sums(labels[i], k) += points(i, k);
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0) {
        // Empty cluster: move it to the point farthest from its center.
        const std::size_t far =
            static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        for (std::size_t k = 0; k < dim; ++k) centers(c, k) = points(far, k);
        dist[far] = 0.0;
        labels[far] = c;
        continue;
      }
      for (std::size_t k = 0; k < dim; ++k)
        centers(c, k) = sums(c, k) / static_cast<double>(counts[c]);
    }
  }

  KMeansResult out{std::move(labels), 0.0};
  for (std::size_t i = 0; i < n; ++i) out.inertia += sq_dist(points, i, centers, out.labels[i]);
  return out;
}

}  // namespace

DenseMatrix affinity(const DenseMatrix& w, double threshold) {
  if (!w.is_square()) throw std::invalid_argument("affinity: W must be square");
  if (!(threshold >= 0.0)) throw std::invalid_argument("affinity: threshold must be >= 0");
  const double cut = threshold * max_abs(w);
  const std::size_t n = w.rows();
  DenseMatrix wt(n, n);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double v = std::abs(w.data()[k]);
    wt.data()[k] = v > cut ? v : 0.0;
  }
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = wt(i, j) + wt(j, i);
  return a;
}

KMeansResult kmeans(const DenseMatrix& points, std::size_t clusters, int restarts,
                    std::uint64_t seed) {
  if (clusters == 0 || clusters > points.rows())
    throw std::invalid_argument("kmeans: need 1 <= clusters <= number of points");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  std::vector<KMeansResult> runs(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < restarts; ++r)
    runs[static_cast<std::size_t>(r)] = lloyd(points, clusters, derive_seed(seed, static_cast<std::uint64_t>(r)));
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return runs[best];
}

ClusterResult spectral_cluster(const DenseMatrix& a, std::size_t clusters, std::uint64_t seed,
                               int restarts) {
  if (!a.is_square()) throw std::invalid_argument("spectral_cluster: affinity must be square");
  const std::size_t n = a.rows();
  if (clusters < 2 || clusters > n)
    throw std::invalid_argument("spectral_cluster: need 2 <= clusters <= n");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) < 0.0 || a(i, j) != a(j, i))
        throw std::invalid_argument("spectral_cluster: affinity must be symmetric nonnegative");

  ClusterResult out{{}, a, DenseMatrix(n, clusters), false};
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    if (d <= 0.0) {
      out.isolated_vertices = true;
      d = kDegreeFloor;
    }
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  DenseMatrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      lap(i, j) = (i == j ? 1.0 : 0.0) - inv_sqrt_deg[i] * a(i, j) * inv_sqrt_deg[j];

  const SymmetricEigen eig = jacobi_eigh(lap);
  for (std::size_t i = 0; i < n; ++i) {
    double nrm = 0.0;
    for (std::size_t c = 0; c < clusters; ++c) {
      out.embedding(i, c) = eig.vectors(i, c);
      nrm += eig.vectors(i, c) * eig.vectors(i, c);
    }
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (std::size_t c = 0; c < clusters; ++c) out.embedding(i, c) /= nrm;
  }
  out.labels = kmeans(out.embedding, clusters, restarts, seed).labels;
  return out;
}

std::vector<std::size_t> hungarian(const DenseMatrix& cost) {
  if (!cost.is_square()) throw std::invalid_argument("hungarian: cost matrix must be square");
  // Shortest augmenting path formulation with row/column potentials
  // (1-based internally, column 0 is the virtual source).
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double clustering_error(std::span<const std::size_t> labels, std::span<const std::size_t> truth) {
  if (labels.size() != truth.size())
    throw std::invalid_argument("clustering_error: label vectors differ in length");
  if (labels.empty()) return 0.0;
  const std::size_t kp = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t kt = *std::max_element(truth.begin(), truth.end()) + 1;
  const std::size_t k = std::max(kp, kt);
  DenseMatrix cost(k, k);
  for (std::size_t i = 0; i < labels.size(); ++i) cost(labels[i], truth[i]) -= 1.0;
  const auto match = hungarian(cost);
  double correct = 0.0;
  for (std::size_t r = 0; r < k; ++r) correct -= cost(r, match[r]);
  return (static_cast<double>(labels.size()) - correct) / static_cast<double>(labels.size());
}

}  // namespace bisparse
