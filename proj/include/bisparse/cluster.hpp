#pragma once

// Spectral clustering of the recovered coefficient matrix: symmetric
// affinity from a thresholded |W|, normalized-Laplacian embedding, k-means,
// and permutation-invariant scoring.

#include <cstdint>
#include <span>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

inline constexpr double kDefaultAffinityThreshold = 1e-4;

/// Wt_ij = |W_ij| if |W_ij| > threshold * max|W|, else 0; returns Wt + Wt^T.
DenseMatrix affinity(const DenseMatrix& w, double threshold = kDefaultAffinityThreshold);

struct ClusterResult {
  std::vector<std::size_t> labels;
  DenseMatrix affinity;
  DenseMatrix embedding;  // n x J, unit rows
  bool isolated_vertices = false;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  double inertia = 0.0;
};

/// Best of `restarts` Lloyd runs; each run seeds its first center from the
/// generator and the rest by greedy farthest point.
KMeansResult kmeans(const DenseMatrix& points, std::size_t clusters, int restarts,
                    std::uint64_t seed);

ClusterResult spectral_cluster(const DenseMatrix& a, std::size_t clusters, std::uint64_t seed,
                               int restarts = 10);

/// Minimum misassignment fraction over matchings of predicted to true labels
/// (Hungarian assignment on the confusion matrix).
double clustering_error(std::span<const std::size_t> labels, std::span<const std::size_t> truth);

/// Optimal assignment for a square cost matrix; result[row] = column.
std::vector<std::size_t> hungarian(const DenseMatrix& cost);

}  // namespace bisparse
