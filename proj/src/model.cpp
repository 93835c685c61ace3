#include "bisparse/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"

namespace bisparse {

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }

  std::vector<std::size_t> parent;
};

}  // namespace

std::vector<std::size_t> BlockPartition::labels() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  std::vector<std::size_t> out(n);
  for (std::size_t gi = 0; gi < groups.size(); ++gi)
    for (std::size_t c : groups[gi]) out[c] = gi;
  return out;
}

SupportMask::SupportMask(const DenseMatrix& m, double eps)
    : rows_(m.rows()), cols_(m.cols()), mask_(m.size()) {
  for (std::size_t k = 0; k < m.size(); ++k) mask_[k] = std::abs(m.data()[k]) > eps;
}

std::size_t SupportMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

DenseMatrix SupportMask::project(const DenseMatrix& a) const {
  if (a.rows() != rows_ || a.cols() != cols_)
    throw std::invalid_argument("SupportMask::project: shape mismatch");
  DenseMatrix out(rows_, cols_);
  for (std::size_t k = 0; k < a.size(); ++k)
    if (mask_[k]) out.data()[k] = a.data()[k];
  return out;
}

DenseMatrix SupportMask::project_complement(const DenseMatrix& a) const {
  if (a.rows() != rows_ || a.cols() != cols_)
    throw std::invalid_argument("SupportMask::project_complement: shape mismatch");
  DenseMatrix out(rows_, cols_);
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!mask_[k]) out.data()[k] = a.data()[k];
  return out;
}

double relative_eps(const DenseMatrix& m, double rel) { return rel * max_abs(m); }

BlockPartition support_blocks(const DenseMatrix& w, double eps) {
  if (!w.is_square()) throw std::invalid_argument("support_blocks: W must be square");
  const std::size_t n = w.rows();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(w(i, j)) > eps || std::abs(w(j, i)) > eps) sets.unite(i, j);

  BlockPartition out;
  std::vector<std::size_t> slot(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t root = sets.find(c);
    if (slot[root] == std::numeric_limits<std::size_t>::max()) {
      slot[root] = out.groups.size();
      out.groups.emplace_back();
    }
    out.groups[slot[root]].push_back(c);
  }
  for (const auto& g : out.groups) out.max_block = std::max(out.max_block, g.size());
  return out;
}

bool is_k_block_diagonal(const DenseMatrix& w, std::size_t k, double eps) {
  return support_blocks(w, eps).max_block <= k + 1;
}

SelfRepresentation self_representation_residual(const DenseMatrix& l, const DenseMatrix& w) {
  if (!w.is_square() || w.rows() != l.cols())
    throw std::invalid_argument("self_representation_residual: W must be cols(L) x cols(L)");
  const double ln = frobenius_norm(l);
  if (ln == 0.0) throw std::invalid_argument("self_representation_residual: L is zero");
  SelfRepresentation out;
  for (std::size_t i = 0; i < w.rows(); ++i) out.zero_diagonal = out.zero_diagonal && w(i, i) == 0.0;
  out.residual = frobenius_norm(l - matmul(l, w)) / ln;
  return out;
}

double objective_l1(const DenseMatrix& w, const DenseMatrix& e, double lambda) {
  return l1_norm(w) + lambda * l1_norm(e);
}

double objective_l0(const DenseMatrix& w, const DenseMatrix& e, double lambda, double eps) {
  if (!(lambda > 0.0)) throw std::invalid_argument("objective_l0: lambda must be > 0");
  return static_cast<double>(l0_count(w, eps)) / lambda + static_cast<double>(l0_count(e, eps));
}

double condition2_margin(const DenseMatrix& a, const SupportMask& omega_e, const DenseMatrix& w0,
                         double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("condition2_margin: lambda must be > 0");
  return l1_norm(omega_e.project_complement(a)) - l1_norm(omega_e.project(a)) -
         l1_norm(w0) / lambda;
}

PerturbationBound perturbation_bound(const DenseMatrix& e0, const DenseMatrix& a, double eps) {
  require_same_shape(e0, a, "perturbation_l1_inequality");
  const SupportMask omega(e0, eps);
  const DenseMatrix e = omega.project(e0);
  PerturbationBound out;
  out.lhs = l1_norm(e - a) - l1_norm(e);
  out.rhs = l1_norm(omega.project_complement(a)) - l1_norm(omega.project(a));
  const double slack =
      64.0 * std::numeric_limits<double>::epsilon() * (l1_norm(e) + l1_norm(a));
  out.holds = out.lhs >= out.rhs - slack;
  return out;
}

bool perturbation_l1_inequality(const DenseMatrix& e0, const DenseMatrix& a, double eps) {
  return perturbation_bound(e0, a, eps).holds;
}

bool full_rank_spotcheck(std::span<const DenseMatrix> l_blocks,
                         std::span<const DenseMatrix> a_blocks, double rank_tol) {
  if (l_blocks.size() != a_blocks.size())
    throw std::invalid_argument("full_rank_spotcheck: block counts differ");
  for (std::size_t b = 0; b < l_blocks.size(); ++b)
    require_same_shape(l_blocks[b], a_blocks[b], "full_rank_spotcheck");
  for (std::size_t b = 0; b < l_blocks.size(); ++b) {
    const DenseMatrix sum = l_blocks[b] + a_blocks[b];
    if (max_abs(sum) == 0.0) continue;
    if (numeric_rank(sum, rank_tol) == sum.cols()) return true;
  }
  return false;
}

}  // namespace bisparse
