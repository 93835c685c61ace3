#pragma once

// Predicates and objective forms for k-block-diagonal coefficient matrices,
// self-representation, and the exact-recovery conditions. Everything here
// works on a given W; nothing searches over W.

#include <cstddef>
#include <span>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

struct BlockPartition {
  // Disjoint, exhaustive column groups. Each group is sorted ascending and
  // groups are ordered by their smallest index.
  std::vector<std::vector<std::size_t>> groups;
  std::size_t max_block = 0;

  /// Group index per column.
  std::vector<std::size_t> labels() const;
};

class SupportMask {
 public:
  /// Marks entries with |m_ij| > eps.
  SupportMask(const DenseMatrix& m, double eps);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool operator()(std::size_t i, std::size_t j) const noexcept { return mask_[i * cols_ + j]; }
  std::size_t count() const noexcept;

  /// P_Omega(A): keeps entries of A on the support.
  DenseMatrix project(const DenseMatrix& a) const;
  /// P_Omega^c(A) = A - P_Omega(A).
  DenseMatrix project_complement(const DenseMatrix& a) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<bool> mask_;
};

/// Relative support threshold used when callers have no better scale:
/// rel * max|M|.
double relative_eps(const DenseMatrix& m, double rel = 1e-6);

/// Connected components of the graph on columns with an edge (i, j) when
/// |W_ij| > eps or |W_ji| > eps.
BlockPartition support_blocks(const DenseMatrix& w, double eps);

/// True when every block of support_blocks(W, eps) has at most k + 1 columns.
bool is_k_block_diagonal(const DenseMatrix& w, std::size_t k, double eps);

struct SelfRepresentation {
  double residual = 0.0;      // ||L - L W||_F / ||L||_F
  bool zero_diagonal = true;  // false flags a W outside the feasible set
};

SelfRepresentation self_representation_residual(const DenseMatrix& l, const DenseMatrix& w);

/// ||W||_1 + lambda ||E||_1.
double objective_l1(const DenseMatrix& w, const DenseMatrix& e, double lambda);
/// ||W||_0 / lambda + ||E||_0, counting entries above eps.
double objective_l0(const DenseMatrix& w, const DenseMatrix& e, double lambda, double eps);

/// ||P_{Omega^c} A||_1 - ||P_Omega A||_1 - ||W0||_1 / lambda. Nonnegative
/// exactly when the sparse-incoherence condition holds for this A.
double condition2_margin(const DenseMatrix& a, const SupportMask& omega_e, const DenseMatrix& w0,
                         double lambda);

struct PerturbationBound {
  double lhs = 0.0;  // ||E0 - A||_1 - ||E0||_1
  double rhs = 0.0;  // ||P_{Omega^c} A||_1 - ||P_Omega A||_1
  bool holds = false;
};

/// Evaluates ||E0 - A||_1 - ||E0||_1 >= ||P_{Omega^c} A||_1 - ||P_Omega A||_1
/// with Omega the eps-support of E0. E0 is first restricted to Omega so the
/// bound is exact for every input; comparison allows for summation rounding.
PerturbationBound perturbation_bound(const DenseMatrix& e0, const DenseMatrix& a, double eps);
bool perturbation_l1_inequality(const DenseMatrix& e0, const DenseMatrix& a, double eps);

/// True when some L_I + A_I has full column rank. Throws on shape mismatch.
bool full_rank_spotcheck(std::span<const DenseMatrix> l_blocks,
                         std::span<const DenseMatrix> a_blocks, double rank_tol = 1e-10);

}  // namespace bisparse
