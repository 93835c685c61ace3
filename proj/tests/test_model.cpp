#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bisparse/kernels.hpp"
#include "bisparse/model.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/synth.hpp"
#include "properties.hpp"
#include "test_util.hpp"

namespace bisparse {
namespace {

using testing::random_matrix;

// Block-diagonal W with the given block sizes, dense inside each block.
DenseMatrix block_w(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const DenseMatrix r = random_matrix(n, n, seed);
  DenseMatrix w(n, n);
  std::size_t start = 0;
  for (std::size_t b : sizes) {
    for (std::size_t i = start; i < start + b; ++i)
      for (std::size_t j = start; j < start + b; ++j)
        if (i != j) w(i, j) = r(i, j) == 0.0 ? 0.5 : r(i, j);
    start += b;
  }
  return w;
}

TEST(SupportBlocks, SingletonsAndPairs) {
  const BlockPartition iso = support_blocks(DenseMatrix(4, 4), 0.0);
  EXPECT_EQ(iso.groups.size(), 4u);
  EXPECT_EQ(iso.max_block, 1u);

  DenseMatrix w(5, 5);
  w(0, 3) = 1.0;  // one direction suffices for an edge
  w(4, 2) = -2.0;
  const BlockPartition p = support_blocks(w, 0.0);
  ASSERT_EQ(p.groups.size(), 3u);
  EXPECT_EQ(p.groups[0], (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(p.groups[1], (std::vector<std::size_t>{1}));
  EXPECT_EQ(p.groups[2], (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(p.max_block, 2u);
  EXPECT_EQ(p.labels(), (std::vector<std::size_t>{0, 1, 2, 0, 2}));
  // Entries at or below eps do not connect.
  EXPECT_EQ(support_blocks(w, 1.5).groups.size(), 4u);
}

TEST(SupportBlocks, DisjointAndExhaustive) {
  const DenseMatrix w = block_w({3, 1, 4, 2}, 1);
  const BlockPartition p = support_blocks(w, 0.0);
  std::vector<std::size_t> seen;
  for (const auto& g : p.groups) seen.insert(seen.end(), g.begin(), g.end());
  std::sort(seen.begin(), seen.end());
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  EXPECT_EQ(seen, all);
  EXPECT_EQ(p.max_block, 4u);
}

TEST(SupportBlocks, InvariantUnderSimultaneousPermutation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 12;
    DenseMatrix w = testing::random_sparse(n, n, 0.08, 100 + trial);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    // P W P^T: entry (perm[i], perm[j]) of the permuted matrix is W(i, j).
    DenseMatrix pw(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pw(perm[i], perm[j]) = w(i, j);

    const std::vector<std::size_t> a = support_blocks(w, 0.0).labels();
    const std::vector<std::size_t> b = support_blocks(pw, 0.0).labels();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(a[i] == a[j], b[perm[i]] == b[perm[j]]);
  }
}

TEST(KBlockDiagonal, PredicateAndDensityBound) {
  const DenseMatrix w = block_w({3, 2, 4}, 3);
  EXPECT_TRUE(is_k_block_diagonal(w, 3, 0.0));
  EXPECT_FALSE(is_k_block_diagonal(w, 2, 0.0));
  // For accepted W, ||W||_0 / n^2 <= max_block / n.
  for (int trial = 0; trial < 200; ++trial) {
    const DenseMatrix r = testing::random_sparse(15, 15, 0.04 + 0.001 * trial, 200 + trial);
    const BlockPartition p = support_blocks(r, 0.0);
    if (!is_k_block_diagonal(r, p.max_block - 1, 0.0)) ADD_FAILURE() << "own max block rejected";
    const double n = 15.0;
    EXPECT_LE(static_cast<double>(l0_count(r, 0.0)) / (n * n), static_cast<double>(p.max_block) / n);
  }
}

TEST(SupportMask, ProjectionSplit) {
  const DenseMatrix e{{0.0, 2.0}, {-1e-9, 3.0}};
  const SupportMask mask(e, 1e-6);
  EXPECT_EQ(mask.count(), 2u);
  const DenseMatrix a{{1.0, 2.0}, {3.0, 4.0}};
  EXPECT_EQ(mask.project(a), (DenseMatrix{{0.0, 2.0}, {0.0, 4.0}}));
  EXPECT_EQ(mask.project_complement(a), (DenseMatrix{{1.0, 0.0}, {3.0, 0.0}}));
  EXPECT_EQ(mask.project(a) + mask.project_complement(a), a);
  EXPECT_DOUBLE_EQ(relative_eps(DenseMatrix{{-4.0, 1.0}}), 4e-6);
}

TEST(SelfRepresentation, Examples) {
  const DenseMatrix a = random_matrix(6, 2, 4);
  DenseMatrix l(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    l(i, 0) = l(i, 2) = a(i, 0);
    l(i, 1) = l(i, 3) = a(i, 1);
  }
  DenseMatrix w(4, 4);
  w(0, 2) = w(2, 0) = w(1, 3) = w(3, 1) = 1.0;
  const SelfRepresentation exact = self_representation_residual(l, w);
  EXPECT_EQ(exact.residual, 0.0);
  EXPECT_TRUE(exact.zero_diagonal);
  EXPECT_DOUBLE_EQ(self_representation_residual(l, DenseMatrix(4, 4)).residual, 1.0);
  EXPECT_FALSE(self_representation_residual(l, DenseMatrix::identity(4)).zero_diagonal);
  EXPECT_THROW(self_representation_residual(DenseMatrix(3, 3), DenseMatrix(3, 3)),
               std::invalid_argument);
}

TEST(SelfRepresentation, SolverOutputIsNearlyExact) {
  UoSSpec spec;
  spec.ambient_dim = 60;
  spec.n_per_subspace = {20, 20, 20};
  spec.subspace_dims = {3, 3, 3};
  const Instance inst = make_instance(spec);
  const SolverResult r = solve(inst.x, SolverConfig{});
  EXPECT_LT(self_representation_residual(r.l, r.w).residual, 1e-6);
}

TEST(Objectives, PlugInValues) {
  const DenseMatrix zero(3, 3);
  EXPECT_EQ(objective_l1(zero, zero, 2.0), 0.0);
  EXPECT_EQ(objective_l0(zero, zero, 2.0, 0.0), 0.0);
  const DenseMatrix w{{0.0, 4.0}, {0.0, 0.0}};
  const DenseMatrix e{{1.0, -1.0}, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(objective_l1(w, e, 3.0), 10.0);
  EXPECT_DOUBLE_EQ(objective_l0(w, e, 4.0, 0.0), 1.0 / 4.0 + 2.0);
  // Soft-thresholding W never raises the l1 objective.
  for (int s = 0; s < 20; ++s) {
    const DenseMatrix ws = random_matrix(5, 5, 300 + s);
    const DenseMatrix es = random_matrix(5, 5, 400 + s);
    EXPECT_LE(objective_l1(soft_threshold(ws, 0.3), es, 1.5), objective_l1(ws, es, 1.5));
  }
}

TEST(Condition2, Examples) {
  const DenseMatrix e{{1.0, 0.0}, {0.0, 0.0}};
  const SupportMask omega(e, 0.0);
  const DenseMatrix w0{{0.0, 1.0}, {1.0, 0.0}};  // ||W0||_1 = 2
  const DenseMatrix off{{0.0, 2.0}, {-3.0, 0.0}};  // on the complement, ||A||_1 = 5
  EXPECT_DOUBLE_EQ(condition2_margin(off, omega, w0, 2.0), 4.0);
  const DenseMatrix on{{-2.5, 0.0}, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(condition2_margin(on, omega, w0, 2.0), -2.5 - 1.0);
}

TEST(PerturbationInequality, BoundaryCases) {
  const DenseMatrix e0 = testing::random_sparse(6, 5, 0.3, 400);
  const PerturbationBound zero = perturbation_bound(e0, DenseMatrix(6, 5), 0.0);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  EXPECT_TRUE(zero.holds);
  const PerturbationBound same = perturbation_bound(e0, e0, 0.0);
  EXPECT_NEAR(same.lhs, -l1_norm(e0), 1e-12);
  EXPECT_NEAR(same.rhs, -l1_norm(e0), 1e-12);
  EXPECT_TRUE(same.holds);
  EXPECT_THROW(perturbation_bound(e0, DenseMatrix(5, 6), 0.0), std::invalid_argument);
}

TEST(PerturbationInequality, TenThousandFuzzedPairs) {
  const testing::FuzzReport rep = testing::perturbation_fuzz(10000, 5);
  EXPECT_EQ(rep.pairs, 10000);
  EXPECT_EQ(rep.violations, 0);
}

TEST(FullRankSpotcheck, Examples) {
  std::vector<DenseMatrix> ls{random_matrix(6, 3, 500), random_matrix(6, 2, 501)};
  std::vector<DenseMatrix> neg{-1.0 * ls[0], -1.0 * ls[1]};
  EXPECT_FALSE(full_rank_spotcheck(ls, neg));
  std::vector<DenseMatrix> one = neg;
  one[1] = one[1] + random_matrix(6, 2, 502);
  EXPECT_TRUE(full_rank_spotcheck(ls, one));
  std::vector<DenseMatrix> sq{random_matrix(4, 4, 503)};
  std::vector<DenseMatrix> sq0{DenseMatrix(4, 4)};
  EXPECT_TRUE(full_rank_spotcheck(sq, sq0));
  std::vector<DenseMatrix> bad{DenseMatrix(6, 4)};
  EXPECT_THROW(full_rank_spotcheck(std::span<const DenseMatrix>(ls).first(1), bad),
               std::invalid_argument);
  EXPECT_THROW(full_rank_spotcheck(ls, std::span<const DenseMatrix>(neg).first(1)),
               std::invalid_argument);
}

TEST(JointCondition2, PerturbationsOfARecoveredInstance) {
  UoSSpec spec;
  spec.ambient_dim = 60;
  spec.n_per_subspace = {20, 20, 20};
  spec.subspace_dims = {3, 3, 3};
  spec.seed = 11;
  const Instance inst = make_instance(spec);
  const SolverConfig cfg;
  const SolverResult r = solve(inst.x, cfg);
  ASSERT_LT(recovery_error(inst.l0, r.l), 1e-3);
  const testing::JointReport rep =
      testing::joint_condition2_check(r.l, r.w, r.e, cfg.lambda, relative_eps(r.e), 100, 12);
  EXPECT_EQ(rep.samples, 100);
  EXPECT_EQ(rep.feasible_failures, 0);
  EXPECT_EQ(rep.margin_nonnegative, 100);
  EXPECT_EQ(rep.ordering_holds, rep.margin_nonnegative);
}

}  // namespace
}  // namespace bisparse
