#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"
#include "bisparse/synth.hpp"
#include "test_util.hpp"

namespace bisparse {
namespace {

TEST(UoSSpec, Validation) {
  UoSSpec ok;
  EXPECT_NO_THROW(ok.validate());
  EXPECT_EQ(ok.total_columns(), 200u);
  UoSSpec s = ok;
  s.subspace_dims[2] = 201;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ok;
  s.error_sparsity = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ok;
  s.subspace_dims.pop_back();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ok;
  s.error_magnitude = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(GenUoS, BlockRanksAndLabels) {
  UoSSpec spec;
  spec.ambient_dim = 40;
  spec.n_per_subspace = {10, 12, 8};
  spec.subspace_dims = {1, 3, 2};
  const UoSData d = gen_uos(spec);
  ASSERT_EQ(d.l0.rows(), 40u);
  ASSERT_EQ(d.l0.cols(), 30u);
  EXPECT_FALSE(d.degenerate);
  std::size_t start = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<std::size_t> idx;
    for (std::size_t j = start; j < start + spec.n_per_subspace[b]; ++j) {
      idx.push_back(j);
      EXPECT_EQ(d.labels[j], b);
    }
    EXPECT_EQ(numeric_rank(d.l0.columns(idx)), spec.subspace_dims[b]);
    start += spec.n_per_subspace[b];
  }
}

TEST(GenUoS, DefaultInstanceRankBound) {
  const UoSData d = gen_uos(UoSSpec{});
  EXPECT_EQ(numeric_rank(d.l0), 25u);
  UoSSpec ones;
  std::fill(ones.subspace_dims.begin(), ones.subspace_dims.end(), 1u);
  EXPECT_EQ(numeric_rank(gen_uos(ones).l0), 5u);
}

TEST(GenUoS, OversizedDimensionIsFlagged) {
  UoSSpec spec;
  spec.ambient_dim = 20;
  spec.n_per_subspace = {4, 6};
  spec.subspace_dims = {5, 2};
  EXPECT_TRUE(gen_uos(spec).degenerate);
}

TEST(GenUoS, DeterministicPerSeed) {
  UoSSpec spec;
  const UoSData a = gen_uos(spec);
  const UoSData b = gen_uos(spec);
  EXPECT_EQ(a.l0, b.l0);
  spec.seed = 2;
  EXPECT_FALSE(gen_uos(spec).l0 == a.l0);
}

TEST(GenSparseErrors, ExactCountAndRange) {
  EXPECT_EQ(l0_count(gen_sparse_errors(200, 200, 0.0, 1.0, 1), 0.0), 0u);
  EXPECT_EQ(l0_count(gen_sparse_errors(20, 30, 1.0, 1.0, 1), 0.0), 600u);
  const DenseMatrix e = gen_sparse_errors(200, 200, 0.05, 2.5, 3);
  EXPECT_EQ(l0_count(e, 0.0), 2000u);
  EXPECT_LE(max_abs(e), 2.5);
  EXPECT_EQ(l0_count(gen_sparse_errors(7, 9, 0.5, 1.0, 4), 0.0),
            static_cast<std::size_t>(std::llround(0.5 * 63)));
  EXPECT_THROW(gen_sparse_errors(3, 3, -0.1, 1.0, 1), std::invalid_argument);
}

TEST(GenSparseErrors, SupportsDifferAcrossSeedsAndRepeatPerSeed) {
  const DenseMatrix a = gen_sparse_errors(50, 50, 0.05, 1.0, 10);
  EXPECT_EQ(a, gen_sparse_errors(50, 50, 0.05, 1.0, 10));
  const DenseMatrix b = gen_sparse_errors(50, 50, 0.05, 1.0, 11);
  std::size_t shared = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.data()[k] != 0.0 && b.data()[k] != 0.0) ++shared;
  EXPECT_LT(shared, l0_count(a, 0.0));
}

TEST(GenSparseErrors, ValuesRoughlyUniform) {
  const DenseMatrix e = gen_sparse_errors(200, 200, 0.5, 1.0, 12);
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (double v : e.data()) {
    if (v == 0.0) continue;
    sum += v;
    sq += v * v;
    ++count;
  }
  EXPECT_NEAR(sum / count, 0.0, 0.02);
  EXPECT_NEAR(sq / count, 1.0 / 3.0, 0.01);
}

TEST(MakeInstance, SumsBitwise) {
  const Instance inst = make_instance(UoSSpec{});
  EXPECT_EQ(inst.x, inst.l0 + inst.e0);
  EXPECT_EQ(l0_count(inst.e0, 0.0), 2000u);
  EXPECT_EQ(inst.labels.size(), 200u);
}

TEST(RecoveryError, Examples) {
  const DenseMatrix l0 = testing::random_matrix(5, 4, 13);
  EXPECT_EQ(recovery_error(l0, l0), 0.0);
  EXPECT_DOUBLE_EQ(recovery_error(l0, DenseMatrix(5, 4)), 1.0);
  DenseMatrix u = testing::random_matrix(5, 4, 14);
  u *= 1.0 / frobenius_norm(u);
  const double eps = 1e-3;
  EXPECT_NEAR(recovery_error(l0, l0 + eps * u), eps / frobenius_norm(l0), 1e-12);
  EXPECT_THROW(recovery_error(DenseMatrix(5, 4), l0), std::invalid_argument);
  EXPECT_THROW(recovery_error(l0, DenseMatrix(4, 5)), std::invalid_argument);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Method, ParseAndName) {
  EXPECT_EQ(parse_method("rosure"), Method::rosure);
  EXPECT_EQ(parse_method("rpca"), Method::rpca);
  EXPECT_STREQ(method_name(Method::rpca), "rpca");
  EXPECT_THROW(parse_method("ssc"), std::invalid_argument);
}

UoSSpec tiny_base() {
  UoSSpec base;
  base.ambient_dim = 30;
  base.n_per_subspace = {10, 10};
  base.subspace_dims = {2, 2};
  return base;
}

TEST(PhaseGrid, CleanCellRecovers) {
  const PhaseGrid g =
      phase_grid(GridAxes{{2}, {0.0}}, tiny_base(), SolverConfig{}, RpcaConfig{}, Method::rosure, 1);
  ASSERT_EQ(g.errors.size(), 1u);
  EXPECT_LT(g.at(0, 0), 1e-6);
  EXPECT_EQ(g.trials_per_cell, 1);
}

TEST(PhaseGrid, IndependentOfThreadCount) {
  const GridAxes axes{{1, 2}, {0.02, 0.08}};
  SolverConfig cfg;
  cfg.max_iter = 200;
  const int saved = kernel_threads();
  set_kernel_threads(1);
  const PhaseGrid a = phase_grid(axes, tiny_base(), cfg, RpcaConfig{}, Method::rosure, 2);
  set_kernel_threads(3);
  const PhaseGrid b = phase_grid(axes, tiny_base(), cfg, RpcaConfig{}, Method::rosure, 2);
  set_kernel_threads(saved);
  ASSERT_EQ(a.errors.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(a.errors[k], b.errors[k]);
    EXPECT_GE(a.errors[k], 0.0);
  }
}

TEST(PhaseGrid, FailedCellIsNanWithLog) {
  // A subspace dim above the ambient dimension makes generation throw.
  const GridAxes axes{{2, 40}, {0.05}};
  const PhaseGrid g = phase_grid(axes, tiny_base(), SolverConfig{}, RpcaConfig{}, Method::rpca, 1);
  EXPECT_FALSE(std::isnan(g.at(0, 0)));
  EXPECT_TRUE(std::isnan(g.at(1, 0)));
  EXPECT_FALSE(g.log.empty());
  EXPECT_EQ(g.count_below(1.0), 1u);
}

TEST(PhaseGrid, CsvRoundTrip) {
  PhaseGrid g;
  g.dim_axis = {1, 5};
  g.sparsity_axis = {0.005, 0.15};
  g.errors = {1.2345678901234567e-7, 0.1, std::nan(""), 3.0};
  g.trials_per_cell = 3;
  const std::string csv = phase_grid_to_csv(g);
  EXPECT_EQ(csv.substr(0, 4), "dim,");
  const PhaseGrid back = phase_grid_from_csv(csv);
  EXPECT_EQ(back.dim_axis, g.dim_axis);
  EXPECT_EQ(back.sparsity_axis, g.sparsity_axis);
  EXPECT_EQ(back.errors[0], g.errors[0]);
  EXPECT_EQ(back.errors[1], g.errors[1]);
  EXPECT_TRUE(std::isnan(back.errors[2]));
  EXPECT_EQ(back.errors[3], 3.0);
  EXPECT_THROW(phase_grid_from_csv("x,1\n"), std::invalid_argument);
  EXPECT_THROW(phase_grid_from_csv("dim,0.1\n1,0.2,0.3\n"), std::invalid_argument);
}

TEST(ErrorGrayLevel, LinearMap) {
  EXPECT_EQ(error_gray_level(0.0), 255);
  EXPECT_EQ(error_gray_level(0.2), 0);
  EXPECT_EQ(error_gray_level(5.0), 0);
  EXPECT_NEAR(error_gray_level(0.1), 128, 1);
  EXPECT_EQ(error_gray_level(std::nan("")), 0);
}

}  // namespace
}  // namespace bisparse
