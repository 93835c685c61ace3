#include <cmath>

#include <gtest/gtest.h>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/synth.hpp"
#include "properties.hpp"
#include "test_util.hpp"

namespace bisparse {
namespace {

using testing::random_matrix;

UoSSpec small_spec(std::uint64_t seed) {
  UoSSpec spec;
  spec.ambient_dim = 60;
  spec.n_per_subspace = {20, 20, 20};
  spec.subspace_dims = {3, 3, 3};
  spec.error_sparsity = 0.05;
  spec.seed = seed;
  return spec;
}

// Independent evaluation of the augmented Lagrangian with long doubles.
double naive_lagrangian(const DenseMatrix& x, const DenseMatrix& e, const DenseMatrix& w,
                        const DenseMatrix& y, double mu, double lambda) {
  const DenseMatrix l = x - e;
  const DenseMatrix lw = testing::naive_product(l, w);
  long double value = 0.0L;
  for (double v : e.data()) value += lambda * std::abs(v);
  for (double v : w.data()) value += std::abs(v);
  for (std::size_t k = 0; k < l.size(); ++k) {
    const long double r = static_cast<long double>(lw.data()[k]) - l.data()[k];
    value += r * y.data()[k] + 0.5L * mu * r * r;
  }
  return static_cast<double>(value);
}

TEST(SolverConfig, Validation) {
  SolverConfig ok;
  EXPECT_NO_THROW(ok.validate());
  SolverConfig c = ok;
  c.rho = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ok;
  c.mu0 = 1.0;
  c.mu_max = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ok;
  c.eta_margin = 0.99;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ok;
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ok;
  c.lambda = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(MuSchedule, GeometricThenCapped) {
  const MuSchedule s{0.1, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(s.at(0), 0.1);
  EXPECT_DOUBLE_EQ(s.at(3), 0.8);
  EXPECT_EQ(s.at(4), 1.0);
  EXPECT_EQ(s.at(50), 1.0);
  for (int k = 0; k < 200; ++k) EXPECT_LE(s.at(k), s.at(k + 1));
}

TEST(MuSchedule, DefaultsFollowSpectralNorm) {
  const DenseMatrix x = DenseMatrix::diagonal(std::vector<double>{4.0, 2.0, 1.0});
  const MuSchedule s = resolve_mu(x, SolverConfig{});
  EXPECT_NEAR(s.mu0, 0.1 / 4.0, 1e-12);
  EXPECT_NEAR(s.mu_max, 1e10 * s.mu0, 1e-12 * s.mu_max);
  SolverConfig c;
  c.mu0 = 3.0;
  c.mu_max = 7.0;
  const MuSchedule fixed = resolve_mu(x, c);
  EXPECT_EQ(fixed.mu0, 3.0);
  EXPECT_EQ(fixed.mu_max, 7.0);
}

TEST(UpdateMultipliers, ZeroResidualKeepsY) {
  const DenseMatrix l = random_matrix(4, 3, 1);
  const DenseMatrix w(3, 3);
  SolverState st = SolverState::initial(4, 3, 0.5);
  st.y = random_matrix(4, 3, 2);
  // L W = L needs W = I here, which the step accepts as a plain matrix.
  const MuSchedule sched{0.5, 10.0, 1.5};
  const MultiplierUpdate up = update_multipliers(st, l, DenseMatrix::identity(3), sched);
  EXPECT_EQ(up.y, st.y);
  EXPECT_DOUBLE_EQ(up.mu, 0.75);
  const MultiplierUpdate moved = update_multipliers(st, l, w, sched);
  DenseMatrix expect = st.y;
  expect -= 0.5 * l;
  EXPECT_LT(testing::max_abs_diff(moved.y, expect), 1e-15);
}

TEST(UpdateMultipliers, CappedMuStays) {
  SolverState st = SolverState::initial(2, 2, 10.0);
  st.iter = 30;
  const MuSchedule sched{0.1, 10.0, 2.0};
  EXPECT_EQ(update_multipliers(st, random_matrix(2, 2, 3), DenseMatrix(2, 2), sched).mu, 10.0);
}

TEST(AugmentedLagrangian, PlugInValues) {
  const DenseMatrix x = random_matrix(5, 4, 4);
  const DenseMatrix zero_w(4, 4);
  const double fro = frobenius_norm(x);
  EXPECT_NEAR(augmented_lagrangian(x, DenseMatrix(5, 4), zero_w, DenseMatrix(5, 4), 3.0, 0.7),
              1.5 * fro * fro, 1e-12 * fro * fro);

  // Feasible point: duplicated columns, W swapping them.
  const DenseMatrix a = random_matrix(5, 2, 5);
  DenseMatrix l(5, 4);
  for (std::size_t i = 0; i < 5; ++i) {
    l(i, 0) = l(i, 1) = a(i, 0);
    l(i, 2) = l(i, 3) = a(i, 1);
  }
  DenseMatrix w(4, 4);
  w(0, 1) = w(1, 0) = w(2, 3) = w(3, 2) = 1.0;
  const DenseMatrix e = random_matrix(5, 4, 6);
  const DenseMatrix xf = l + e;
  EXPECT_NEAR(augmented_lagrangian(xf, e, w, random_matrix(5, 4, 7), 9.0, 0.3),
              l1_norm(w) + 0.3 * l1_norm(e), 1e-12 * 10);
}

TEST(AugmentedLagrangian, MatchesNaiveEvaluation) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DenseMatrix x = random_matrix(6, 5, 10 + s);
    const DenseMatrix e = testing::random_sparse(6, 5, 0.3, 20 + s);
    const DenseMatrix w = testing::random_zero_diagonal(5, 30 + s, 0.4);
    const DenseMatrix y = random_matrix(6, 5, 40 + s);
    const double got = augmented_lagrangian(x, e, w, y, 2.5, 0.8);
    EXPECT_NEAR(got, naive_lagrangian(x, e, w, y, 2.5, 0.8), 1e-11 * std::max(1.0, std::abs(got)));
  }
}

TEST(UpdateW, ZeroDiagonalAndFullShrinkage) {
  const DenseMatrix x = random_matrix(8, 6, 50);
  SolverConfig cfg;
  SolverState st = SolverState::initial(8, 6, 1.0);
  const DenseMatrix w = update_w(st, x, cfg);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(w(i, i), 0.0);
  EXPECT_GT(l1_norm(w), 0.0);
  // Tiny mu makes 1/(mu eta1) exceed every entry of the argument.
  st.mu = 1e-12;
  EXPECT_EQ(l1_norm(update_w(st, x, cfg)), 0.0);
}

TEST(UpdateW, ZeroDataIsDegenerate) {
  const SolverState st = SolverState::initial(3, 3, 1.0);
  EXPECT_THROW(update_w(st, DenseMatrix(3, 3), SolverConfig{}), DegenerateInput);
}

TEST(UpdateE, IdentityCoefficientsPullTowardData) {
  // W = 0 so Wh = I and eta2 = eta_margin; with E = X the data term vanishes
  // and the step is a pure shrinkage of X by lambda / (mu eta_margin).
  const DenseMatrix x = random_matrix(5, 5, 60);
  SolverConfig cfg;
  cfg.lambda = 0.4;
  cfg.eta_margin = 1.0;
  SolverState st = SolverState::initial(5, 5, 2.0);
  st.e = x;
  const DenseMatrix e = update_e(st, x, cfg);
  EXPECT_LT(testing::max_abs_diff(e, soft_threshold(x, 0.4 / 2.0)), 1e-14);
  st.mu = 1e-9;
  EXPECT_EQ(l1_norm(update_e(st, x, cfg)), 0.0);
}

TEST(UpdateE, SingularComplementIsDegenerate) {
  SolverState st = SolverState::initial(3, 3, 1.0);
  st.w = DenseMatrix::identity(3);
  EXPECT_THROW(update_e(st, random_matrix(3, 3, 61), SolverConfig{}), DegenerateInput);
}

// The E step must move against the gradient of the smooth part of the
// augmented Lagrangian. With lambda = 0 the threshold vanishes and
// (E+ - E) mu eta2 is exactly minus that gradient; compare it with central
// differences.
TEST(UpdateE, DirectionMatchesFiniteDifferenceGradient) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const std::size_t m = 6, n = 6;
    const DenseMatrix x = random_matrix(m, n, 70 + s);
    SolverConfig cfg;
    cfg.lambda = 0.0;
    cfg.eta_margin = 1.0;
    SolverState st{testing::random_zero_diagonal(n, 80 + s, 0.3), random_matrix(m, n, 90 + s, 0.2),
                   random_matrix(m, n, 100 + s, 0.5), 1.7, 0};
    const DenseMatrix e_next = update_e(st, x, cfg);
    DenseMatrix wh = DenseMatrix::identity(n) - st.w;
    const double sn = jacobi_svd(wh).sigma[0];
    const double eta2 = sn * sn;

    auto smooth = [&](const DenseMatrix& e) {
      return augmented_lagrangian(x, e, st.w, st.y, st.mu, 0.0) - l1_norm(st.w);
    };
    const double h = 1e-6;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        DenseMatrix ep = st.e, em = st.e;
        ep(i, j) += h;
        em(i, j) -= h;
        const double fd = (smooth(ep) - smooth(em)) / (2.0 * h);
        const double step = (e_next(i, j) - st.e(i, j)) * st.mu * eta2;
        EXPECT_NEAR(step, -fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(UpdateW, DirectionMatchesFiniteDifferenceGradient) {
  const std::size_t m = 6, n = 5;
  const DenseMatrix x = random_matrix(m, n, 110);
  SolverConfig cfg;
  cfg.eta_margin = 1.0;
  SolverState st{testing::random_zero_diagonal(n, 111, 0.3), random_matrix(m, n, 112, 0.2),
                 random_matrix(m, n, 113, 0.5), 1.3, 0};
  const DenseMatrix l = x - st.e;
  // A huge mu makes the threshold 1/(mu eta1) negligible.
  st.mu = 1e9;
  const DenseMatrix w_next = update_w(st, l, cfg);
  const double sl = jacobi_svd(l).sigma[0];
  const double eta1 = sl * sl;
  auto smooth = [&](const DenseMatrix& w) {
    return augmented_lagrangian(x, st.e, w, st.y, st.mu, 0.0) - l1_norm(w);
  };
  const double h = 1e-7;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      DenseMatrix wp = st.w, wm = st.w;
      wp(i, j) += h;
      wm(i, j) -= h;
      const double fd = (smooth(wp) - smooth(wm)) / (2.0 * h) / st.mu;
      const double step = (w_next(i, j) - st.w(i, j)) * eta1;
      EXPECT_NEAR(step, -fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(StepDescent, HundredRandomSmallInstances) {
  const testing::DescentReport rep = testing::step_descent_check(100);
  EXPECT_EQ(rep.instances, 100);
  EXPECT_EQ(rep.w_increases, 0);
  EXPECT_EQ(rep.e_increases, 0);
}

TEST(Solve, RejectsZeroColumnsAndSingleColumn) {
  DenseMatrix x = random_matrix(4, 3, 120);
  for (std::size_t i = 0; i < 4; ++i) x(i, 1) = 0.0;
  EXPECT_THROW(solve(x, SolverConfig{}), std::invalid_argument);
  EXPECT_THROW(solve(random_matrix(4, 1, 121), SolverConfig{}), std::invalid_argument);
}

TEST(Solve, CleanDuplicatedColumnsAreAFixedPoint) {
  const DenseMatrix a = random_matrix(12, 6, 122);
  DenseMatrix x(12, 12);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 6; ++j) x(i, 2 * j) = x(i, 2 * j + 1) = a(i, j);
  const SolverResult r = solve(x, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(frobenius_norm(r.e) / frobenius_norm(x), 1e-6);
  EXPECT_LT(r.history.back().residual, SolverConfig{}.tol);
  EXPECT_EQ(r.l + r.e, x);
}

TEST(Solve, RecoversSmallUnionOfSubspaces) {
  const Instance inst = make_instance(small_spec(5));
  const SolverResult r = solve(inst.x, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(recovery_error(inst.l0, r.l), 1e-3);
  EXPECT_LT(recovery_error(inst.e0, r.e), 1e-3);
  for (std::size_t i = 0; i < r.w.rows(); ++i) EXPECT_EQ(r.w(i, i), 0.0);
  EXPECT_EQ(r.l + r.e, inst.x);
}

TEST(Solve, MechanicsHoldEveryIteration) {
  const Instance inst = make_instance(small_spec(6));
  SolverConfig cfg;
  cfg.mu_max = 50.0 * resolve_mu(inst.x, cfg).mu0;  // reach the cap within the replay
  const testing::MechanicsReport rep = testing::replay_mechanics(inst.x, cfg, 80);
  EXPECT_EQ(rep.iterations, 80);
  EXPECT_EQ(rep.nonzero_diagonals, 0);
  EXPECT_EQ(rep.schedule_mismatches, 0);

  std::vector<double> mus;
  solve(inst.x, cfg, [&](const IterationRecord& rec) { mus.push_back(rec.mu); });
  const MuSchedule sched = resolve_mu(inst.x, cfg);
  for (std::size_t k = 0; k < mus.size(); ++k)
    EXPECT_EQ(mus[k], std::min(sched.mu0 * std::pow(sched.rho, static_cast<double>(k)), sched.mu_max));
}

TEST(Solve, UnconvergedIsFlaggedNotThrown) {
  const Instance inst = make_instance(small_spec(7));
  SolverConfig cfg;
  cfg.max_iter = 3;
  const SolverResult r = solve(inst.x, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(r.history.size(), 3u);
}

TEST(Solve, DeterministicAcrossRunsAndThreads) {
  const Instance inst = make_instance(small_spec(8));
  SolverConfig cfg;
  cfg.max_iter = 60;
  const int saved = kernel_threads();
  set_kernel_threads(1);
  const SolverResult a = solve(inst.x, cfg);
  const SolverResult b = solve(inst.x, cfg);
  set_kernel_threads(3);
  const SolverResult c = solve(inst.x, cfg);
  set_kernel_threads(saved);
  EXPECT_EQ(a.l, b.l);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.e, b.e);
  EXPECT_EQ(a.l, c.l);
  EXPECT_EQ(a.w, c.w);
}

TEST(Solve, LambdaSweepIsStable) {
  const Instance inst = make_instance(small_spec(9));
  for (double lambda : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    EXPECT_LT(recovery_error(inst.l0, solve(inst.x, cfg).l), 1e-3) << "lambda " << lambda;
  }
}

}  // namespace
}  // namespace bisparse
