#include "bisparse/rosure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bisparse/kernels.hpp"
#include "bisparse/linalg.hpp"

namespace bisparse {

namespace {

constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIter = 5000;

double squared_spectral_norm(const DenseMatrix& m, std::vector<double>* warm,
                             std::uint64_t seed) {
  const double s = spectral_norm(m, kPowerTol, kPowerMaxIter, warm, seed).value;
  return s * s;
}

DenseMatrix identity_minus(const DenseMatrix& w) {
  DenseMatrix out = -1.0 * w;
  for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += 1.0;
  return out;
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.all_finite()) throw std::runtime_error(std::string(what) + ": iterate became non-finite");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("SolverConfig: lambda must be > 0");
  if (!(rho > 1.0)) throw std::invalid_argument("SolverConfig: rho must be > 1");
  if (mu0 && !(*mu0 > 0.0)) throw std::invalid_argument("SolverConfig: mu0 must be > 0");
  if (mu_max && !(*mu_max > 0.0)) throw std::invalid_argument("SolverConfig: mu_max must be > 0");
  if (mu0 && mu_max && *mu_max < *mu0)
    throw std::invalid_argument("SolverConfig: mu_max must be >= mu0");
  if (!(eta_margin >= 1.0)) throw std::invalid_argument("SolverConfig: eta_margin must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
}

double MuSchedule::at(int k) const {
  return std::min(mu0 * std::pow(rho, static_cast<double>(k)), mu_max);
}

MuSchedule resolve_mu(const DenseMatrix& x, const SolverConfig& config) {
  config.validate();
  double mu0 = 0.0;
  if (config.mu0) {
    mu0 = *config.mu0;
  } else {
    const double sx = spectral_norm(x, kPowerTol, kPowerMaxIter, nullptr, config.seed).value;
    if (sx == 0.0) throw std::invalid_argument("solve: X is the zero matrix");
    mu0 = 0.1 / sx;
  }
  const double mu_max = config.mu_max ? *config.mu_max : 1e10 * mu0;
  if (mu_max < mu0) throw std::invalid_argument("SolverConfig: mu_max must be >= mu0");
  return MuSchedule{mu0, mu_max, config.rho};
}

SolverState SolverState::initial(std::size_t m, std::size_t n, double mu0) {
  return SolverState{DenseMatrix(n, n), DenseMatrix(m, n), DenseMatrix(m, n), mu0, 0};
}

DenseMatrix update_w(const SolverState& state, const DenseMatrix& l, const SolverConfig& config,
                     StepCache* cache) {
  const double eta1 =
      config.eta_margin * squared_spectral_norm(l, cache ? &cache->l_vector : nullptr, config.seed);
  if (!(eta1 > 0.0)) throw DegenerateInput("update_w: L is zero, step bound eta1 = 0");
  const double mu = state.mu;

  // G = L (I - W) - Y / mu
  DenseMatrix g = l - matmul(l, state.w);
  axpby(-1.0 / mu, state.y, 1.0, g);
  DenseMatrix arg = matmul_tn(l, g);
  axpby(1.0, state.w, 1.0 / eta1, arg);
  DenseMatrix w = soft_threshold(arg, 1.0 / (mu * eta1));
  w.set_diagonal(0.0);
  require_finite(w, "update_w");
  return w;
}

DenseMatrix update_e(const SolverState& state, const DenseMatrix& x, const SolverConfig& config,
                     StepCache* cache) {
  const DenseMatrix what = identity_minus(state.w);
  const double eta2 = config.eta_margin *
                      squared_spectral_norm(what, cache ? &cache->what_vector : nullptr,
                                            config.seed);
  if (!(eta2 > 0.0)) throw DegenerateInput("update_e: I - W is zero, step bound eta2 = 0");
  const double mu = state.mu;

  const DenseMatrix l = x - state.e;
  DenseMatrix g = matmul(l, what);
  axpby(-1.0 / mu, state.y, 1.0, g);
  DenseMatrix arg = matmul_nt(g, what);
  axpby(1.0, state.e, 1.0 / eta2, arg);
  DenseMatrix e = soft_threshold(arg, config.lambda / (mu * eta2));
  require_finite(e, "update_e");
  return e;
}

MultiplierUpdate update_multipliers(const SolverState& state, const DenseMatrix& l,
                                    const DenseMatrix& w, const MuSchedule& schedule) {
  DenseMatrix r = matmul(l, w);
  r -= l;
  DenseMatrix y = state.y;
  axpby(state.mu, r, 1.0, y);
  // Same value as min(rho * mu_k, mu_max), without accumulating rounding.
  return MultiplierUpdate{std::move(y), schedule.at(state.iter + 1)};
}

double augmented_lagrangian(const DenseMatrix& x, const DenseMatrix& e, const DenseMatrix& w,
                            const DenseMatrix& y, double mu, double lambda) {
  require_same_shape(x, e, "augmented_lagrangian");
  require_same_shape(x, y, "augmented_lagrangian");
  const DenseMatrix l = x - e;
  DenseMatrix r = matmul(l, w);
  r -= l;
  const double rn = frobenius_norm(r);
  return lambda * l1_norm(e) + l1_norm(w) + inner(r, y) + 0.5 * mu * rn * rn;
}

SolverResult solve(const DenseMatrix& x, const SolverConfig& config,
                   const IterationObserver& observer) {
  config.validate();
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (n < 2) throw std::invalid_argument("solve: need at least 2 columns");
  if (!x.all_finite()) throw std::invalid_argument("solve: X has non-finite entries");
  for (std::size_t j = 0; j < n; ++j) {
    bool zero = true;
    for (std::size_t i = 0; i < m && zero; ++i) zero = x(i, j) == 0.0;
    if (zero) throw std::invalid_argument("solve: column " + std::to_string(j) + " of X is zero");
  }

  const MuSchedule schedule = resolve_mu(x, config);
  SolverState state = SolverState::initial(m, n, schedule.mu0);
  StepCache cache;
  const double x_norm = frobenius_norm(x);

  SolverResult result{x, DenseMatrix(n, n), DenseMatrix(m, n), {}, false, 0};
  result.history.reserve(static_cast<std::size_t>(std::min(config.max_iter, 4096)));

  for (int k = 0; k < config.max_iter; ++k) {
    state.iter = k;
    state.mu = schedule.at(k);

    const DenseMatrix l = x - state.e;
    DenseMatrix w_next = update_w(state, l, config, &cache);
    const double dw = frobenius_norm(w_next - state.w) / std::max(1.0, frobenius_norm(w_next));
    state.w = std::move(w_next);

    DenseMatrix e_next = update_e(state, x, config, &cache);
    const double de = frobenius_norm(e_next - state.e) / x_norm;

    DenseMatrix r = matmul(l, state.w);
    r -= l;
    const double residual = frobenius_norm(r) / x_norm;

    IterationRecord rec;
    rec.iter = k;
    rec.residual = residual;
    rec.objective = l1_norm(state.w) + config.lambda * l1_norm(e_next);
    rec.lagrangian =
        augmented_lagrangian(x, e_next, state.w, state.y, state.mu, config.lambda);
    rec.mu = state.mu;
    result.history.push_back(rec);
    if (observer) observer(rec);

    axpby(state.mu, r, 1.0, state.y);
    state.e = std::move(e_next);
    result.iterations = k + 1;

    if (residual < config.tol && dw < config.tol && de < config.tol) {
      result.converged = true;
      break;
    }
  }

  // E is reported as X - L so the pair reconstructs X by definition.
  result.l = x - state.e;
  result.e = x - result.l;
  result.w = state.w;
  return result;
}

}  // namespace bisparse
