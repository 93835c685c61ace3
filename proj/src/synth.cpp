#include "bisparse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bisparse/kernels.hpp"

namespace bisparse {

std::size_t UoSSpec::total_columns() const {
  return std::accumulate(n_per_subspace.begin(), n_per_subspace.end(), std::size_t{0});
}

void UoSSpec::validate() const {
  if (ambient_dim == 0) throw std::invalid_argument("UoSSpec: ambient_dim must be >= 1");
  if (n_per_subspace.empty()) throw std::invalid_argument("UoSSpec: no subspaces");
  if (n_per_subspace.size() != subspace_dims.size())
    throw std::invalid_argument("UoSSpec: n_per_subspace and subspace_dims lengths differ");
  for (std::size_t i = 0; i < subspace_dims.size(); ++i) {
    if (n_per_subspace[i] == 0) throw std::invalid_argument("UoSSpec: empty subspace");
    if (subspace_dims[i] == 0) throw std::invalid_argument("UoSSpec: subspace dim must be >= 1");
    if (subspace_dims[i] > ambient_dim)
      throw std::invalid_argument("UoSSpec: subspace dim exceeds ambient_dim");
  }
  if (!(error_sparsity >= 0.0 && error_sparsity <= 1.0))
    throw std::invalid_argument("UoSSpec: error_sparsity must be in [0, 1]");
  if (!(error_magnitude > 0.0) || !std::isfinite(error_magnitude))
    throw std::invalid_argument("UoSSpec: error_magnitude must be positive");
}

UoSData gen_uos(const UoSSpec& spec) {
  spec.validate();
  const std::size_t m = spec.ambient_dim;
  UoSData out{DenseMatrix(m, spec.total_columns()), {}, false};
  out.labels.reserve(spec.total_columns());

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::size_t col = 0;
  for (std::size_t s = 0; s < spec.subspace_dims.size(); ++s) {
    const std::size_t d = spec.subspace_dims[s];
    const std::size_t ni = spec.n_per_subspace[s];
    if (d > std::min(m, ni)) out.degenerate = true;
    DenseMatrix basis(m, d);
    for (double& v : basis.data()) v = normal(rng);
    DenseMatrix coeff(ni, d);
    for (double& v : coeff.data()) v = normal(rng);
    const DenseMatrix block = matmul_nt(basis, coeff);
    for (std::size_t j = 0; j < ni; ++j, ++col) {
      for (std::size_t i = 0; i < m; ++i) out.l0(i, col) = block(i, j);
      out.labels.push_back(s);
    }
  }
  return out;
}

DenseMatrix gen_sparse_errors(std::size_t m, std::size_t n, double sparsity, double magnitude,
                              std::uint64_t seed) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0))
    throw std::invalid_argument("gen_sparse_errors: sparsity must be in [0, 1]");
  if (!(magnitude > 0.0)) throw std::invalid_argument("gen_sparse_errors: magnitude must be > 0");
  DenseMatrix e(m, n);
  const std::size_t total = m * n;
  const auto count = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(total)));

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> slots(total);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots become the support.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(slots[i], slots[pick(rng)]);
  }
  std::uniform_real_distribution<double> value(-magnitude, magnitude);
  for (std::size_t i = 0; i < count; ++i) {
    double v = 0.0;
    while (v == 0.0) v = value(rng);
    e.data()[slots[i]] = v;
  }
  return e;
}

Instance make_instance(const UoSSpec& spec) {
  UoSData uos = gen_uos(spec);
  DenseMatrix e0 = gen_sparse_errors(uos.l0.rows(), uos.l0.cols(), spec.error_sparsity,
                                     spec.error_magnitude, derive_seed(spec.seed, 1));
  DenseMatrix x = uos.l0 + e0;
  return Instance{std::move(uos.l0), std::move(e0), std::move(x), std::move(uos.labels),
                  uos.degenerate};
}

double recovery_error(const DenseMatrix& l0, const DenseMatrix& lhat) {
  require_same_shape(l0, lhat, "recovery_error");
  const double n0 = frobenius_norm(l0);
  if (n0 == 0.0) throw std::invalid_argument("recovery_error: L0 is zero");
  return frobenius_norm(l0 - lhat) / n0;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const char* method_name(Method m) { return m == Method::rosure ? "rosure" : "rpca"; }

Method parse_method(std::string_view name) {
  if (name == "rosure") return Method::rosure;
  if (name == "rpca") return Method::rpca;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (rosure|rpca)");
}

std::size_t PhaseGrid::count_below(double threshold) const {
  return static_cast<std::size_t>(std::count_if(
      errors.begin(), errors.end(), [threshold](double e) { return e < threshold; }));
}

PhaseGrid phase_grid(const GridAxes& axes, const UoSSpec& base, const SolverConfig& solver,
                     const RpcaConfig& rpca, Method method, int trials) {
  if (axes.dims.empty() || axes.sparsities.empty())
    throw std::invalid_argument("phase_grid: axes must be non-empty");
  if (trials < 1) throw std::invalid_argument("phase_grid: trials must be >= 1");

  const std::size_t nd = axes.dims.size();
  const std::size_t ns = axes.sparsities.size();
  const std::size_t jobs = nd * ns * static_cast<std::size_t>(trials);
  std::vector<double> trial_err(jobs, 0.0);
  std::vector<std::string> trial_log(jobs);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(jobs); ++job) {
    const auto j = static_cast<std::size_t>(job);
    const std::size_t cell = j / static_cast<std::size_t>(trials);
    const std::size_t trial = j % static_cast<std::size_t>(trials);
    const std::size_t di = cell / ns;
    const std::size_t si = cell % ns;
    UoSSpec spec = base;
    std::fill(spec.subspace_dims.begin(), spec.subspace_dims.end(), axes.dims[di]);
    spec.error_sparsity = axes.sparsities[si];
    spec.seed = derive_seed(base.seed, trial);
    try {
      const Instance inst = make_instance(spec);
      double err = 0.0;
      if (method == Method::rosure) {
        err = recovery_error(inst.l0, solve(inst.x, solver).l);
      } else {
        err = recovery_error(inst.l0, rpca_ialm(inst.x, rpca).l);
      }
      trial_err[j] = err;
    } catch (const std::exception& ex) {
      trial_err[j] = std::numeric_limits<double>::quiet_NaN();
      std::ostringstream msg;
      msg << "cell dim=" << axes.dims[di] << " sparsity=" << axes.sparsities[si]
          << " trial=" << trial << ": " << ex.what();
      trial_log[j] = msg.str();
    }
  }

  PhaseGrid grid;
  grid.dim_axis = axes.dims;
  grid.sparsity_axis = axes.sparsities;
  grid.trials_per_cell = trials;
  grid.errors.assign(nd * ns, 0.0);
  for (std::size_t cell = 0; cell < nd * ns; ++cell) {
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) sum += trial_err[cell * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)];
    grid.errors[cell] = sum / trials;
  }
  for (auto& entry : trial_log)
    if (!entry.empty()) grid.log.push_back(std::move(entry));
  return grid;
}

std::string phase_grid_to_csv(const PhaseGrid& grid) {
  std::ostringstream out;
  out.precision(17);
  out << "dim";
  for (double s : grid.sparsity_axis) out << ',' << s;
  out << '\n';
  for (std::size_t d = 0; d < grid.dim_axis.size(); ++d) {
    out << grid.dim_axis[d];
    for (std::size_t s = 0; s < grid.sparsity_axis.size(); ++s) {
      const double e = grid.at(d, s);
      out << ',';
      if (std::isnan(e)) {
        out << "nan";
      } else {
        out << e;
      }
    }
    out << '\n';
  }
  return out.str();
}

PhaseGrid phase_grid_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  PhaseGrid grid;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("phase grid CSV: bad number '" + s + "'");
    return v;
  };
  if (!std::getline(in, line)) throw std::invalid_argument("phase grid CSV: empty input");
  auto header = split(line);
  if (header.size() < 2 || header[0] != "dim")
    throw std::invalid_argument("phase grid CSV: header must start with 'dim'");
  for (std::size_t i = 1; i < header.size(); ++i) grid.sparsity_axis.push_back(number(header[i]));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("phase grid CSV: row length differs from header");
    grid.dim_axis.push_back(static_cast<std::size_t>(std::stoull(cells[0])));
    for (std::size_t i = 1; i < cells.size(); ++i) grid.errors.push_back(number(cells[i]));
  }
  return grid;
}

unsigned char error_gray_level(double err) {
  if (std::isnan(err)) return 0;
  const double t = std::clamp(err / 0.2, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
}

}  // namespace bisparse
