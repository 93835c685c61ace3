#pragma once

// Union-of-subspaces test data, sparse corruptions, recovery metrics and the
// (subspace dimension x corruption sparsity) phase-transition grid.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bisparse/matrix.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/rpca.hpp"

namespace bisparse {

struct UoSSpec {
  std::size_t ambient_dim = 200;
  std::vector<std::size_t> n_per_subspace{40, 40, 40, 40, 40};
  std::vector<std::size_t> subspace_dims{5, 5, 5, 5, 5};
  double error_sparsity = 0.05;
  double error_magnitude = 1.0;
  std::uint64_t seed = 1;

  std::size_t total_columns() const;
  void validate() const;
};

struct UoSData {
  DenseMatrix l0;
  std::vector<std::size_t> labels;  // subspace index per column
  bool degenerate = false;          // some d_I > min(m, n_I)
};

/// Per subspace I: L_I = A_I B_I^T with A_I (m x d_I) and B_I (n_I x d_I)
/// standard normal; blocks concatenated column-wise.
UoSData gen_uos(const UoSSpec& spec);

/// Exactly round(sparsity * m * n) nonzeros at uniformly chosen positions,
/// values uniform on [-magnitude, magnitude].
DenseMatrix gen_sparse_errors(std::size_t m, std::size_t n, double sparsity, double magnitude,
                              std::uint64_t seed);

struct Instance {
  DenseMatrix l0;
  DenseMatrix e0;
  DenseMatrix x;  // l0 + e0
  std::vector<std::size_t> labels;
  bool degenerate = false;
};

/// gen_uos plus gen_sparse_errors with a seed derived from spec.seed.
Instance make_instance(const UoSSpec& spec);

/// ||L0 - Lhat||_F / ||L0||_F. Throws on zero L0 or shape mismatch.
double recovery_error(const DenseMatrix& l0, const DenseMatrix& lhat);

/// SplitMix64 mixing of a base seed with a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

enum class Method { rosure, rpca };

const char* method_name(Method m);
Method parse_method(std::string_view name);

struct GridAxes {
  std::vector<std::size_t> dims;
  std::vector<double> sparsities;
};

struct PhaseGrid {
  std::vector<std::size_t> dim_axis;
  std::vector<double> sparsity_axis;
  std::vector<double> errors;  // row-major |dim_axis| x |sparsity_axis|; NaN = failed cell
  int trials_per_cell = 0;
  std::vector<std::string> log;

  double at(std::size_t dim_index, std::size_t sparsity_index) const {
    return errors[dim_index * sparsity_axis.size() + sparsity_index];
  }
  /// Cells whose mean error is below threshold (NaN never counts).
  std::size_t count_below(double threshold) const;
};

/// Runs `trials` independent generate-and-solve rounds per cell and records
/// the mean recovery error. Cells run in parallel; results do not depend on
/// the thread count or the execution order.
PhaseGrid phase_grid(const GridAxes& axes, const UoSSpec& base, const SolverConfig& solver,
                     const RpcaConfig& rpca, Method method, int trials);

/// Header row: "dim", then the sparsity axis. One row per dimension.
std::string phase_grid_to_csv(const PhaseGrid& grid);
PhaseGrid phase_grid_from_csv(std::string_view text);

/// Gray level for an error: [0, 0.2] maps linearly onto [255, 0].
unsigned char error_gray_level(double err);

}  // namespace bisparse
