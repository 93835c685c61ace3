#pragma once

// Implementations behind the command-line subcommands. Each returns the
// process exit code: 0 success, 1 usage/parse error, 2 unconverged,
// 3 I/O error (see run_guarded).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bisparse/io.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/rpca.hpp"
#include "bisparse/synth.hpp"

namespace bisparse {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitUnconverged = 2, kExitIo = 3 };

/// Settings readable from a key=value file. Unknown keys are rejected.
struct RunConfig {
  SolverConfig solver;
  RpcaConfig rpca;
  UoSSpec uos;

  void apply(const KeyValues& kv);
  KeyValues to_key_values() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

/// Runs `body`, mapping exceptions to exit codes and printing them to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

struct SynthOptions {
  std::filesystem::path out_dir;
  UoSSpec spec;
  MatrixFormat format = MatrixFormat::raw;
};

/// Writes L0, E0, X = L0 + E0, labels.csv and meta.txt into out_dir.
int cmd_synth(const SynthOptions& opts, std::ostream& log);

struct SolveOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  Method method = Method::rosure;
  RunConfig config;
  std::optional<std::filesystem::path> truth;  // L0, for an error report
  MatrixFormat format = MatrixFormat::raw;
};

/// Writes L, E (rosure) or S (rpca), W (rosure only), history.csv, meta.txt.
int cmd_solve(const SolveOptions& opts, std::ostream& log);

struct BenchOptions {
  GridAxes axes{{1, 5, 10, 15}, {0.005, 0.05, 0.10, 0.15}};
  int trials = 3;
  Method method = Method::rosure;
  RunConfig config;
  std::filesystem::path out_csv;
  std::optional<std::filesystem::path> out_pgm;  // default: out_csv with .pgm
  std::size_t cell_pixels = 16;
};

/// Phase grid CSV plus a heatmap PGM. Per-cell failures are logged, and the
/// grid is written regardless.
int cmd_bench(const BenchOptions& opts, std::ostream& log);

/// One block of cell_pixels x cell_pixels per grid cell, dims down the rows.
GrayImage phase_grid_heatmap(const PhaseGrid& grid, std::size_t cell_pixels);

struct ClusterOptions {
  std::filesystem::path w_file;
  std::size_t clusters = 2;
  double threshold = 1e-4;
  std::vector<double> threshold_sweep;  // extra thresholds scored against truth
  std::filesystem::path out;
  std::optional<std::filesystem::path> truth;
  std::uint64_t seed = 0;
};

int cmd_cluster(const ClusterOptions& opts, std::ostream& log);

struct BgsubOptions {
  std::filesystem::path frames_dir;
  std::filesystem::path out_dir;
  RunConfig config;
};

/// Frames (*.pgm, name order) become columns of X scaled to [0, 1]. Writes
/// bg_<name>.pgm and fg_<name>.pgm per frame, W.raw and meta.txt.
int cmd_bgsub(const BgsubOptions& opts, std::ostream& log);

}  // namespace bisparse
