// Command-line front end: synth | solve | bench | cluster | bgsub.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bisparse/commands.hpp"
#include "bisparse/kernels.hpp"

namespace fs = std::filesystem;
using namespace bisparse;

namespace {

struct CommonConfig {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value

  RunConfig load() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg = load_run_config(config_file);
    KeyValues kv;
    for (const auto& o : overrides) {
      const KeyValues one = parse_key_values(o);
      kv.insert(one.begin(), one.end());
    }
    cfg.apply(kv);
    return cfg;
  }
};

void add_config_flags(CLI::App* cmd, CommonConfig& common) {
  cmd->add_option("--config", common.config_file, "key=value run configuration file");
  cmd->add_option("--set", common.overrides, "Override a config key (key=value), repeatable");
}

MatrixFormat parse_format(const std::string& s) {
  if (s == "raw") return MatrixFormat::raw;
  if (s == "csv") return MatrixFormat::csv;
  throw ParseError("unknown format '" + s + "' (raw|csv)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust subspace recovery by bi-sparsity pursuit"};
  app.require_subcommand(1);

  // synth
  CommonConfig synth_cfg;
  std::string synth_out, synth_format = "raw";
  std::optional<std::size_t> synth_m;
  std::optional<std::string> synth_n, synth_dims;
  std::optional<double> synth_sparsity, synth_magnitude;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a corrupted union-of-subspaces dataset");
  add_config_flags(synth, synth_cfg);
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--ambient-dim", synth_m, "Rows m");
  synth->add_option("--n-per-subspace", synth_n, "Columns per subspace, comma list");
  synth->add_option("--dims", synth_dims, "Subspace dimensions, comma list");
  synth->add_option("--sparsity", synth_sparsity, "Fraction of corrupted entries");
  synth->add_option("--magnitude", synth_magnitude, "Corruption magnitude bound");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--format", synth_format, "raw|csv");

  // solve
  CommonConfig solve_cfg;
  std::string solve_in, solve_out, solve_method = "rosure", solve_format = "raw", solve_truth;
  std::optional<double> solve_lambda;
  std::optional<int> solve_max_iter;
  auto* solve_cmd = app.add_subcommand("solve", "Decompose a data matrix");
  add_config_flags(solve_cmd, solve_cfg);
  solve_cmd->add_option("--input", solve_in, "Data matrix X (csv or raw)")->required();
  solve_cmd->add_option("--out-dir", solve_out, "Output directory")->required();
  solve_cmd->add_option("--method", solve_method, "rosure|rpca");
  solve_cmd->add_option("--lambda", solve_lambda, "Sparsity trade-off (rosure)");
  solve_cmd->add_option("--max-iter", solve_max_iter, "Iteration cap");
  solve_cmd->add_option("--truth", solve_truth, "Ground-truth L0 for an error report");
  solve_cmd->add_option("--format", solve_format, "raw|csv");

  // bench
  CommonConfig bench_cfg;
  std::string bench_out, bench_pgm, bench_method = "rosure", bench_dims = "1,5,10,15",
                                    bench_sparsities = "0.005,0.05,0.10,0.15";
  int bench_trials = 3;
  std::size_t bench_cell = 16;
  std::optional<int> bench_threads;
  auto* bench = app.add_subcommand("bench", "Phase-transition grid over dimension x sparsity");
  add_config_flags(bench, bench_cfg);
  bench->add_option("--out", bench_out, "Grid CSV path")->required();
  bench->add_option("--pgm", bench_pgm, "Heatmap path (default: <out>.pgm)");
  bench->add_option("--method", bench_method, "rosure|rpca");
  bench->add_option("--dims", bench_dims, "Subspace dimensions, comma list");
  bench->add_option("--sparsities", bench_sparsities, "Error sparsities, comma list");
  bench->add_option("--trials", bench_trials, "Trials per cell");
  bench->add_option("--cell-pixels", bench_cell, "Heatmap pixels per cell");
  bench->add_option("--threads", bench_threads, "Worker threads");

  // cluster
  std::string cl_w, cl_out, cl_truth, cl_sweep;
  std::size_t cl_j = 2;
  double cl_threshold = 1e-4;
  std::uint64_t cl_seed = 0;
  auto* cluster = app.add_subcommand("cluster", "Spectral clustering of a coefficient matrix");
  cluster->add_option("--w", cl_w, "Coefficient matrix W")->required();
  cluster->add_option("--clusters,-J", cl_j, "Number of clusters")->required();
  cluster->add_option("--threshold", cl_threshold, "Relative affinity threshold");
  cluster->add_option("--threshold-sweep", cl_sweep, "Extra thresholds to score, comma list");
  cluster->add_option("--out", cl_out, "Labels CSV")->required();
  cluster->add_option("--truth", cl_truth, "Ground-truth labels CSV");
  cluster->add_option("--seed", cl_seed, "k-means seed");

  // bgsub
  CommonConfig bg_cfg;
  std::string bg_frames, bg_out;
  std::optional<double> bg_lambda;
  auto* bgsub = app.add_subcommand("bgsub", "Background/foreground separation of PGM frames");
  add_config_flags(bgsub, bg_cfg);
  bgsub->add_option("--frames", bg_frames, "Directory of equally sized PGM frames")->required();
  bgsub->add_option("--out-dir", bg_out, "Output directory")->required();
  bgsub->add_option("--lambda", bg_lambda, "Sparsity trade-off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded(
      [&]() -> int {
        if (*synth) {
          SynthOptions o;
          o.out_dir = synth_out;
          o.spec = synth_cfg.load().uos;
          if (synth_m) o.spec.ambient_dim = *synth_m;
          if (synth_n) o.spec.n_per_subspace = parse_size_list(*synth_n);
          if (synth_dims) o.spec.subspace_dims = parse_size_list(*synth_dims);
          if (synth_sparsity) o.spec.error_sparsity = *synth_sparsity;
          if (synth_magnitude) o.spec.error_magnitude = *synth_magnitude;
          if (synth_seed) o.spec.seed = *synth_seed;
          o.format = parse_format(synth_format);
          return cmd_synth(o, std::cout);
        }
        if (*solve_cmd) {
          SolveOptions o;
          o.input = solve_in;
          o.out_dir = solve_out;
          o.method = parse_method(solve_method);
          o.config = solve_cfg.load();
          if (solve_lambda) o.config.solver.lambda = *solve_lambda;
          if (solve_max_iter) o.config.solver.max_iter = o.config.rpca.max_iter = *solve_max_iter;
          if (!solve_truth.empty()) o.truth = fs::path(solve_truth);
          o.format = parse_format(solve_format);
          return cmd_solve(o, std::cout);
        }
        if (*bench) {
          BenchOptions o;
          o.axes = GridAxes{parse_size_list(bench_dims), parse_double_list(bench_sparsities)};
          o.trials = bench_trials;
          o.method = parse_method(bench_method);
          o.config = bench_cfg.load();
          o.out_csv = bench_out;
          if (!bench_pgm.empty()) o.out_pgm = fs::path(bench_pgm);
          o.cell_pixels = bench_cell;
          if (bench_threads) set_kernel_threads(*bench_threads);
          return cmd_bench(o, std::cout);
        }
        if (*cluster) {
          ClusterOptions o;
          o.w_file = cl_w;
          o.clusters = cl_j;
          o.threshold = cl_threshold;
          if (!cl_sweep.empty()) o.threshold_sweep = parse_double_list(cl_sweep);
          o.out = cl_out;
          if (!cl_truth.empty()) o.truth = fs::path(cl_truth);
          o.seed = cl_seed;
          return cmd_cluster(o, std::cout);
        }
        BgsubOptions o;
        o.frames_dir = bg_frames;
        o.out_dir = bg_out;
        o.config = bg_cfg.load();
        if (bg_lambda) o.config.solver.lambda = *bg_lambda;
        return cmd_bgsub(o, std::cout);
      },
      std::cerr);
}
