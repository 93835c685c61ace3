#include "bisparse/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "bisparse/cluster.hpp"
#include "bisparse/kernels.hpp"
#include "bisparse/model.hpp"

namespace fs = std::filesystem;

namespace bisparse {

namespace {

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (value.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ParseError("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const std::uint64_t v = to_u64(key, value);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw ParseError("config key '" + key + "': value out of range");
  return static_cast<int>(v);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string matrix_name(const std::string& stem, MatrixFormat format) {
  return stem + (format == MatrixFormat::csv ? ".csv" : ".raw");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

// Appends one CSV line per iteration to "<path>.partial" and renames it into
// place on commit, so an interrupted run leaves its diagnostics behind.
class HistoryWriter {
 public:
  explicit HistoryWriter(fs::path path) : path_(std::move(path)), partial_(path_) {
    partial_ += ".partial";
    out_.open(partial_, std::ios::trunc);
    if (!out_) throw IoError("cannot open '" + partial_.string() + "' for writing");
    out_ << "iter,residual,objective,mu\n" << std::setprecision(17);
    out_.flush();
  }

  void append(int iter, double residual, double objective, double mu) {
    out_ << iter << ',' << residual << ',' << objective << ',' << mu << '\n';
    out_.flush();
  }

  void commit() {
    out_.close();
    if (!out_) throw IoError("error writing '" + partial_.string() + "'");
    std::error_code ec;
    fs::rename(partial_, path_, ec);
    if (ec) throw IoError("cannot rename into '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  fs::path partial_;
  std::ofstream out_;
};

std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double("list", item));
  if (out.empty()) throw ParseError("expected a comma-separated list of numbers");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(to_u64("list", item)));
  if (out.empty()) throw ParseError("expected a comma-separated list of integers");
  return out;
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "lambda") solver.lambda = to_double(key, value);
    else if (key == "rho") solver.rho = to_double(key, value);
    else if (key == "mu0") solver.mu0 = to_double(key, value);
    else if (key == "mu_max") solver.mu_max = to_double(key, value);
    else if (key == "eta_margin") solver.eta_margin = to_double(key, value);
    else if (key == "tol") solver.tol = to_double(key, value);
    else if (key == "max_iter") solver.max_iter = to_int(key, value);
    else if (key == "seed") solver.seed = uos.seed = to_u64(key, value);
    else if (key == "rpca_lambda") rpca.lambda = to_double(key, value);
    else if (key == "rpca_rho") rpca.rho = to_double(key, value);
    else if (key == "rpca_mu0") rpca.mu0 = to_double(key, value);
    else if (key == "rpca_mu_max") rpca.mu_max = to_double(key, value);
    else if (key == "rpca_tol") rpca.tol = to_double(key, value);
    else if (key == "rpca_max_iter") rpca.max_iter = to_int(key, value);
    else if (key == "ambient_dim") uos.ambient_dim = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "n_per_subspace") uos.n_per_subspace = parse_size_list(value);
    else if (key == "subspace_dims") uos.subspace_dims = parse_size_list(value);
    else if (key == "error_sparsity") uos.error_sparsity = to_double(key, value);
    else if (key == "error_magnitude") uos.error_magnitude = to_double(key, value);
    else throw ParseError("config: unknown key '" + key + "'");
  }
}

KeyValues RunConfig::to_key_values() const {
  KeyValues kv;
  kv["lambda"] = fmt(solver.lambda);
  kv["rho"] = fmt(solver.rho);
  if (solver.mu0) kv["mu0"] = fmt(*solver.mu0);
  if (solver.mu_max) kv["mu_max"] = fmt(*solver.mu_max);
  kv["eta_margin"] = fmt(solver.eta_margin);
  kv["tol"] = fmt(solver.tol);
  kv["max_iter"] = std::to_string(solver.max_iter);
  kv["seed"] = std::to_string(solver.seed);
  if (rpca.lambda) kv["rpca_lambda"] = fmt(*rpca.lambda);
  kv["rpca_rho"] = fmt(rpca.rho);
  if (rpca.mu0) kv["rpca_mu0"] = fmt(*rpca.mu0);
  if (rpca.mu_max) kv["rpca_mu_max"] = fmt(*rpca.mu_max);
  kv["rpca_tol"] = fmt(rpca.tol);
  kv["rpca_max_iter"] = std::to_string(rpca.max_iter);
  kv["ambient_dim"] = std::to_string(uos.ambient_dim);
  kv["n_per_subspace"] = join(uos.n_per_subspace);
  kv["subspace_dims"] = join(uos.subspace_dims);
  kv["error_sparsity"] = fmt(uos.error_sparsity);
  kv["error_magnitude"] = fmt(uos.error_magnitude);
  return kv;
}

RunConfig load_run_config(const fs::path& path) {
  RunConfig cfg;
  try {
    cfg.apply(parse_key_values(read_file(path)));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cfg;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_synth(const SynthOptions& opts, std::ostream& log) {
  ensure_dir(opts.out_dir);
  const Instance inst = make_instance(opts.spec);
  write_matrix(opts.out_dir / matrix_name("L0", opts.format), inst.l0, opts.format);
  write_matrix(opts.out_dir / matrix_name("E0", opts.format), inst.e0, opts.format);
  write_matrix(opts.out_dir / matrix_name("X", opts.format), inst.x, opts.format);
  write_file_atomic(opts.out_dir / "labels.csv", encode_labels(inst.labels));

  RunConfig rc;
  rc.uos = opts.spec;
  KeyValues meta;
  for (const auto& key : {"ambient_dim", "n_per_subspace", "subspace_dims", "error_sparsity",
                          "error_magnitude"})
    meta[key] = rc.to_key_values().at(key);
  meta["seed"] = std::to_string(opts.spec.seed);
  meta["error_nonzeros"] = std::to_string(l0_count(inst.e0, 0.0));
  meta["degenerate"] = inst.degenerate ? "true" : "false";
  write_file_atomic(opts.out_dir / "meta.txt", encode_key_values(meta));

  log << "wrote " << inst.x.rows() << "x" << inst.x.cols() << " instance ("
      << meta["error_nonzeros"] << " corrupted entries) to " << opts.out_dir.string() << '\n';
  if (inst.degenerate) log << "warning: some subspace dimension exceeds min(m, n_I)\n";
  return kExitOk;
}

int cmd_solve(const SolveOptions& opts, std::ostream& log) {
  const DenseMatrix x = read_matrix(opts.input);
  std::optional<DenseMatrix> truth;
  if (opts.truth) truth = read_matrix(*opts.truth);
  ensure_dir(opts.out_dir);

  HistoryWriter history(opts.out_dir / "history.csv");
  KeyValues meta;
  meta["method"] = method_name(opts.method);
  meta["input"] = opts.input.string();
  bool converged = false;
  DenseMatrix l = x;

  if (opts.method == Method::rosure) {
    const SolverResult res = solve(x, opts.config.solver, [&](const IterationRecord& r) {
      history.append(r.iter, r.residual, r.objective, r.mu);
    });
    history.commit();
    write_matrix(opts.out_dir / matrix_name("L", opts.format), res.l, opts.format);
    write_matrix(opts.out_dir / matrix_name("E", opts.format), res.e, opts.format);
    write_matrix(opts.out_dir / matrix_name("W", opts.format), res.w, opts.format);
    converged = res.converged;
    l = res.l;
    meta["iterations"] = std::to_string(res.iterations);
    meta["final_residual"] = fmt(res.history.empty() ? 0.0 : res.history.back().residual);
    meta["lambda"] = fmt(opts.config.solver.lambda);
  } else {
    const RpcaResult res = rpca_ialm(x, opts.config.rpca, [&](const RpcaRecord& r) {
      history.append(r.iter, r.residual, r.objective, r.mu);
    });
    history.commit();
    write_matrix(opts.out_dir / matrix_name("L", opts.format), res.l, opts.format);
    write_matrix(opts.out_dir / matrix_name("S", opts.format), res.s, opts.format);
    converged = res.converged;
    l = res.l;
    meta["iterations"] = std::to_string(res.iterations);
    meta["final_residual"] = fmt(res.history.empty() ? 0.0 : res.history.back().residual);
  }
  meta["converged"] = converged ? "true" : "false";
  if (truth) {
    const double err = recovery_error(*truth, l);
    meta["recovery_error"] = fmt(err);
    log << "err(L) = " << fmt(err) << '\n';
  }
  write_file_atomic(opts.out_dir / "meta.txt", encode_key_values(meta));
  log << method_name(opts.method) << ": " << meta["iterations"] << " iterations, "
      << (converged ? "converged" : "NOT converged") << '\n';
  return converged ? kExitOk : kExitUnconverged;
}

GrayImage phase_grid_heatmap(const PhaseGrid& grid, std::size_t cell_pixels) {
  if (cell_pixels == 0) throw std::invalid_argument("heatmap: cell_pixels must be >= 1");
  GrayImage img;
  img.width = grid.sparsity_axis.size() * cell_pixels;
  img.height = grid.dim_axis.size() * cell_pixels;
  img.pixels.resize(img.width * img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      img.pixels[y * img.width + x] = error_gray_level(grid.at(y / cell_pixels, x / cell_pixels));
  return img;
}

int cmd_bench(const BenchOptions& opts, std::ostream& log) {
  const PhaseGrid grid = phase_grid(opts.axes, opts.config.uos, opts.config.solver,
                                    opts.config.rpca, opts.method, opts.trials);
  for (const auto& entry : grid.log) log << "cell failure: " << entry << '\n';
  write_file_atomic(opts.out_csv, phase_grid_to_csv(grid));
  fs::path pgm = opts.out_pgm.value_or(fs::path(opts.out_csv).replace_extension(".pgm"));
  write_pgm(pgm, phase_grid_heatmap(grid, opts.cell_pixels));
  log << method_name(opts.method) << ": " << grid.count_below(1e-2) << " of " << grid.errors.size()
      << " cells with mean err < 1e-2\n";
  return kExitOk;
}

int cmd_cluster(const ClusterOptions& opts, std::ostream& log) {
  const DenseMatrix w = read_matrix(opts.w_file);
  if (!w.is_square()) throw std::invalid_argument("cluster: W must be square");
  if (opts.clusters > w.rows())
    throw std::invalid_argument("cluster: J = " + std::to_string(opts.clusters) +
                                " exceeds the number of columns " + std::to_string(w.rows()));
  std::optional<std::vector<std::size_t>> truth;
  if (opts.truth) {
    truth = decode_labels(read_file(*opts.truth));
    if (truth->size() != w.rows())
      throw std::invalid_argument("cluster: truth file has " + std::to_string(truth->size()) +
                                  " labels for " + std::to_string(w.rows()) + " columns");
  }

  const ClusterResult res = spectral_cluster(affinity(w, opts.threshold), opts.clusters, opts.seed);
  write_file_atomic(opts.out, encode_labels(res.labels));
  if (res.isolated_vertices) log << "warning: affinity graph has isolated vertices\n";
  if (truth) log << "clustering_error = " << fmt(clustering_error(res.labels, *truth)) << '\n';

  for (double t : opts.threshold_sweep) {
    const ClusterResult sweep = spectral_cluster(affinity(w, t), opts.clusters, opts.seed);
    log << "threshold " << fmt(t);
    if (truth) log << " clustering_error = " << fmt(clustering_error(sweep.labels, *truth));
    log << '\n';
  }
  return kExitOk;
}

int cmd_bgsub(const BgsubOptions& opts, std::ostream& log) {
  if (!fs::is_directory(opts.frames_dir))
    throw IoError("frames directory '" + opts.frames_dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opts.frames_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw std::invalid_argument("bgsub: need at least 2 PGM frames");

  std::vector<GrayImage> frames;
  for (const auto& f : files) frames.push_back(read_pgm(f));
  std::string offenders;
  for (std::size_t k = 1; k < frames.size(); ++k)
    if (frames[k].width != frames[0].width || frames[k].height != frames[0].height)
      offenders += " " + files[k].filename().string() + " (" + std::to_string(frames[k].width) +
                   "x" + std::to_string(frames[k].height) + ")";
  if (!offenders.empty())
    throw std::invalid_argument("bgsub: frames differ from " + files[0].filename().string() + " (" +
                                std::to_string(frames[0].width) + "x" +
                                std::to_string(frames[0].height) + "):" + offenders);

  const std::size_t pixels = frames[0].pixels.size();
  DenseMatrix x(pixels, frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f)
    for (std::size_t p = 0; p < pixels; ++p) x(p, f) = frames[f].pixels[p] / 255.0;

  const SolverResult res = solve(x, opts.config.solver);
  ensure_dir(opts.out_dir);

  // Background: one linear map of L onto [0, 255] for the whole sequence.
  // Foreground: |E| scaled so the largest magnitude maps to 255; a numerically
  // zero E stays black.
  double lo = res.l(0, 0);
  double hi = lo;
  for (double v : res.l.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double bg_scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  const double e_max = max_abs(res.e);
  const double fg_scale = e_max > 1e-6 ? 255.0 / e_max : 0.0;

  for (std::size_t f = 0; f < frames.size(); ++f) {
    GrayImage bg{frames[0].width, frames[0].height, std::vector<std::uint8_t>(pixels)};
    GrayImage fg = bg;
    for (std::size_t p = 0; p < pixels; ++p) {
      bg.pixels[p] = to_pixel((res.l(p, f) - lo) * bg_scale);
      fg.pixels[p] = to_pixel(std::abs(res.e(p, f)) * fg_scale);
    }
    const std::string stem = files[f].stem().string();
    write_pgm(opts.out_dir / ("bg_" + stem + ".pgm"), bg);
    write_pgm(opts.out_dir / ("fg_" + stem + ".pgm"), fg);
  }
  write_matrix(opts.out_dir / "W.raw", res.w, MatrixFormat::raw);

  KeyValues meta;
  meta["frames"] = std::to_string(frames.size());
  meta["width"] = std::to_string(frames[0].width);
  meta["height"] = std::to_string(frames[0].height);
  meta["input_scale"] = fmt(1.0 / 255.0);
  meta["bg_offset"] = fmt(lo);
  meta["bg_scale"] = fmt(bg_scale);
  meta["fg_scale"] = fmt(fg_scale);
  meta["iterations"] = std::to_string(res.iterations);
  meta["converged"] = res.converged ? "true" : "false";
  write_file_atomic(opts.out_dir / "meta.txt", encode_key_values(meta));

  const BlockPartition blocks = support_blocks(res.w, relative_eps(res.w));
  log << "bgsub: " << frames.size() << " frames, " << res.iterations << " iterations, "
      << blocks.groups.size() << " frame group(s) in W\n";
  return res.converged ? kExitOk : kExitUnconverged;
}

}  // namespace bisparse
