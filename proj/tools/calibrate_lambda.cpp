// Sweeps lambda on generated union-of-subspaces instances and reports the
// mean recovery error per value. kDefaultLambda was picked as the center (in
// log scale) of the range that recovers every instance below 1e-3.
//
//   calibrate_lambda [trials] [dim,dim,...] [sparsity,sparsity,...]

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bisparse/commands.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/synth.hpp"

using namespace bisparse;

int main(int argc, char** argv) {
  const int trials = argc > 1 ? std::stoi(argv[1]) : 2;
  const std::vector<std::size_t> dims = argc > 2 ? parse_size_list(argv[2]) : std::vector<std::size_t>{5, 10};
  const std::vector<double> sparsities =
      argc > 3 ? parse_double_list(argv[3]) : std::vector<double>{0.05, 0.10};

  std::vector<double> lambdas;
  for (int e = -8; e <= 6; ++e) lambdas.push_back(std::pow(10.0, e / 4.0));

  std::printf("%10s %12s %12s\n", "lambda", "mean_err", "max_err");
  for (double lambda : lambdas) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    double sum = 0.0;
    double worst = 0.0;
    int runs = 0;
    for (std::size_t d : dims) {
      for (double s : sparsities) {
        for (int t = 0; t < trials; ++t) {
          UoSSpec spec;
          std::fill(spec.subspace_dims.begin(), spec.subspace_dims.end(), d);
          spec.error_sparsity = s;
          spec.seed = derive_seed(1234, static_cast<std::uint64_t>(t));
          const Instance inst = make_instance(spec);
          const double err = recovery_error(inst.l0, solve(inst.x, cfg).l);
          sum += err;
          worst = std::max(worst, err);
          ++runs;
        }
      }
    }
    std::printf("%10.4g %12.3e %12.3e\n", lambda, sum / runs, worst);
    std::fflush(stdout);
  }
  return 0;
}
