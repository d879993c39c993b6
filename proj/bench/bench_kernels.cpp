// Serial reference loops vs OpenMP kernels. Prints wall time per kernel and
// checks that both paths return bit-identical results.

#include "lfnode/config.hpp"
#include "lfnode/continuum_adjoint.hpp"
#include "lfnode/discrete_adjoint.hpp"
#include "lfnode/experiments.hpp"
#include "lfnode/postprocess.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

using namespace lfnode;

namespace {

template <class Result>
void compare(const char* name, int reps, const std::function<Result(Execution)>& kernel,
             const std::function<bool(const Result&, const Result&)>& same) {
  auto time = [&](Execution exec, Result& out) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) out = kernel(exec);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
  };
  Result serial, parallel;
  const double ts = time(Execution::serial, serial);
  const double tp = time(Execution::parallel, parallel);
  std::printf("%-28s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name, ts, tp, ts / tp,
              same(serial, parallel) ? "identical" : "MISMATCH");
}

bool same_grid(const GradientGrid& a, const GradientGrid& b) { return a.rows() == b.rows(); }

}  // namespace

int main() {
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());

  ExperimentConfig cfg;
  cfg.d = 4;
  cfg.readout_c = {1.0, 0.5, -0.25, 0.75};
  cfg.data_x.clear();
  cfg.n_pairs = 64;
  cfg.y_rule = YRule::constant;
  cfg.y_value = 0.3;
  const Instance inst = build_instance(cfg);
  const std::size_t layers = 256;
  const WeightGrid weights = WeightGrid::sample(inst.path, layers);

  compare<GradientGrid>(
      "network_gradient (64 pairs)", 5,
      [&](Execution e) { return network_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog, e); },
      same_grid);

  LossSpec small{inst.loss.readout, {inst.loss.pairs.front()}};
  compare<GradientGrid>(
      "fd_gradient (L=64, n=24)", 1,
      [&](Execution e) {
        return fd_gradient(inst.field, WeightGrid::sample(inst.path, 64), small, 64, Scheme::leapfrog, 1e-5, e);
      },
      same_grid);

  LossSpec few{inst.loss.readout, {inst.loss.pairs.begin(), inst.loss.pairs.begin() + 8}};
  compare<FunctionalDerivative>(
      "ground_truth (8 pairs)", 1,
      [&](Execution e) { return ground_truth(inst.field, inst.path, few, 128, 16, e); },
      [](const FunctionalDerivative& a, const FunctionalDerivative& b) { return a.rows == b.rows; });

  const BandedBlockMatrix t = build_T(1 << 14, 24);
  const GradientGrid big(RowGrid::Random(1 << 14, 24), GradientScaling::raw);
  compare<GradientGrid>(
      "apply_modification (L=16384)", 20, [&](Execution e) { return apply_modification(t, big, e); }, same_grid);

  ExperimentConfig conv;
  conv.levels = {16, 32, 64, 128, 256};
  conv.refine = 16;
  compare<ConvergenceRecord>(
      "run_convergence (5 levels)", 1, [&](Execution e) { return run_convergence(conv, e); },
      [](const ConvergenceRecord& a, const ConvergenceRecord& b) { return a.table().render() == b.table().render(); });
  return 0;
}
