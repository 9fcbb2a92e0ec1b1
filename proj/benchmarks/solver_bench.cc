#include <cmath>

#include <benchmark/benchmark.h>

#include "rpca/data.h"
#include "rpca/init.h"
#include "rpca/model.h"
#include "rpca/solver.h"

namespace {

struct Setup {
  rpca::SyntheticInstance data;
  rpca::DerivedParams params;
  rpca::ProblemSpec problem;
  rpca::FactorState init;
};

// The Table-1 style instance: rank 5, 10% corruption, nf 0.05, sr 0.9, d 10.
Setup make_setup(int n) {
  rpca::SyntheticSpec spec;
  spec.n = n;
  spec.true_rank = 5;
  spec.noise_factor = 0.05;
  spec.sampling_ratio = 0.9;
  spec.seed = 3;
  auto data = rpca::generate_synthetic(spec);
  const rpca::ProblemDims dims{n, n, 10};
  const double a = data.observed.max_abs_value();
  auto params = rpca::derive_params(dims, 1.0, a, a);
  rpca::ProblemSpec problem{params.penalties, {params.tau, -a, a}, rpca::LossKind::squared()};
  auto init = rpca::default_init(data.observed, dims, problem.constraints, 4);
  return {std::move(data), params, problem, std::move(init)};
}

void BM_AjapgIterations(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)));
  rpca::SolverConfig cfg;
  cfg.max_iters = 20;
  cfg.rel_tol = 0.0;
  cfg.check_invariants = false;
  for (auto _ : state) {
    auto result = rpca::solve_ajapg(s.data.observed, s.problem, s.params.relaxation, cfg, s.init);
    benchmark::DoNotOptimize(result.state.x.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_AjapgIterations)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_JapgIterations(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)));
  rpca::SolverConfig cfg;
  cfg.max_iters = 20;
  cfg.rel_tol = 0.0;
  cfg.check_invariants = false;
  for (auto _ : state) {
    auto result = rpca::solve_japg(s.data.observed, s.problem, rpca::ExactL0{}, cfg, s.init);
    benchmark::DoNotOptimize(result.state.x.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_JapgIterations)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
