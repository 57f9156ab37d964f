// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "magpoly/artifact.hpp"
#include "magpoly/models.hpp"
#include "magpoly/opt_control.hpp"
#include "magpoly/verify.hpp"

using namespace magpoly;

namespace {

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

const Model& rydberg3() {
  static const Model m = build_model({ModelKind::rydberg, 3});
  return m;
}

std::shared_ptr<const Artifact> rydberg3_artifact() {
  static const auto art =
      std::make_shared<const Artifact>(build_artifact(rydberg3().a, rydberg3().b, {8, 12, 3}));
  return art;
}

void BM_StructureConstants(benchmark::State& st) {
  const Model m = build_model({ModelKind::rydberg, 5});
  const LieBasis basis = generate_lie_algebra(m.a, m.b, 12);
  for (auto _ : st) benchmark::DoNotOptimize(compute_structure_constants(basis, mode(st)));
}

void BM_ComputeS(benchmark::State& st) {
  const LieBasis basis = generate_lie_algebra(rydberg3().a, rydberg3().b, 12);
  const StructureConstants sc = compute_structure_constants(basis);
  for (auto _ : st) benchmark::DoNotOptimize(compute_S(basis, sc, {7, 10, 3}, mode(st)));
}

void BM_CostGradient(benchmark::State& st) {
  ProblemSettings ps;
  ps.exec = mode(st);
  const ControlProblem p = make_ckp_problem(rydberg3_artifact(), 3, std::numbers::pi, ps);
  const HermiteSpline h = sample_spline(
      [](double t, int l) { return l == 0 ? 0.3 * std::cos(2.1 * t) : -0.63 * std::sin(2.1 * t); }, 1, 48, 12.0);
  for (auto _ : st) benchmark::DoNotOptimize(gradient(p, h, 0.3));
}

void BM_ErrorScan(benchmark::State& st) {
  const Model m = build_model({ModelKind::sparse, 3});
  const Artifact art = build_artifact(m.a, m.b, {6, 14, 3});
  ScanOptions opts;
  opts.t_grid = log_grid(3e-2, 1.0, 8);
  opts.samples = 8;
  opts.exec = mode(st);
  for (auto _ : st) benchmark::DoNotOptimize(error_scan(art, 6, opts));
}

}  // namespace

BENCHMARK(BM_StructureConstants)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ComputeS)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
