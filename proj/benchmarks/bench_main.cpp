#include <benchmark/benchmark.h>

#include "dilute/disorder.hpp"
#include "dilute/floquet.hpp"
#include "dilute/green.hpp"
#include "dilute/inertia.hpp"
#include "dilute/scales.hpp"
#include "dilute/spectra.hpp"

using namespace dilute;

namespace {

Box line_box(int half_side) {
  Box b;
  b.dimension = 1;
  b.half_side = half_side;
  return b;
}

void BM_SampleBernoulli(benchmark::State& state) {
  const DisorderSpec spec = DisorderSpec::bernoulli(0.3);
  const Box box = line_box(static_cast<int>(state.range(0)) / 2);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_potential(spec, box, seed++));
  }
  state.SetItemsProcessed(state.iterations() * box.site_count());
}

void BM_SampleSmoothed(benchmark::State& state) {
  const DisorderSpec spec = DisorderSpec::smoothed_bernoulli(0.2);
  const Box box = line_box(static_cast<int>(state.range(0)) / 2);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_potential(spec, box, seed++));
  }
  state.SetItemsProcessed(state.iterations() * box.site_count());
}

void BM_SturmCount(benchmark::State& state) {
  const long n = state.range(0);
  std::vector<double> diag(n, 2.0), off(n - 1, -1.0);
  RngStream rng(7);
  for (auto& d : diag) d += rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(count_below_tridiagonal(diag, off, 1.7));
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_BandedCount(benchmark::State& state) {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Box box = line_box(static_cast<int>(state.range(0)) / 2);
  const PotentialSample pot = sample_potential(DisorderSpec::uniform_dilute(0.3), box, 3);
  const FiniteOperator op = assemble_dirichlet(k, box, pot.values);
  CountOptions opts;
  opts.force_banded = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(count_below(op, 1.7, opts));
  }
  state.SetItemsProcessed(state.iterations() * box.site_count());
}

void BM_DenseCount(benchmark::State& state) {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Box box = line_box(static_cast<int>(state.range(0)) / 2);
  const PotentialSample pot = sample_potential(DisorderSpec::uniform_dilute(0.3), box, 3);
  const FiniteOperator op = assemble_dirichlet(k, box, pot.values);
  CountOptions opts;
  opts.force_dense = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(count_below(op, 1.7, opts));
  }
}

void BM_FloquetFiber(benchmark::State& state) {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const int N = static_cast<int>(state.range(0));
  Box cell;
  cell.dimension = 1;
  cell.half_side = N;
  const PotentialSample omega = sample_potential(DisorderSpec::bernoulli(0.3), cell, 5);
  const double theta = 0.05;
  for (auto _ : state) {
    const FloquetFiber f = assemble_floquet(k, omega.values, std::span(&theta, 1), N);
    benchmark::DoNotOptimize(fiber_eigenvalues(f));
  }
}

void BM_ResolventColumn(benchmark::State& state) {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Box box = line_box(static_cast<int>(state.range(0)) / 2);
  const PotentialSample pot = sample_potential(DisorderSpec::uniform_dilute(0.1), box, 11);
  for (auto _ : state) {
    const BoxResolvent G(k, box, pot.values, 0.0, 1e-3);
    benchmark::DoNotOptimize(G.entry(lattice_vec(0), lattice_vec(box.half_side / 2)));
  }
}

void BM_CoarseGrain(benchmark::State& state) {
  const ScalePlan plan = scale_plan_from_factors(9, state.range(0), 1, 1);
  Eigen::VectorXcd a = Eigen::VectorXcd::Random(plan.side_N());
  for (auto _ : state) {
    benchmark::DoNotOptimize(coarse_grain(a, plan));
  }
}

void BM_BlockMeanEvent(benchmark::State& state) {
  const DisorderSpec law = DisorderSpec::bernoulli(0.2);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mean_event_probability(law, state.range(0), 0.1, EventSign::plus, 1000, seed++, 1));
  }
}

}  // namespace

BENCHMARK(BM_SampleBernoulli)->Arg(1001)->Arg(100001);
BENCHMARK(BM_SampleSmoothed)->Arg(1001)->Arg(100001);
BENCHMARK(BM_SturmCount)->Arg(1001)->Arg(10001)->Arg(100001);
BENCHMARK(BM_BandedCount)->Arg(1001)->Arg(10001);
BENCHMARK(BM_DenseCount)->Arg(101)->Arg(301);
BENCHMARK(BM_FloquetFiber)->Arg(6)->Arg(20)->Arg(41);
BENCHMARK(BM_ResolventColumn)->Arg(101)->Arg(301);
BENCHMARK(BM_CoarseGrain)->Arg(73)->Arg(217);
BENCHMARK(BM_BlockMeanEvent)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
