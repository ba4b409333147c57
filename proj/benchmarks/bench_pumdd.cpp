#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pumdd/assembly.hpp"
#include "pumdd/krylov.hpp"
#include "pumdd/schwarz.hpp"

using namespace pumdd;

namespace {

ProblemData example() {
  ProblemData d;
  d.beta = 0.1;
  d.source = [](Point x) {
    return 10.0 * (std::sin(2.0 * std::numbers::pi * (x.x1 + 0.5)) + (x.x2 + 0.5));
  };
  d.obstacle = [](Point) { return 0.01; };
  return d;
}

IndexSet all_nodes(std::size_t n) {
  IndexSet s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<int>(i);
  return s;
}

}  // namespace

static void BM_AssembleStiffness(benchmark::State& state) {
  const PatchGrid grid(static_cast<int>(state.range(0)), Domain::centered_unit_square());
  const auto quad = build_quadrature(grid);
  const auto data = example();
  for (auto _ : state) {
    auto a = assemble_stiffness(grid, data, quad);
    benchmark::DoNotOptimize(a);
  }
  state.counters["unknowns"] = static_cast<double>(grid.node_count());
}
BENCHMARK(BM_AssembleStiffness)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

static void BM_PcgTwoLevel(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  const int j = static_cast<int>(state.range(1));
  const PatchGrid grid(level, Domain::centered_unit_square());
  const auto data = example();
  const auto quad = build_quadrature(grid);
  const auto a = assemble_stiffness(grid, data, quad);
  const auto b = assemble_load(grid, data, quad);
  const auto inactive = all_nodes(grid.node_count());
  const auto decomp = partition_subdomains(grid, inactive, j, Overlap::small);
  const PatchGrid coarse(coarse_level_for(j, level), grid.domain());
  const auto prec =
      build_two_level(a, decomp, build_coarse_restriction(grid, coarse, inactive)).as_operator();
  const LinearOperator op = [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
  for (auto _ : state) {
    auto r = pcg(op, b, prec, {});
    benchmark::DoNotOptimize(r.x.data());
  }
}
BENCHMARK(BM_PcgTwoLevel)->Args({3, 16})->Args({4, 16})->Args({4, 64})->Unit(benchmark::kMillisecond);

static void BM_SchwarzApply(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  const int j = static_cast<int>(state.range(1));
  const PatchGrid grid(level, Domain::centered_unit_square());
  const auto a = assemble_stiffness(grid, example(), build_quadrature(grid));
  const auto inactive = all_nodes(grid.node_count());
  const auto prec = build_one_level(a, partition_subdomains(grid, inactive, j, Overlap::small));
  std::vector<double> r(grid.node_count(), 1.0), z(grid.node_count());
  for (auto _ : state) {
    prec.apply(r, z);
    benchmark::DoNotOptimize(z.data());
  }
}
BENCHMARK(BM_SchwarzApply)->Args({4, 16})->Args({5, 16})->Args({5, 64})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
