#include <benchmark/benchmark.h>

#include "piezohom/cells.hpp"
#include "piezohom/fem.hpp"
#include "piezohom/grid.hpp"
#include "piezohom/materials.hpp"

namespace {

using namespace piezohom;

VoxelCell fiber_cell(int n) {
  return build_fiber_cell(n, 0.3125, from_transversely_isotropic(pzt5_params()),
                          from_transversely_isotropic(polymer_params()));
}

void BM_ElementMatrices(benchmark::State& state) {
  const MaterialTensorSet m = from_transversely_isotropic(pzt5_params());
  const Vec3 size = Vec3::Constant(1.0 / 32.0);
  for (auto _ : state) {
    ElementMatrix k = element_matrices(size, m);
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_ElementMatrices);

void BM_AssemblePeriodic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Discretization disc = Discretization::from_cell(fiber_cell(n));
  DofMap dofs(disc.grid.num_nodes());
  apply_periodic_pairs(disc.grid, dofs);
  for (auto _ : state) {
    LinearSystem sys = assemble(disc, dofs);
    benchmark::DoNotOptimize(sys);
  }
  state.SetItemsProcessed(state.iterations() * disc.grid.num_cells());
}
BENCHMARK(BM_AssemblePeriodic)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_PeriodicCells(benchmark::State& state) {
  const VoxelCell cell = fiber_cell(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    CellSolutionSet sols = solve_periodic_cells(cell);
    benchmark::DoNotOptimize(sols);
  }
}
BENCHMARK(BM_PeriodicCells)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_HmmCells(benchmark::State& state) {
  const VoxelCell unit = fiber_cell(8);
  const double delta = static_cast<double>(state.range(0));
  const VoxelCell sample = cut_sample(unit, Vec3::Constant(0.5), delta, 8);
  for (auto _ : state) {
    CellSolutionSet sols = solve_hmm_cells(sample);
    benchmark::DoNotOptimize(sols);
  }
}
BENCHMARK(BM_HmmCells)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
