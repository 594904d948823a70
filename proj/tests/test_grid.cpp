#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "piezohom/errors.hpp"
#include "piezohom/grid.hpp"

namespace piezohom {
namespace {

MaterialTensorSet pzt5() { return from_transversely_isotropic(pzt5_params()); }
MaterialTensorSet polymer() { return from_transversely_isotropic(polymer_params()); }

int count_phase(const VoxelCell& cell, int id) {
  int count = 0;
  for (int p : cell.phase) count += p == id;
  return count;
}

TEST(FiberCell, VolumeFractionNearCircleArea) {
  for (double r : {0.3125, 0.4375}) {
    const VoxelCell cell = build_fiber_cell(32, r, pzt5(), polymer());
    const double area = std::numbers::pi * r * r;
    EXPECT_NEAR(cell.phase_fraction(kFiberPhase), area, 0.02 * area) << "r=" << r;
  }
}

TEST(FiberCell, MatchesVoxelCenterCount) {
  const int n = 32;
  const double r = 0.4375;
  int inside = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) / n - 0.5;
      const double y = (j + 0.5) / n - 0.5;
      inside += x * x + y * y < r * r;
    }
  const VoxelCell cell = build_fiber_cell(n, r, pzt5(), polymer());
  EXPECT_EQ(count_phase(cell, kFiberPhase), inside * n);
}

TEST(FiberCell, ZeroRadiusIsAllMatrix) {
  const VoxelCell cell = build_fiber_cell(8, 0.0, pzt5(), polymer());
  EXPECT_EQ(count_phase(cell, kMatrixPhase), 512);
}

TEST(FiberCell, RejectsBadInput) {
  EXPECT_THROW(build_fiber_cell(0, 0.3, pzt5(), polymer()), std::invalid_argument);
  EXPECT_THROW(build_fiber_cell(8, 0.6, pzt5(), polymer()), std::invalid_argument);
}

TEST(LaminateCell, LayersAlongAxis) {
  const VoxelCell cell = build_laminate_cell(8, 0.5, 0, pzt5(), polymer());
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(cell.phase[i + 8 * (j + 8 * k)], i < 4 ? kFiberPhase : kMatrixPhase);
      }
}

TEST(CutSample, TwoPeriodsAtCornerTileThePattern) {
  const int n = 8;
  const VoxelCell unit = build_fiber_cell(n, 0.3125, pzt5(), polymer());
  const VoxelCell sample = cut_sample(unit, Vec3::Zero(), 2.0, n);
  ASSERT_EQ(sample.n, 2 * n);
  EXPECT_FALSE(sample.non_integer_period_multiple);
  EXPECT_DOUBLE_EQ(sample.period, 1.0);
  for (int k = 0; k < 2 * n; ++k)
    for (int j = 0; j < 2 * n; ++j)
      for (int i = 0; i < 2 * n; ++i) {
        EXPECT_EQ(sample.phase[i + 2 * n * (j + 2 * n * k)], unit.phase[i % n + n * (j % n + n * (k % n))]);
      }
}

TEST(CutSample, FractionMatchesUnitCell) {
  const VoxelCell unit = build_fiber_cell(8, 0.3125, pzt5(), polymer());
  const VoxelCell sample = cut_sample(unit, Vec3::Zero(), 4.0, 8);
  EXPECT_EQ(sample.n, 32);
  EXPECT_DOUBLE_EQ(sample.phase_fraction(kFiberPhase), unit.phase_fraction(kFiberPhase));
}

TEST(CutSample, ShiftKeepsFraction) {
  const VoxelCell unit = build_fiber_cell(8, 0.3125, pzt5(), polymer());
  const VoxelCell shifted = cut_sample(unit, Vec3::Constant(0.5), 2.0, 8);
  EXPECT_DOUBLE_EQ(shifted.phase_fraction(kFiberPhase), unit.phase_fraction(kFiberPhase));
  EXPECT_NE(shifted.phase, cut_sample(unit, Vec3::Zero(), 2.0, 8).phase);
}

TEST(CutSample, FlagsNonIntegerMultiple) {
  const VoxelCell unit = build_fiber_cell(8, 0.3125, pzt5(), polymer());
  EXPECT_TRUE(cut_sample(unit, Vec3::Zero(), 2.5, 8).non_integer_period_multiple);
}

TEST(PeriodicPhase, WrapsAcrossPeriods) {
  const VoxelCell unit = build_laminate_cell(4, 0.5, 2, pzt5(), polymer());
  EXPECT_EQ(periodic_phase_at(unit, Vec3(0.1, 0.1, 0.1)), kFiberPhase);
  EXPECT_EQ(periodic_phase_at(unit, Vec3(0.1, 0.1, 0.9)), kMatrixPhase);
  EXPECT_EQ(periodic_phase_at(unit, Vec3(3.1, -2.9, -0.9)), kFiberPhase);
  EXPECT_EQ(periodic_phase_at(unit, Vec3(0.0, 0.0, -0.1)), kMatrixPhase);
}

TEST(VoxelPattern, RoundTrip) {
  const VoxelCell unit = build_fiber_cell(6, 0.3125, pzt5(), polymer(), 2.0);
  std::stringstream s;
  write_voxel_pattern(s, unit);
  const VoxelCell back = read_voxel_pattern(s, unit.phase_materials);
  EXPECT_EQ(back.n, 6);
  EXPECT_DOUBLE_EQ(back.edge_length, 2.0);
  EXPECT_EQ(back.phase, unit.phase);
}

TEST(VoxelPattern, RejectsUnknownPhaseAndShortData) {
  std::istringstream unknown("2 1\n0 0 0 0 0 0 0 7\n");
  EXPECT_THROW(read_voxel_pattern(unknown, {{0, pzt5()}}), ConfigurationError);
  std::istringstream shortdata("2 1\n0 0 0\n");
  EXPECT_THROW(read_voxel_pattern(shortdata, {{0, pzt5()}}), ConfigurationError);
}

TEST(StructuredGrid, NodeAndCellNumbering) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3(2, 1, 1), {2, 1, 1});
  EXPECT_EQ(g.num_nodes(), 12);
  EXPECT_EQ(g.num_cells(), 2);
  EXPECT_TRUE(g.node_position(g.num_nodes() - 1).isApprox(Vec3(2, 1, 1)));
  EXPECT_TRUE(g.cell_center(1).isApprox(Vec3(1.5, 0.5, 0.5)));
  const auto nodes = g.cell_nodes(0);
  for (int a = 0; a < 8; ++a) {
    const Vec3 expected((a & 1), (a >> 1) & 1, a >> 2);
    EXPECT_TRUE(g.node_position(nodes[a]).isApprox(expected)) << a;
  }
}

TEST(Periodic, IndependentNodeCounts) {
  for (int n : {2, 4, 5}) {
    const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {n, n, n});
    DofMap dofs(g.num_nodes());
    apply_periodic_pairs(g, dofs);
    EXPECT_EQ(dofs.independent_nodes(), n * n * n);
    int slaves = 0;
    for (int v = 0; v < g.num_nodes(); ++v) slaves += dofs.is_slave(v);
    EXPECT_EQ(slaves, g.num_nodes() - n * n * n);
  }
  const StructuredGrid two = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  EXPECT_EQ(two.num_nodes(), 27);
  const StructuredGrid four = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {4, 4, 4});
  EXPECT_EQ(four.num_nodes(), 125);
}

TEST(Periodic, CornersShareOneMaster) {
  const int n = 3;
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {n, n, n});
  DofMap dofs(g.num_nodes());
  apply_periodic_pairs(g, dofs);
  for (int v = 0; v < g.num_nodes(); ++v) {
    const auto ijk = g.node_ijk(v);
    if ((ijk[0] == 0 || ijk[0] == n) && (ijk[1] == 0 || ijk[1] == n) && (ijk[2] == 0 || ijk[2] == n)) {
      EXPECT_EQ(dofs.representative(v), 0);
    }
    const auto m = g.node_ijk(dofs.representative(v));
    for (int a = 0; a < 3; ++a) EXPECT_EQ(m[a], ijk[a] % n);
  }
  for (int c = 0; c < 4; ++c) EXPECT_TRUE(dofs.is_fixed(0, c));
  dofs.finalize();
  EXPECT_EQ(dofs.num_equations(), 4 * (n * n * n - 1));
}

TEST(DofMap, RejectsConflictingConstraints) {
  DofMap dofs(4);
  dofs.set_master(1, 0);
  EXPECT_THROW(dofs.fix(1, 0, 0.0), ArgumentError);
  EXPECT_THROW(dofs.set_master(2, 1), ArgumentError);
}

TEST(DofMap, FixBoundarySelectedComponents) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  DofMap dofs(g.num_nodes());
  fix_boundary(g, dofs, {true, true, true, false});
  dofs.finalize();
  // 26 boundary nodes lose their displacements; the centre node keeps all four.
  EXPECT_EQ(dofs.num_equations(), 26 + 4);
}

TEST(MacroMesh, RejectsDegenerateBox) {
  MacroMesh m;
  m.upper = Vec3(1, 0, 1);
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.upper = Vec3::Ones();
  m.divisions = {0, 1, 1};
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace piezohom
