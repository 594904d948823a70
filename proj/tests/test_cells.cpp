#include <gtest/gtest.h>

#include <cmath>

#include "piezohom/cells.hpp"
#include "piezohom/errors.hpp"

namespace piezohom {
namespace {

MaterialTensorSet pzt5() { return from_transversely_isotropic(pzt5_params()); }
MaterialTensorSet polymer() { return from_transversely_isotropic(polymer_params()); }

// Round-off floors for the unit load cases on a unit cell: strain cases move
// u by O(1) and phi by O(e / eps); potential cases move phi by O(1) and u by
// O(e / c).
std::pair<double, double> tolerances(const MaterialTensorSet& m, int load) {
  const double phi_per_strain = m.e.cwiseAbs().maxCoeff() / m.eps.diagonal().minCoeff();
  const double u_per_field = m.e.cwiseAbs().maxCoeff() / m.c.diagonal().minCoeff();
  return load < 6 ? std::pair{1e-12, 1e-13 * phi_per_strain} : std::pair{1e-12 * u_per_field, 1e-12};
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

// Exact effective tensors of a layered medium with layers normal to x1.
// With z = (s, E) and w = (sigma, -D), E = -grad phi, the law w = M z has the
// symmetric M = [[c, -e^T], [-e, -eps]]. Across the layers the components
// J = {s11, s13, s12, E1} jump while w_J and the remaining z stay constant.
MaterialTensorSet exact_laminate(const MaterialTensorSet& a, const MaterialTensorSet& b, double fa) {
  using Mat9d = Eigen::Matrix<double, 9, 9>;
  auto law = [](const MaterialTensorSet& m) {
    Mat9d k;
    k << m.c, -m.e.transpose(), -m.e, -m.eps;
    return k;
  };
  const std::array<Mat9d, 2> ms{law(a), law(b)};
  const std::array<double, 2> f{fa, 1.0 - fa};
  const int jump[4] = {0, 4, 5, 6};
  const int cont[5] = {1, 2, 3, 7, 8};
  auto sub = [](const Mat9d& m, const int* r, int nr, const int* c, int nc) {
    Eigen::MatrixXd out(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) out(i, j) = m(r[i], c[j]);
    return out;
  };
  Eigen::MatrixXd inv_avg = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd coupling_avg = Eigen::MatrixXd::Zero(4, 5);
  for (int p = 0; p < 2; ++p) {
    const Eigen::MatrixXd jj_inv = sub(ms[p], jump, 4, jump, 4).inverse();
    inv_avg += f[p] * jj_inv;
    coupling_avg += f[p] * jj_inv * sub(ms[p], jump, 4, cont, 5);
  }
  Mat9d eff = Mat9d::Zero();
  for (int col = 0; col < 9; ++col) {
    Eigen::Matrix<double, 9, 1> z_mean = Eigen::Matrix<double, 9, 1>::Unit(col);
    Eigen::VectorXd zj(4), zc(5);
    for (int i = 0; i < 4; ++i) zj[i] = z_mean[jump[i]];
    for (int i = 0; i < 5; ++i) zc[i] = z_mean[cont[i]];
    const Eigen::VectorXd wj = inv_avg.inverse() * (zj + coupling_avg * zc);
    for (int p = 0; p < 2; ++p) {
      const Eigen::VectorXd zj_p =
          sub(ms[p], jump, 4, jump, 4).inverse() * (wj - sub(ms[p], jump, 4, cont, 5) * zc);
      Eigen::Matrix<double, 9, 1> z = z_mean;
      for (int i = 0; i < 4; ++i) z[jump[i]] = zj_p[i];
      eff.col(col) += f[p] * ms[p] * z;
    }
  }
  MaterialTensorSet out;
  out.c = eff.topLeftCorner<6, 6>();
  out.e = -eff.topRightCorner<6, 3>().transpose();
  out.eps = -eff.bottomRightCorner<3, 3>();
  return out;
}

TEST(LoadCases, AmplitudesRecoverGradients) {
  Mat3 du;
  du << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const Vec3 dphi(-1, 2, -3);
  const auto amp = load_amplitudes(du, dphi);
  Mat3 sym = Mat3::Zero();
  Vec3 g = Vec3::Zero();
  for (int c = 0; c < kLoadCases; ++c) {
    const MacroLoad l = load_case(c);
    sym += amp[c] * 0.5 * (l.du + l.du.transpose());
    g += amp[c] * l.dphi;
  }
  EXPECT_TRUE(sym.isApprox(0.5 * (du + du.transpose())));
  EXPECT_TRUE(g.isApprox(dphi));
  EXPECT_THROW(load_case(9), ArgumentError);
}

TEST(HmmCells, HomogeneousSolutionsAreAffine) {
  const VoxelCell sample = build_homogeneous_cell(4, pzt5());
  const CellSolutionSet sols = solve_hmm_cells(sample);
  for (int c = 0; c < kLoadCases; ++c) {
    const auto [u_tol, phi_tol] = tolerances(pzt5(), c);
    const MacroLoad l = load_case(c);
    const CoupledField exact = CoupledField::affine(sols.disc.grid, Vec3::Zero(), l.du, 0.0, l.dphi);
    const NodalValues diff = sols.total[c].values - exact.values;
    EXPECT_LT(diff.leftCols(3).cwiseAbs().maxCoeff(), u_tol) << "case " << c;
    EXPECT_LT(diff.col(3).cwiseAbs().maxCoeff(), phi_tol) << "case " << c;
    EXPECT_EQ(diff, sols.fluctuation[c].values) << "case " << c;
  }
  // (k, l) = (1, 1): P = (x1, 0, 0), potential zero.
  const CoupledField& p11 = sols.total[0];
  const auto [u_tol, phi_tol] = tolerances(pzt5(), 0);
  for (int v = 0; v < p11.grid.num_nodes(); ++v) {
    EXPECT_NEAR(p11.values(v, 0), p11.grid.node_position(v)[0], u_tol);
    EXPECT_NEAR(p11.values(v, 1), 0.0, u_tol);
    EXPECT_NEAR(p11.values(v, 3), 0.0, phi_tol);
  }
}

TEST(HmmCells, HomogeneousEffectiveIsIdentity) {
  const MaterialTensorSet m = pzt5();
  const EffectiveTensorSet eff = hmm_effective(solve_hmm_cells(build_homogeneous_cell(4, m)));
  EXPECT_LT(rel_diff(eff.tensors.c, m.c), 1e-8);
  EXPECT_LT(rel_diff(eff.tensors.e, m.e), 1e-8);
  EXPECT_LT(rel_diff(eff.tensors.eps, m.eps), 1e-8);
}

TEST(HmmCells, TwoPhaseTracesAreAffine) {
  const VoxelCell unit = build_fiber_cell(4, 0.3125, pzt5(), polymer());
  const VoxelCell sample = cut_sample(unit, Vec3::Zero(), 2.0, 4);
  const CellSolutionSet sols = solve_hmm_cells(sample);
  EXPECT_EQ(sols.tag.route, CellRoute::kHmm);
  EXPECT_DOUBLE_EQ(sols.tag.delta_over_eps, 2.0);
  const StructuredGrid& g = sols.disc.grid;
  double interior = 0.0;
  for (int c = 0; c < kLoadCases; ++c) {
    for (int v = 0; v < g.num_nodes(); ++v) {
      const double f = sols.fluctuation[c].values.row(v).cwiseAbs().maxCoeff();
      if (g.on_boundary(v)) {
        EXPECT_EQ(f, 0.0);
      } else {
        interior = std::max(interior, f);
      }
    }
  }
  EXPECT_GT(interior, 1e-6);
}

TEST(HmmCells, DualFormulaAgrees) {
  const VoxelCell unit = build_fiber_cell(4, 0.3125, pzt5(), polymer());
  const EffectiveTensorSet eff = hmm_effective(solve_hmm_cells(cut_sample(unit, Vec3::Constant(0.3), 2.0, 4)));
  EXPECT_LE(eff.dual_discrepancy, 1e-8);
  EXPECT_TRUE(check_tensor_properties(eff.tensors).symmetric(1e-9));
}

TEST(PeriodicCells, HomogeneousFluctuationsVanish) {
  const MaterialTensorSet m = pzt5();
  const CellSolutionSet sols = solve_periodic_cells(build_homogeneous_cell(4, m));
  for (int c = 0; c < kLoadCases; ++c) {
    const auto [u_tol, phi_tol] = tolerances(m, c);
    EXPECT_LT(sols.fluctuation[c].values.leftCols(3).cwiseAbs().maxCoeff(), u_tol) << c;
    EXPECT_LT(sols.fluctuation[c].values.col(3).cwiseAbs().maxCoeff(), phi_tol) << c;
  }
  const EffectiveTensorSet eff = homogenized_effective(sols);
  EXPECT_LT(rel_diff(eff.tensors.c, m.c), 1e-8);
  EXPECT_LT(rel_diff(eff.tensors.e, m.e), 1e-8);
  EXPECT_LT(rel_diff(eff.tensors.eps, m.eps), 1e-8);
}

TEST(PeriodicCells, FluctuationMeansVanish) {
  const CellSolutionSet sols = solve_periodic_cells(build_fiber_cell(6, 0.3125, pzt5(), polymer()));
  for (int c = 0; c < kLoadCases; ++c)
    for (int comp = 0; comp < 4; ++comp) {
      const double scale = std::max(1e-300, sols.fluctuation[c].values.col(comp).cwiseAbs().maxCoeff());
      EXPECT_LT(std::abs(field_mean(sols.fluctuation[c], comp)) / scale, 1e-12) << c << "," << comp;
    }
}

TEST(PeriodicCells, FluctuationsArePeriodic) {
  const CellSolutionSet sols = solve_periodic_cells(build_fiber_cell(4, 0.3125, pzt5(), polymer()));
  const StructuredGrid& g = sols.disc.grid;
  for (int c = 0; c < kLoadCases; ++c)
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 4; ++k) {
        const NodalValues& f = sols.fluctuation[c].values;
        const auto jump = (f.row(g.node_index(0, j, k)) - f.row(g.node_index(4, j, k))).cwiseAbs();
        for (int comp = 0; comp < 4; ++comp) EXPECT_LE(jump[comp], 1e-12 * f.col(comp).cwiseAbs().maxCoeff());
      }
}

TEST(PeriodicCells, DielectricLaminateSawtooth) {
  const int n = 8;
  const MaterialTensorSet a = pzt5().without_coupling();
  const MaterialTensorSet b = polymer();
  const CellSolutionSet sols = solve_periodic_cells(build_laminate_cell(n, 0.5, 0, a, b));
  const double ga = 2.0 * b.eps(0, 0) / (a.eps(0, 0) + b.eps(0, 0));
  const StructuredGrid& g = sols.disc.grid;
  // Zero-mean sawtooth: slope ga - 1 in the lower layer, 1 - ga above.
  auto sawtooth = [&](double y) {
    const double s = y < 0.5 ? (ga - 1.0) * y : (ga - 1.0) * (1.0 - y);
    return s - (ga - 1.0) / 4.0;
  };
  for (int v = 0; v < g.num_nodes(); ++v) {
    const double y = g.node_position(v)[0];
    EXPECT_NEAR(sols.fluctuation[6].potential(v), sawtooth(y), 1e-10);
  }
  const EffectiveTensorSet eff = homogenized_effective(sols);
  const double harmonic = 2.0 / (1.0 / a.eps(0, 0) + 1.0 / b.eps(0, 0));
  EXPECT_NEAR(eff.tensors.eps(0, 0), harmonic, 1e-10 * harmonic);
  const double arithmetic = 0.5 * (a.eps(1, 1) + b.eps(1, 1));
  EXPECT_NEAR(eff.tensors.eps(1, 1), arithmetic, 1e-10 * arithmetic);
}

TEST(PeriodicCells, CoupledLaminateMatchesExactLayeredTensors) {
  const MaterialTensorSet a = pzt5();
  const MaterialTensorSet b = polymer();
  const EffectiveTensorSet eff = homogenized_effective(solve_periodic_cells(build_laminate_cell(4, 0.5, 0, a, b)));
  const MaterialTensorSet exact = exact_laminate(a, b, 0.5);
  EXPECT_LT(rel_diff(eff.tensors.c, exact.c), 1e-9);
  EXPECT_LT(rel_diff(eff.tensors.e, exact.e), 1e-9);
  EXPECT_LT(rel_diff(eff.tensors.eps, exact.eps), 1e-9);
  EXPECT_LE(eff.dual_discrepancy, 1e-10);
}

TEST(PeriodicCells, ReducedPhysicsMatchesCoupledWhenDecoupled) {
  const VoxelCell cell = build_fiber_cell(4, 0.3125, pzt5().without_coupling(), polymer());
  const EffectiveTensorSet full = homogenized_effective(solve_periodic_cells(cell));
  CellSolveOptions o;
  o.physics = CellPhysics::kElasticOnly;
  const CellSolutionSet elastic = solve_periodic_cells(cell, o);
  EXPECT_FALSE(elastic.has_case(6));
  EXPECT_TRUE(elastic.has_case(0));
  EXPECT_LT(rel_diff(homogenized_effective(elastic).tensors.c, full.tensors.c), 1e-9);
  o.physics = CellPhysics::kDielectricOnly;
  EXPECT_LT(rel_diff(homogenized_effective(solve_periodic_cells(cell, o)).tensors.eps, full.tensors.eps), 1e-9);
}

TEST(Effective, RouteMismatchIsRejected) {
  const VoxelCell cell = build_homogeneous_cell(2, pzt5());
  EXPECT_THROW(hmm_effective(solve_periodic_cells(cell)), UsageError);
  EXPECT_THROW(homogenized_effective(solve_hmm_cells(cell)), UsageError);
}

TEST(Effective, JsonRoundTrip) {
  const VoxelCell unit = build_fiber_cell(4, 0.3125, pzt5(), polymer());
  const EffectiveTensorSet eff = hmm_effective(solve_hmm_cells(cut_sample(unit, Vec3(0.1, 0.2, 0.3), 2.0, 4)));
  const EffectiveTensorSet back = effective_from_json(to_json(eff));
  EXPECT_EQ(back.tag.route, CellRoute::kHmm);
  EXPECT_EQ(back.tag.delta_over_eps, eff.tag.delta_over_eps);
  EXPECT_EQ(back.tag.sample_point, eff.tag.sample_point);
  EXPECT_EQ(back.resolution, eff.resolution);
  EXPECT_EQ(back.tensors.c, eff.tensors.c);
  EXPECT_EQ(back.tensors.e, eff.tensors.e);
  EXPECT_EQ(back.tensors.eps, eff.tensors.eps);
  EXPECT_EQ(back.dual_discrepancy, eff.dual_discrepancy);
  EXPECT_THROW(effective_from_json("{\"route\": \"sideways\"}"), ValidationError);
  EXPECT_THROW(effective_from_json("not json"), ValidationError);
}

TEST(Corrector, HomogeneousReturnsInterpolatedMacro) {
  const CellSolutionSet sols = solve_periodic_cells(build_homogeneous_cell(4, pzt5()));
  const StructuredGrid coarse = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  Mat3 du;
  du << 1e-3, 0, 2e-4, 0, -1e-3, 0, 0, 5e-4, 0;
  const CoupledField macro = CoupledField::affine(coarse, Vec3(1e-4, 0, 0), du, 3.0, Vec3(100, 0, -50));
  const StructuredGrid micro = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {8, 8, 8});
  const CoupledField corrected = first_order_corrector(macro, sols, 0.5, micro);
  const CoupledField expected = CoupledField::affine(micro, Vec3(1e-4, 0, 0), du, 3.0, Vec3(100, 0, -50));
  EXPECT_LT((corrected.values - expected.values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Corrector, ZeroMacroGivesZero) {
  const CellSolutionSet sols = solve_periodic_cells(build_fiber_cell(4, 0.3125, pzt5(), polymer()));
  const StructuredGrid coarse = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  const StructuredGrid micro = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {8, 8, 8});
  const CoupledField corrected = first_order_corrector(CoupledField::zeros(coarse), sols, 0.5, micro);
  EXPECT_TRUE(corrected.values.isZero(0.0));
}

TEST(Corrector, LaminateAddsSawtooth) {
  const int n = 4;
  const double eps = 0.5;
  const MaterialTensorSet a = pzt5().without_coupling();
  const MaterialTensorSet b = polymer();
  const CellSolutionSet sols = solve_periodic_cells(build_laminate_cell(n, 0.5, 0, a, b));
  const double ga = 2.0 * b.eps(0, 0) / (a.eps(0, 0) + b.eps(0, 0));
  const StructuredGrid coarse = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 1, 1});
  const CoupledField macro = CoupledField::affine(coarse, Vec3::Zero(), Mat3::Zero(), 0.0, Vec3::UnitX());
  const StructuredGrid micro = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {8, 8, 8});
  const CoupledField corrected = first_order_corrector(macro, sols, eps, micro);
  for (int v = 0; v < micro.num_nodes(); ++v) {
    const double x = micro.node_position(v)[0];
    double y = x / eps - std::floor(x / eps);
    if (y > 1.0 - 1e-12) y = 0.0;
    const double s = y < 0.5 ? (ga - 1.0) * y : (ga - 1.0) * (1.0 - y);
    EXPECT_NEAR(corrected.potential(v), x + eps * (s - (ga - 1.0) / 4.0), 1e-10);
    EXPECT_NEAR(corrected.displacement(v).norm(), 0.0, 1e-12);
  }
}

TEST(Corrector, RejectsMisalignedGrid) {
  const CellSolutionSet sols = solve_periodic_cells(build_homogeneous_cell(4, pzt5()));
  const StructuredGrid coarse = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  const StructuredGrid micro = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {6, 6, 6});
  EXPECT_THROW(first_order_corrector(CoupledField::zeros(coarse), sols, 0.5, micro), ArgumentError);
  EXPECT_THROW(first_order_corrector(CoupledField::zeros(coarse), solve_hmm_cells(build_homogeneous_cell(4, pzt5())),
                                     0.5, StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {8, 8, 8})),
               UsageError);
}

}  // namespace
}  // namespace piezohom
