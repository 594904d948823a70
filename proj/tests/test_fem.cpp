#include <gtest/gtest.h>

#include <cmath>

#include "piezohom/errors.hpp"
#include "piezohom/fem.hpp"

namespace piezohom {
namespace {

MaterialTensorSet pzt5() { return from_transversely_isotropic(pzt5_params()); }
MaterialTensorSet polymer() { return from_transversely_isotropic(polymer_params()); }

// Potential induced by a unit strain over a unit length, e / eps.
double potential_scale(const MaterialTensorSet& m) {
  return m.e.cwiseAbs().maxCoeff() / m.eps.diagonal().minCoeff();
}

MaterialTensorSet unit_dielectric() {
  MaterialTensorSet m = isotropic_material(1.0, 1.0, 1.0);
  return m;
}

// Q1 Laplacian on a box from 1D stiffness and mass matrices.
Eigen::Matrix<double, 8, 8> tensor_product_laplacian(const Vec3& h) {
  auto k1 = [](double l) { return Eigen::Matrix2d{{1.0 / l, -1.0 / l}, {-1.0 / l, 1.0 / l}}; };
  auto m1 = [](double l) { return Eigen::Matrix2d{{l / 3.0, l / 6.0}, {l / 6.0, l / 3.0}}; };
  Eigen::Matrix<double, 8, 8> k;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int ax[3] = {a & 1, (a >> 1) & 1, a >> 2};
      const int bx[3] = {b & 1, (b >> 1) & 1, b >> 2};
      double sum = 0.0;
      for (int d = 0; d < 3; ++d) {
        double term = 1.0;
        for (int e = 0; e < 3; ++e) term *= (d == e ? k1(h[e]) : m1(h[e]))(ax[e], bx[e]);
        sum += term;
      }
      k(a, b) = sum;
    }
  return k;
}

TEST(ElementMatrix, UnitCubeDielectricDiagonal) {
  const ElementMatrix k = element_matrices(Vec3::Ones(), unit_dielectric());
  for (int a = 0; a < 8; ++a) EXPECT_NEAR(k.k_phiphi()(a, a), 1.0 / 3.0, 1e-15);
}

TEST(ElementMatrix, DielectricBlockMatchesTensorProduct) {
  const Vec3 h(0.5, 1.0, 2.0);
  const ElementMatrix k = element_matrices(h, unit_dielectric());
  EXPECT_LT((k.k_phiphi() - tensor_product_laplacian(h)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ElementMatrix, PolymerHasZeroCouplingBlock) {
  const ElementMatrix k = element_matrices(Vec3::Constant(0.1), polymer());
  EXPECT_TRUE(k.k_uphi().isZero(0.0));
}

TEST(ElementMatrix, ScalingStiffnessScalesOnlyElasticBlock) {
  MaterialTensorSet m = pzt5();
  const ElementMatrix k1 = element_matrices(Vec3::Ones(), m);
  m.c *= 2.0;
  const ElementMatrix k2 = element_matrices(Vec3::Ones(), m);
  EXPECT_LT((k2.k_uu() - 2.0 * k1.k_uu()).norm(), 1e-12 * k1.k_uu().norm());
  EXPECT_EQ(k2.k_phiphi(), k1.k_phiphi());
  EXPECT_EQ(k2.k_uphi(), k1.k_uphi());
}

TEST(ElementMatrix, SymmetricWithRigidBodyNullSpace) {
  const ElementMatrix k = element_matrices(Vec3(0.3, 0.2, 0.4), pzt5());
  EXPECT_LT((k.full - k.full.transpose()).cwiseAbs().maxCoeff(), 1e-9 * k.full.cwiseAbs().maxCoeff());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 24, 24>> eig(k.k_uu());
  const double largest = eig.eigenvalues().maxCoeff();
  for (int i = 0; i < 6; ++i) EXPECT_LT(std::abs(eig.eigenvalues()[i]), 1e-12 * largest);
  EXPECT_GT(eig.eigenvalues()[6], 1e-6 * largest);
}

TEST(ElementMatrix, RejectsBadSize) {
  EXPECT_THROW(element_matrices(Vec3(1, 0, 1), pzt5()), GeometryError);
}

TEST(Quadrature, GradientsSumToZeroAndWeightsToVolume) {
  const HexQuadrature q(Vec3(1.0, 2.0, 3.0));
  EXPECT_NEAR(8 * q.weight, 6.0, 1e-14);
  for (int p = 0; p < 8; ++p) {
    EXPECT_NEAR(q.values[p].sum(), 1.0, 1e-15);
    EXPECT_LT(q.gradients[p].rowwise().sum().norm(), 1e-15);
  }
}

TEST(Assembly, AllDirichletSingleElementIsEmpty) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {1, 1, 1});
  DofMap dofs(g.num_nodes());
  fix_boundary(g, dofs, {true, true, true, true});
  dofs.finalize();
  const LinearSystem sys = assemble(Discretization::uniform(g, pzt5()), dofs);
  EXPECT_EQ(sys.matrix.rows(), 0);
  const auto fields = solve(sys);
  ASSERT_EQ(fields.size(), 1u);
  EXPECT_TRUE(fields[0].values.isZero(0.0));
}

// Fixes every boundary DOF to the affine field's value.
DofMap affine_dirichlet(const StructuredGrid& g, const CoupledField& affine) {
  DofMap dofs(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!g.on_boundary(v)) continue;
    for (int c = 0; c < 4; ++c) dofs.fix(v, c, affine.values(v, c));
  }
  dofs.finalize();
  return dofs;
}

TEST(Solve, HomogeneousAffineDataIsReproduced) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Mat3 du = Mat3::Zero();
      du(k, l) = 1.0;
      const CoupledField exact = CoupledField::affine(g, Vec3::Zero(), du, 0.0, Vec3::Zero());
      const auto fields = solve(assemble(Discretization::uniform(g, pzt5()), affine_dirichlet(g, exact)));
      const NodalValues diff = fields[0].values - exact.values;
      EXPECT_LT(diff.leftCols(3).cwiseAbs().maxCoeff(), 1e-12) << k << l;
      EXPECT_LT(diff.col(3).cwiseAbs().maxCoeff(), 1e-13 * potential_scale(pzt5())) << k << l;
    }
}

TEST(Solve, DecoupledLaplaceReproducesLinearPotential) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3(1.0, 0.5, 0.75), {4, 3, 5});
  const CoupledField exact = CoupledField::affine(g, Vec3::Zero(), Mat3::Zero(), 0.0, Vec3::UnitX());
  const auto fields = solve(assemble(Discretization::uniform(g, polymer()), affine_dirichlet(g, exact)));
  EXPECT_LT((fields[0].values - exact.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Solve, LaminateSeriesFluxIsHarmonicMean) {
  const int n = 8;
  const VoxelCell cell = build_laminate_cell(n, 0.5, 0, pzt5().without_coupling(), polymer());
  const Discretization disc = Discretization::from_cell(cell);
  const StructuredGrid& g = disc.grid;
  DofMap dofs(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.on_boundary(v))
      for (int c = 0; c < 3; ++c) dofs.fix(v, c, 0.0);
    const int i = g.node_ijk(v)[0];
    if (i == 0) dofs.fix(v, 3, 0.0);
    if (i == n) dofs.fix(v, 3, 1.0);
  }
  dofs.finalize();
  const auto fields = solve(assemble(disc, dofs));
  const double ea = pzt5().eps(0, 0);
  const double eb = polymer().eps(0, 0);
  const double harmonic = 2.0 / (1.0 / ea + 1.0 / eb);
  const FluxAverage flux = average_fluxes(disc, fields[0]);
  EXPECT_NEAR(flux.electric_displacement[0], -harmonic, 1e-9 * harmonic);
  EXPECT_NEAR(flux.electric_displacement[1], 0.0, 1e-12 * harmonic);
  // Series solution: potential at the interface is eb / (ea + eb).
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.node_ijk(v)[0] != n / 2) continue;
    EXPECT_NEAR(fields[0].potential(v), eb / (ea + eb), 1e-9);
  }
}

TEST(Fluxes, AffineFieldGivesConstitutiveLaw) {
  const StructuredGrid g = StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {2, 2, 2});
  const MaterialTensorSet m = pzt5();
  Mat3 du;
  du << 1e-3, 2e-4, 0, -1e-4, 5e-4, 3e-4, 0, 1e-4, -2e-3;
  const Vec3 dphi(10.0, -20.0, 30.0);
  const CoupledField f = CoupledField::affine(g, Vec3::Zero(), du, 0.0, dphi);
  const FluxAverage avg = average_fluxes(Discretization::uniform(g, m), f);
  const Vec6 s = engineering_strain(du);
  const Vec6 stress = m.c * s + m.e.transpose() * dphi;
  const Vec3 disp = m.e * s - m.eps * dphi;
  EXPECT_LT((avg.stress - stress).norm(), 1e-10 * stress.norm());
  EXPECT_LT((avg.electric_displacement - disp).norm(), 1e-10 * disp.norm());
  const PointGradient pg = gradient_at(f, HexQuadrature(g.spacing), 3, 5);
  EXPECT_LT((pg.du - du).norm(), 1e-15);
  EXPECT_LT((pg.dphi - dphi).norm(), 1e-12);
}

Eigen::MatrixXd quasi_definite_test_matrix(int n_u, int n_phi, std::vector<std::uint8_t>& potential) {
  const int n = n_u + n_phi;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n_u; ++i) {
    k(i, i) = 4.0e10;
    if (i > 0) k(i, i - 1) = k(i - 1, i) = -1.0e10;
  }
  for (int i = 0; i < n_phi; ++i) {
    const int r = n_u + i;
    k(r, r) = -3.0e-9;
    if (i > 0) k(r, r - 1) = k(r - 1, r) = 1.0e-9;
    k(r, i % n_u) = k(i % n_u, r) = 2.0;
  }
  potential.assign(n, 0);
  for (int i = n_u; i < n; ++i) potential[i] = 1;
  return k;
}

TEST(SolveEquations, DiagonalSystem) {
  SparseMatrix k(4, 4);
  k.insert(0, 0) = 2.0;
  k.insert(1, 1) = 4.0;
  k.insert(2, 2) = 8.0;
  k.insert(3, 3) = -1e-9;
  Eigen::MatrixXd b(4, 1);
  b << 2, 4, 8, -1e-9;
  const std::vector<std::uint8_t> potential{0, 0, 0, 1};
  const Eigen::MatrixXd x = solve_equations(k, b, potential);
  EXPECT_LT((x - Eigen::MatrixXd::Ones(4, 1)).norm(), 1e-14);
}

TEST(SolveEquations, DirectAndSchurAgree) {
  std::vector<std::uint8_t> potential;
  const Eigen::MatrixXd dense = quasi_definite_test_matrix(40, 15, potential);
  const SparseMatrix k = dense.sparseView();
  // Unknowns of balanced energy: x = D^{-1/2} y with D = |diag K|.
  const Eigen::VectorXd root = dense.diagonal().cwiseAbs().cwiseSqrt();
  const Eigen::MatrixXd x_true = root.cwiseInverse().asDiagonal() * Eigen::MatrixXd::Random(55, 3);
  const Eigen::MatrixXd b = dense * x_true;
  for (SolverKind kind : {SolverKind::kDirectLdlt, SolverKind::kSchurComplement}) {
    SolverOptions opts;
    opts.kind = kind;
    SolveReport report;
    const Eigen::MatrixXd x = solve_equations(k, b, potential, opts, &report);
    EXPECT_LT((root.asDiagonal() * (x - x_true)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(report.relative_residual, 1e-10);
    EXPECT_EQ(report.used, kind);
    EXPECT_EQ(report.equations, 55);
  }
}

TEST(SolveEquations, RejectsMismatchedShapes) {
  SparseMatrix k(3, 3);
  k.setIdentity();
  const std::vector<std::uint8_t> potential{0, 0};
  EXPECT_THROW(solve_equations(k, Eigen::MatrixXd::Ones(3, 1), potential), std::invalid_argument);
}

TEST(SolveEquations, SingularSystemRaisesSolverError) {
  SparseMatrix k(2, 2);
  k.insert(0, 0) = 1.0;
  k.insert(0, 1) = 1.0;
  k.insert(1, 0) = 1.0;
  k.insert(1, 1) = 1.0;
  const std::vector<std::uint8_t> potential{0, 0};
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  EXPECT_THROW(solve_equations(k, b, potential), SolverError);
}

TEST(Discretization, RejectsMissingMaterial) {
  Discretization d = Discretization::uniform(StructuredGrid::box(Vec3::Zero(), Vec3::Ones(), {1, 1, 1}), pzt5());
  d.element_material[0] = 3;
  EXPECT_THROW(d.validate(), ConfigurationError);
}

}  // namespace
}  // namespace piezohom
