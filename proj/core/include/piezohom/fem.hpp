#ifndef PIEZOHOM_FEM_HPP
#define PIEZOHOM_FEM_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "piezohom/grid.hpp"
#include "piezohom/materials.hpp"

namespace piezohom {

using SparseMatrix = Eigen::SparseMatrix<double>;
using NodalValues = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// Nodal (u1, u2, u3, phi) on a structured grid.
struct CoupledField {
  StructuredGrid grid;
  NodalValues values;

  static CoupledField zeros(const StructuredGrid& grid) {
    return {grid, NodalValues::Zero(grid.num_nodes(), 4)};
  }
  /// Samples u = u0 + G x, phi = phi0 + g.x at every node.
  static CoupledField affine(const StructuredGrid& grid, const Vec3& u0, const Mat3& u_gradient,
                             double phi0, const Vec3& phi_gradient);
  Vec3 displacement(int node) const { return values.row(node).head<3>().transpose(); }
  double potential(int node) const { return values(node, 3); }
};

/// Grid plus a material per cell.
struct Discretization {
  StructuredGrid grid;
  std::vector<int> element_material;
  std::vector<MaterialTensorSet> materials;

  static Discretization from_cell(const VoxelCell& cell);
  static Discretization uniform(const StructuredGrid& grid, const MaterialTensorSet& m);
  const MaterialTensorSet& material_of(int cell) const { return materials[element_material[cell]]; }
  /// Throws ConfigurationError if a cell points outside the material table.
  void validate() const;
};

/// Shape-function gradients of the trilinear hexahedron at the 2x2x2 Gauss
/// points of an axis-aligned box; local node a sits at (a & 1, (a >> 1) & 1, a >> 2).
struct HexQuadrature {
  std::array<Eigen::Matrix<double, 3, 8>, 8> gradients;
  std::array<Eigen::Matrix<double, 1, 8>, 8> values;
  double weight = 0;  ///< identical Jacobian-weighted weight for every point

  explicit HexQuadrature(const Vec3& size);
};

/// Engineering-shear strain operator (6 x 24) from shape gradients at one point.
Eigen::Matrix<double, 6, 24> strain_operator(const Eigen::Matrix<double, 3, 8>& gradients);

/// 32 x 32 element matrix, local DOF 4a + c, in the symmetric arrangement
/// [[K_uu, K_uphi], [K_uphi^T, -K_phiphi]].
struct ElementMatrix {
  Eigen::Matrix<double, 32, 32> full;

  Eigen::Matrix<double, 24, 24> k_uu() const;
  Eigen::Matrix<double, 24, 8> k_uphi() const;
  /// Positive semi-definite dielectric block (sign restored).
  Eigen::Matrix<double, 8, 8> k_phiphi() const;
};

/// 2x2x2 Gauss integration of one voxel with constant material.
/// Throws GeometryError on non-positive edge lengths.
ElementMatrix element_matrices(const Vec3& size, const MaterialTensorSet& m);

/// Condensed system K x = b over the free equations of a DofMap. Column r of
/// `rhs` belongs to `lifts[r]`: the total field is lift + correction, where the
/// correction vanishes on Dirichlet DOFs and equals x on free ones.
struct LinearSystem {
  StructuredGrid grid;
  DofMap dofs{0};
  std::vector<CoupledField> lifts;
  SparseMatrix matrix;
  Eigen::MatrixXd rhs;

  std::vector<std::uint8_t> potential_mask() const;
};

/// Field carrying the DofMap's Dirichlet values (zero elsewhere).
CoupledField dirichlet_lift(const StructuredGrid& grid, const DofMap& dofs);

/// Assembles the global matrix (sum of element matrices, Dirichlet columns
/// eliminated, periodic slaves folded into masters) and one right-hand side per
/// lift: body load minus the lift's action. An empty `lifts` span means a
/// single lift built from the DofMap's Dirichlet values.
LinearSystem assemble(const Discretization& disc, const DofMap& dofs,
                      const Vec3& body_load = Vec3::Zero(),
                      std::span<const CoupledField> lifts = {});

enum class SolverKind {
  kAuto,
  /// Sparse LDL^T of the equilibrated quasi-definite matrix.
  kDirectLdlt,
  /// Supernodal Cholesky of the displacement block and preconditioned CG on
  /// the SPD potential Schur complement C + B^T A^{-1} B.
  kSchurComplement,
};

struct SolverOptions {
  SolverKind kind = SolverKind::kAuto;
  double tolerance = 1e-10;
  int direct_max_equations = 4000;
  int max_iterations = 400;
  int refinement_steps = 2;
};

struct SolveReport {
  SolverKind used = SolverKind::kAuto;
  double relative_residual = 0;  ///< max over columns, equilibrated 2-norm
  int iterations = 0;
  int equations = 0;
};

/// Solves K X = B. `potential` flags the electrostatic rows (needed by the
/// Schur path). Residuals are measured after symmetric diagonal equilibration
/// D^{-1/2} K D^{-1/2} so mechanical and electrical rows weigh alike. Throws
/// SolverError when the tolerance is not met.
Eigen::MatrixXd solve_equations(const SparseMatrix& k, const Eigen::MatrixXd& b,
                                std::span<const std::uint8_t> potential,
                                const SolverOptions& options = {}, SolveReport* report = nullptr);

/// True when CHOLMOD's supernodal (dense-block, LAPACK-backed) Cholesky passes
/// a small self-test. Otherwise the solvers fall back to the simplicial
/// factorization, which is correct but much slower on large cells.
bool supernodal_factorization_reliable();

/// Total fields, one per lift.
std::vector<CoupledField> solve(const LinearSystem& sys, const SolverOptions& options = {},
                                SolveReport* report = nullptr);

/// Lift plus correction for one solution column.
CoupledField reconstruct(const StructuredGrid& grid, const DofMap& dofs,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const CoupledField& lift);

/// Volume averages of stress (Voigt order 11,22,33,23,13,12) and electric
/// displacement, evaluated at the assembly Gauss points.
struct FluxAverage {
  Vec6 stress = Vec6::Zero();
  Vec3 electric_displacement = Vec3::Zero();
};
FluxAverage average_fluxes(const Discretization& disc, const CoupledField& field);

/// Displacement gradient (row i = d u_i / dx) and potential gradient of a field
/// at one Gauss point of one cell.
struct PointGradient {
  Mat3 du;
  Vec3 dphi;
  Vec3 u;
  double phi;
};
PointGradient gradient_at(const CoupledField& field, const HexQuadrature& q, int cell, int point);

}  // namespace piezohom

#endif  // PIEZOHOM_FEM_HPP
