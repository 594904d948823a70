#ifndef PIEZOHOM_CELLS_HPP
#define PIEZOHOM_CELLS_HPP

#include <array>
#include <string>
#include <vector>

#include "piezohom/fem.hpp"
#include "piezohom/grid.hpp"
#include "piezohom/materials.hpp"

namespace piezohom {

enum class CellRoute { kHmm, kPeriodic };

/// Where an effective tensor set came from.
struct RouteTag {
  CellRoute route = CellRoute::kPeriodic;
  double delta_over_eps = 0.0;     ///< HMM only
  Vec3 sample_point = Vec3::Zero();  ///< HMM only: box center x_alpha
  std::string label() const;
};

/// Which blocks of the coupled problem a cell solve keeps. The reduced modes
/// clamp the other field to zero and serve as independent references.
enum class CellPhysics { kCoupled, kElasticOnly, kDielectricOnly };

/// Cases 0..5 impose a unit macro strain in Voigt slot J through the gradient
/// e_k (x) e_l with (k, l) = voigt_pair(J); cases 6..8 impose a unit potential
/// gradient along axis l.
inline constexpr int kLoadCases = 9;

struct MacroLoad {
  Mat3 du = Mat3::Zero();
  Vec3 dphi = Vec3::Zero();
};
MacroLoad load_case(int index);

/// Amplitudes of the nine load cases carried by a macro gradient: Voigt
/// engineering strain followed by the potential gradient.
Eigen::Matrix<double, kLoadCases, 1> load_amplitudes(const Mat3& du, const Vec3& dphi);

struct CellSolveOptions {
  SolverOptions solver;
  CellPhysics physics = CellPhysics::kCoupled;
};

/// Nine cell solutions. For HMM, `fluctuation` is the total minus the affine
/// boundary data (P - x_l e_k, Phi, Q, Psi - x_l) and vanishes on the box
/// boundary. For periodic cells it holds (N, phi_kl) and (W, psi_l), shifted to
/// zero mean. Cases skipped by a reduced physics mode are left empty.
struct CellSolutionSet {
  RouteTag tag;
  CellPhysics physics = CellPhysics::kCoupled;
  VoxelCell cell;
  Discretization disc;
  std::vector<CoupledField> total;
  std::vector<CoupledField> fluctuation;
  SolveReport report;

  bool has_case(int index) const { return total[index].values.size() != 0; }
};

/// Affine Dirichlet data on the whole boundary of the sampling box.
CellSolutionSet solve_hmm_cells(const VoxelCell& sample, const CellSolveOptions& options = {});

/// Periodic fluctuations with node 0 pinned during the solve and the discrete
/// mean removed afterwards.
CellSolutionSet solve_periodic_cells(const VoxelCell& unit, const CellSolveOptions& options = {});

/// Cell-averaged mean of one nodal component (trilinear interpolant integrated
/// exactly by the Gauss rule).
double field_mean(const CoupledField& field, int component);

struct EffectiveTensorSet {
  MaterialTensorSet tensors;
  RouteTag tag;
  int resolution = 0;  ///< voxels per cell edge
  CellPhysics physics = CellPhysics::kCoupled;
  /// e from the stress response to the potential cases (the transposed formula).
  Mat36 e_dual = Mat36::Zero();
  /// max |e - e_dual| over max(max|e|, sqrt(max|c| max|eps|)).
  double dual_discrepancy = 0.0;
};

/// Throws UsageError unless the solutions are HMM solutions.
EffectiveTensorSet hmm_effective(const CellSolutionSet& sols);
/// Throws UsageError unless the solutions are periodic solutions.
EffectiveTensorSet homogenized_effective(const CellSolutionSet& sols);

std::string to_json(const EffectiveTensorSet& set);
/// Inverse of to_json. Throws ValidationError on malformed documents.
EffectiveTensorSet effective_from_json(const std::string& text);

/// Two-scale expansion u0 + eps (N grad u0 + W grad phi0) sampled at the
/// nodes of `micro`. Macro gradients are evaluated at element centroids and
/// averaged over the macro elements sharing a micro node. The micro grid must
/// align with the macro elements and have cells.cell.n voxels per period;
/// throws ArgumentError otherwise.
CoupledField first_order_corrector(const CoupledField& macro, const CellSolutionSet& cells,
                                   double epsilon, const StructuredGrid& micro);

}  // namespace piezohom

#endif  // PIEZOHOM_CELLS_HPP
