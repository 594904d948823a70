#ifndef PIEZOHOM_VERIFY_HPP
#define PIEZOHOM_VERIFY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "piezohom/fem.hpp"
#include "piezohom/grid.hpp"
#include "piezohom/macro.hpp"
#include "piezohom/materials.hpp"

namespace piezohom {

/// Euclidean (Frobenius) norms of the differences of c, e and eps.
struct TensorErrors {
  double e_c = 0.0;
  double e_e = 0.0;
  double e_d = 0.0;
};
TensorErrors tensor_errors(const MaterialTensorSet& a, const MaterialTensorSet& ref);

/// A single Voigt entry reported in convergence tables.
struct Coefficient {
  std::string name;
  char block;  ///< 'c', 'e' or 'd' (permittivity)
  int row;
  int col;
};
/// c11 c12 c13 c33 c44 c66 e15 e31 e33 eps11 eps33, 0-based Voigt positions.
const std::vector<Coefficient>& table_coefficients();
double coefficient_value(const MaterialTensorSet& m, const Coefficient& coef);

/// order_i = log(err_base / err_i) / log(ladder_i / ladder_base), where base is
/// the smallest ladder value. Absent for the base point and wherever an error
/// is not positive.
std::vector<std::optional<double>> estimate_orders(std::span<const double> ladder,
                                                   std::span<const double> errors);

struct ConvergenceRow {
  double ladder_value = 0.0;
  std::string coefficient;
  double value = 0.0;
  double reference = 0.0;
  double abs_error = 0.0;
  std::optional<double> order;
};

struct ConvergenceTable {
  std::string ladder_name = "delta_over_eps";
  MaterialTensorSet reference;
  std::vector<ConvergenceRow> rows;

  /// Rows of one coefficient in ladder order.
  std::vector<ConvergenceRow> coefficient_rows(const std::string& name) const;
  /// Header plus one line per row; 9 significant digits, empty order cells
  /// where no order exists.
  std::string to_csv() const;
};

/// One row per (ladder point, table coefficient); orders from estimate_orders.
ConvergenceTable build_convergence_table(std::span<const double> ladder,
                                         std::span<const MaterialTensorSet> values,
                                         const MaterialTensorSet& reference,
                                         const std::string& ladder_name = "delta_over_eps");

/// Closed-form effective properties of a two-phase laminate with decoupled,
/// orthotropic-aligned phases and layers normal to `axis`.
struct LaminateOracle {
  double eps_across = 0.0;    ///< harmonic mean
  double eps_in_plane = 0.0;  ///< arithmetic mean
  double c_series = 0.0;      ///< across-layer normal stiffness, exact for layers
  double c_parallel = 0.0;    ///< arithmetic mean of the same modulus (upper bound)
};
/// `fraction` is the volume fraction of phase a. Throws UsageError when a phase
/// has nonzero piezoelectric constants, ArgumentError on fraction outside [0, 1].
LaminateOracle laminate_oracle(const MaterialTensorSet& a, const MaterialTensorSet& b, double fraction,
                               int axis);

inline constexpr long kDefaultDofBudget = 2'000'000;

struct ResolvedProblem {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Ones();
  VoxelCell pattern;  ///< one period; its phases are mapped onto the period lattice
  double epsilon = 1.0;
  int voxels_per_period = 8;
  Vec3 body_load = Vec3::Zero();
  BoundaryConditions bc{};
  long dof_budget = kDefaultDofBudget;

  /// Grid with voxels_per_period cells per epsilon. Throws GeometryError when
  /// the box is not a whole number of voxels.
  StructuredGrid grid() const;
  long estimated_dofs() const;
};

/// Fine-scale solve of the heterogeneous problem. Throws BudgetError before
/// assembling when the DOF estimate exceeds the budget.
CoupledField resolved_micro_solve(const ResolvedProblem& problem, const SolverOptions& options = {},
                                  SolveReport* report = nullptr);

/// Norms over the grid by the assembly Gauss rule.
struct FieldNorms {
  double l2_u = 0.0;
  double l2_phi = 0.0;
  double h1_semi_u = 0.0;
  double h1_semi_phi = 0.0;

  double h1_u() const;
  double h1_phi() const;
};
FieldNorms field_norms(const CoupledField& field);

/// Norms of micro - corrected. Throws ArgumentError when the grids differ.
FieldNorms corrector_error(const CoupledField& micro, const CoupledField& corrected);

}  // namespace piezohom

#endif  // PIEZOHOM_VERIFY_HPP
