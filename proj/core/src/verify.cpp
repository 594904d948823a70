#include "piezohom/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "piezohom/errors.hpp"

namespace piezohom {

TensorErrors tensor_errors(const MaterialTensorSet& a, const MaterialTensorSet& ref) {
  return {(a.c - ref.c).norm(), (a.e - ref.e).norm(), (a.eps - ref.eps).norm()};
}

const std::vector<Coefficient>& table_coefficients() {
  static const std::vector<Coefficient> coefficients{
      {"c11", 'c', 0, 0}, {"c12", 'c', 0, 1}, {"c13", 'c', 0, 2},   {"c33", 'c', 2, 2},
      {"c44", 'c', 3, 3}, {"c66", 'c', 5, 5}, {"e15", 'e', 0, 4},   {"e31", 'e', 2, 0},
      {"e33", 'e', 2, 2}, {"eps11", 'd', 0, 0}, {"eps33", 'd', 2, 2},
  };
  return coefficients;
}

double coefficient_value(const MaterialTensorSet& m, const Coefficient& coef) {
  switch (coef.block) {
    case 'c':
      return m.c(coef.row, coef.col);
    case 'e':
      return m.e(coef.row, coef.col);
    case 'd':
      return m.eps(coef.row, coef.col);
    default:
      throw ArgumentError("coefficient_value: unknown block");
  }
}

std::vector<std::optional<double>> estimate_orders(std::span<const double> ladder,
                                                   std::span<const double> errors) {
  if (ladder.size() != errors.size()) throw ArgumentError("estimate_orders: size mismatch");
  std::vector<std::optional<double>> orders(ladder.size());
  if (ladder.size() < 2) return orders;
  const auto base = static_cast<std::size_t>(std::min_element(ladder.begin(), ladder.end()) - ladder.begin());
  if (!(errors[base] > 0.0)) return orders;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (i == base || !(errors[i] > 0.0) || !(ladder[i] > ladder[base])) continue;
    orders[i] = std::log(errors[base] / errors[i]) / std::log(ladder[i] / ladder[base]);
  }
  return orders;
}

std::vector<ConvergenceRow> ConvergenceTable::coefficient_rows(const std::string& name) const {
  std::vector<ConvergenceRow> out;
  for (const auto& row : rows) {
    if (row.coefficient == name) out.push_back(row);
  }
  return out;
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream s;
  s << ladder_name << ",coefficient,value,reference,abs_error,order\n";
  char buf[64];
  auto number = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    s << number(row.ladder_value) << ',' << row.coefficient << ',' << number(row.value) << ','
      << number(row.reference) << ',' << number(row.abs_error) << ',';
    if (row.order) s << number(*row.order);
    s << '\n';
  }
  return s.str();
}

ConvergenceTable build_convergence_table(std::span<const double> ladder,
                                         std::span<const MaterialTensorSet> values,
                                         const MaterialTensorSet& reference, const std::string& ladder_name) {
  if (ladder.size() != values.size()) throw ArgumentError("build_convergence_table: size mismatch");
  ConvergenceTable table;
  table.ladder_name = ladder_name;
  table.reference = reference;
  const auto& coefs = table_coefficients();
  std::vector<std::vector<std::optional<double>>> orders;
  for (const auto& coef : coefs) {
    std::vector<double> errors;
    for (const auto& v : values) errors.push_back(std::abs(coefficient_value(v, coef) - coefficient_value(reference, coef)));
    orders.push_back(estimate_orders(ladder, errors));
  }
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    for (std::size_t c = 0; c < coefs.size(); ++c) {
      ConvergenceRow row;
      row.ladder_value = ladder[i];
      row.coefficient = coefs[c].name;
      row.value = coefficient_value(values[i], coefs[c]);
      row.reference = coefficient_value(reference, coefs[c]);
      row.abs_error = std::abs(row.value - row.reference);
      row.order = orders[c][i];
      table.rows.push_back(row);
    }
  }
  return table;
}

LaminateOracle laminate_oracle(const MaterialTensorSet& a, const MaterialTensorSet& b, double fraction,
                               int axis) {
  if (a.e.cwiseAbs().maxCoeff() != 0.0 || b.e.cwiseAbs().maxCoeff() != 0.0) {
    throw UsageError("laminate_oracle: phases must be decoupled (e = 0)");
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError("laminate_oracle: fraction outside [0, 1]");
  if (axis < 0 || axis > 2) throw ArgumentError("laminate_oracle: axis outside 0..2");
  const double f = fraction;
  const int in_plane = (axis + 1) % 3;
  auto series = [f](double x, double y) { return 1.0 / (f / x + (1.0 - f) / y); };
  auto parallel = [f](double x, double y) { return f * x + (1.0 - f) * y; };
  LaminateOracle o;
  o.eps_across = series(a.eps(axis, axis), b.eps(axis, axis));
  o.eps_in_plane = parallel(a.eps(in_plane, in_plane), b.eps(in_plane, in_plane));
  o.c_series = series(a.c(axis, axis), b.c(axis, axis));
  o.c_parallel = parallel(a.c(axis, axis), b.c(axis, axis));
  return o;
}

StructuredGrid ResolvedProblem::grid() const {
  if (!(epsilon > 0.0) || voxels_per_period < 2) {
    throw GeometryError("resolved problem: need epsilon > 0 and at least 2 voxels per period");
  }
  const double h = epsilon / voxels_per_period;
  std::array<int, 3> cells{};
  for (int a = 0; a < 3; ++a) {
    const double count = (upper[a] - lower[a]) / h;
    cells[a] = static_cast<int>(std::lround(count));
    if (cells[a] < 1 || std::abs(count - cells[a]) > 1e-6 * std::max(1.0, count)) {
      throw GeometryError("resolved problem: box edge is not a whole number of voxels");
    }
  }
  return StructuredGrid::box(lower, upper, cells);
}

long ResolvedProblem::estimated_dofs() const {
  const StructuredGrid g = grid();
  return static_cast<long>(DofMap::kDofsPerNode) * g.nodes_along(0) * g.nodes_along(1) * g.nodes_along(2);
}

CoupledField resolved_micro_solve(const ResolvedProblem& problem, const SolverOptions& options,
                                  SolveReport* report) {
  const long dofs_needed = problem.estimated_dofs();
  if (dofs_needed > problem.dof_budget) {
    throw BudgetError("resolved micro solve needs about " + std::to_string(dofs_needed) +
                          " DOFs, above the budget of " + std::to_string(problem.dof_budget),
                      dofs_needed);
  }
  VoxelCell pattern = problem.pattern;
  pattern.validate();
  pattern.edge_length = problem.epsilon;
  pattern.origin = Vec3::Zero();

  Discretization disc;
  disc.grid = problem.grid();
  std::map<int, int> slot;
  for (const auto& [id, m] : pattern.phase_materials) {
    slot[id] = static_cast<int>(disc.materials.size());
    disc.materials.push_back(m);
  }
  disc.element_material.resize(disc.grid.num_cells());
  for (int cell = 0; cell < disc.grid.num_cells(); ++cell) {
    disc.element_material[cell] = slot.at(periodic_phase_at(pattern, disc.grid.cell_center(cell)));
  }

  DofMap dofs(disc.grid.num_nodes());
  apply_boundary_conditions(disc.grid, problem.bc, dofs);
  const LinearSystem sys = assemble(disc, dofs, problem.body_load);
  return solve(sys, options, report).front();
}

double FieldNorms::h1_u() const { return std::hypot(l2_u, h1_semi_u); }
double FieldNorms::h1_phi() const { return std::hypot(l2_phi, h1_semi_phi); }

FieldNorms field_norms(const CoupledField& field) {
  const StructuredGrid& g = field.grid;
  const HexQuadrature q(g.spacing);
  FieldNorms n;
  for (int cell = 0; cell < g.num_cells(); ++cell) {
    for (int p = 0; p < 8; ++p) {
      const PointGradient pg = gradient_at(field, q, cell, p);
      n.l2_u += q.weight * pg.u.squaredNorm();
      n.l2_phi += q.weight * pg.phi * pg.phi;
      n.h1_semi_u += q.weight * pg.du.squaredNorm();
      n.h1_semi_phi += q.weight * pg.dphi.squaredNorm();
    }
  }
  n.l2_u = std::sqrt(n.l2_u);
  n.l2_phi = std::sqrt(n.l2_phi);
  n.h1_semi_u = std::sqrt(n.h1_semi_u);
  n.h1_semi_phi = std::sqrt(n.h1_semi_phi);
  return n;
}

FieldNorms corrector_error(const CoupledField& micro, const CoupledField& corrected) {
  const StructuredGrid& a = micro.grid;
  const StructuredGrid& b = corrected.grid;
  if (a.cells != b.cells || !a.spacing.isApprox(b.spacing) || (a.origin - b.origin).norm() > 1e-12 * a.spacing.norm() ||
      micro.values.rows() != corrected.values.rows()) {
    throw ArgumentError("corrector_error: fields live on different grids");
  }
  return field_norms(CoupledField{a, micro.values - corrected.values});
}

}  // namespace piezohom
