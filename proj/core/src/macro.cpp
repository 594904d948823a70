#include "piezohom/macro.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "piezohom/errors.hpp"

namespace piezohom {

const char* face_name(Face face) {
  static constexpr const char* names[] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  return names[static_cast<int>(face)];
}

Face parse_face(const std::string& name) {
  for (Face f : kAllFaces) {
    if (name == face_name(f)) return f;
  }
  throw ArgumentError("unknown face '" + name + "' (expected xmin, xmax, ymin, ymax, zmin or zmax)");
}

void apply_boundary_conditions(const StructuredGrid& grid, const BoundaryConditions& bc, DofMap& dofs) {
  for (int node = 0; node < grid.num_nodes(); ++node) {
    const auto ijk = grid.node_ijk(node);
    int owner = -1;
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      const bool on_face = (f % 2 == 0) ? ijk[axis] == 0 : ijk[axis] == grid.cells[axis];
      if (on_face && (owner < 0 || bc[f].priority > bc[owner].priority)) owner = f;
    }
    if (owner < 0) continue;
    const Vec3 x = grid.node_position(node);
    const Vec3 u = bc[owner].displacement(x);
    for (int c = 0; c < 3; ++c) dofs.fix(node, c, u[c]);
    dofs.fix(node, DofMap::kPotential, bc[owner].potential(x));
  }
}

BoundaryConditions electrode_conditions(double voltage) {
  BoundaryConditions bc{};
  auto& hot = bc[static_cast<int>(Face::kXMax)];
  hot.phi0 = voltage;
  hot.priority = 1;
  return bc;
}

Discretization MacroProblem::discretization() const {
  const StructuredGrid grid = mesh.grid();
  if (element_tensors.size() == 1) return Discretization::uniform(grid, element_tensors.front());
  Discretization disc;
  disc.grid = grid;
  disc.materials = element_tensors;
  disc.element_material.resize(grid.num_cells());
  for (int cell = 0; cell < grid.num_cells(); ++cell) disc.element_material[cell] = cell;
  return disc;
}

void MacroProblem::validate() const {
  mesh.validate();
  const int cells = mesh.divisions[0] * mesh.divisions[1] * mesh.divisions[2];
  if (element_tensors.size() != 1 && static_cast<int>(element_tensors.size()) != cells) {
    throw ConfigurationError("macro problem: need one effective tensor set or one per element (" +
                             std::to_string(cells) + "), got " + std::to_string(element_tensors.size()));
  }
  if (!body_load.allFinite()) throw ConfigurationError("macro problem: body load is not finite");
}

CoupledField solve_macro(const MacroProblem& problem, const SolverOptions& options, SolveReport* report) {
  problem.validate();
  const Discretization disc = problem.discretization();
  DofMap dofs(disc.grid.num_nodes());
  apply_boundary_conditions(disc.grid, problem.bc, dofs);
  const LinearSystem sys = assemble(disc, dofs, problem.body_load);
  return solve(sys, options, report).front();
}

void write_vtk(std::ostream& out, const CoupledField& field, const std::string& title) {
  const StructuredGrid& g = field.grid;
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.nodes_along(0) << ' ' << g.nodes_along(1) << ' ' << g.nodes_along(2) << '\n';
  out << std::setprecision(9) << std::scientific;
  out << "ORIGIN " << g.origin[0] << ' ' << g.origin[1] << ' ' << g.origin[2] << '\n';
  out << "SPACING " << g.spacing[0] << ' ' << g.spacing[1] << ' ' << g.spacing[2] << '\n';
  out << "POINT_DATA " << g.num_nodes() << "\nVECTORS u double\n";
  for (int node = 0; node < g.num_nodes(); ++node) {
    out << field.values(node, 0) << ' ' << field.values(node, 1) << ' ' << field.values(node, 2) << '\n';
  }
  out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (int node = 0; node < g.num_nodes(); ++node) out << field.values(node, 3) << '\n';
}

}  // namespace piezohom
