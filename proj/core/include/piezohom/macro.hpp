#ifndef PIEZOHOM_MACRO_HPP
#define PIEZOHOM_MACRO_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "piezohom/fem.hpp"
#include "piezohom/grid.hpp"
#include "piezohom/materials.hpp"

namespace piezohom {

enum class Face { kXMin, kXMax, kYMin, kYMax, kZMin, kZMax };
inline constexpr std::array<Face, 6> kAllFaces{Face::kXMin, Face::kXMax, Face::kYMin,
                                               Face::kYMax, Face::kZMin, Face::kZMax};
const char* face_name(Face face);
/// Parses "xmin" .. "zmax"; throws ArgumentError otherwise.
Face parse_face(const std::string& name);

/// Affine Dirichlet data u = u0 + du x, phi = phi0 + dphi . x.
struct FaceCondition {
  Vec3 u0 = Vec3::Zero();
  Mat3 du = Mat3::Zero();
  double phi0 = 0.0;
  Vec3 dphi = Vec3::Zero();
  /// Nodes shared by several faces take the data of the face with the highest
  /// priority; ties go to the face listed first in kAllFaces.
  int priority = 0;

  Vec3 displacement(const Vec3& x) const { return u0 + du * x; }
  double potential(const Vec3& x) const { return phi0 + dphi.dot(x); }
};

using BoundaryConditions = std::array<FaceCondition, 6>;

/// Fixes all four fields on every boundary node of the grid.
void apply_boundary_conditions(const StructuredGrid& grid, const BoundaryConditions& bc, DofMap& dofs);

/// Clamped displacement everywhere, potential `voltage` on the x-max face and
/// zero on the others; the x-max face owns its edges.
BoundaryConditions electrode_conditions(double voltage);

struct MacroProblem {
  MacroMesh mesh;
  /// One set for a homogeneous macro medium or one per element.
  std::vector<MaterialTensorSet> element_tensors;
  Vec3 body_load = Vec3::Zero();  ///< N/m^3
  BoundaryConditions bc{};

  Discretization discretization() const;
  /// Throws ConfigurationError / GeometryError on inconsistent data.
  void validate() const;
};

CoupledField solve_macro(const MacroProblem& problem, const SolverOptions& options = {},
                         SolveReport* report = nullptr);

/// Legacy VTK ASCII structured-points file with point data u (vector) and phi.
void write_vtk(std::ostream& out, const CoupledField& field, const std::string& title);

}  // namespace piezohom

#endif  // PIEZOHOM_MACRO_HPP
