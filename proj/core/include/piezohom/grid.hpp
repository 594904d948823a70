#ifndef PIEZOHOM_GRID_HPP
#define PIEZOHOM_GRID_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "piezohom/materials.hpp"

namespace piezohom {

/// Axis-aligned box partitioned into uniform hexahedra. Nodes and cells are
/// numbered x-fastest.
struct StructuredGrid {
  std::array<int, 3> cells{1, 1, 1};
  Vec3 spacing = Vec3::Ones();
  Vec3 origin = Vec3::Zero();

  static StructuredGrid box(const Vec3& lower, const Vec3& upper, std::array<int, 3> cells);

  int nodes_along(int axis) const { return cells[axis] + 1; }
  int num_nodes() const { return nodes_along(0) * nodes_along(1) * nodes_along(2); }
  int num_cells() const { return cells[0] * cells[1] * cells[2]; }
  int node_index(int i, int j, int k) const {
    return i + nodes_along(0) * (j + nodes_along(1) * k);
  }
  int cell_index(int i, int j, int k) const { return i + cells[0] * (j + cells[1] * k); }
  std::array<int, 3> node_ijk(int node) const;
  std::array<int, 3> cell_ijk(int cell) const;
  Vec3 node_position(int node) const;
  Vec3 cell_center(int cell) const;
  Vec3 upper() const { return origin + spacing.cwiseProduct(Vec3(cells[0], cells[1], cells[2])); }
  double cell_volume() const { return spacing.prod(); }
  double volume() const { return cell_volume() * num_cells(); }
  /// Corner nodes of a cell; local node a sits at offsets (a & 1, (a >> 1) & 1, a >> 2).
  std::array<int, 8> cell_nodes(int cell) const;
  bool on_boundary(int node) const;
  void validate() const;
};

/// Cubic voxel grid carrying a phase id per voxel: a periodic unit cell, an
/// HMM sampling box, or a resolved micro domain.
struct VoxelCell {
  int n = 2;                  ///< voxels per edge
  double edge_length = 1.0;   ///< physical edge, m
  Vec3 origin = Vec3::Zero();
  std::vector<int> phase;     ///< n^3 ids, x-fastest
  std::map<int, MaterialTensorSet> phase_materials;
  /// Period of the medium this cell was cut from (0 when not a cut sample).
  double period = 0.0;
  /// Set by cut_sample when the box edge is not an integer multiple of the period.
  bool non_integer_period_multiple = false;

  StructuredGrid grid() const;
  double voxel_size() const { return edge_length / n; }
  int voxel(int i, int j, int k) const { return phase[i + n * (j + n * k)]; }
  double phase_fraction(int id) const;
  /// Throws GeometryError / ConfigurationError on inconsistent data.
  void validate() const;
};

inline constexpr int kMatrixPhase = 0;
inline constexpr int kFiberPhase = 1;

/// Unit period of the 1-3 composite: a fiber along axis 3 centered in the
/// cell. A voxel is fiber iff its center lies strictly inside radius
/// r_frac * edge_length in the (x1, x2) plane.
VoxelCell build_fiber_cell(int n, double r_frac, const MaterialTensorSet& fiber,
                           const MaterialTensorSet& matrix, double edge_length = 1.0);

/// Two-phase laminate with layers normal to `axis` (0-based). Phase 1 fills the
/// lower `fraction` of the cell along the axis, voxel-exact when fraction * n is integral.
VoxelCell build_laminate_cell(int n, double fraction, int axis, const MaterialTensorSet& phase_a,
                              const MaterialTensorSet& phase_b, double edge_length = 1.0);

VoxelCell build_homogeneous_cell(int n, const MaterialTensorSet& m, double edge_length = 1.0);

/// Phase of the periodic extension of `pattern` (one period, its origin
/// marking a period corner) at an absolute position.
int periodic_phase_at(const VoxelCell& pattern, const Vec3& x);

/// Sampling box of edge delta centered at `center`, cut from the periodic
/// extension of `pattern` (period = pattern.edge_length) with `n_sub` voxels
/// per period. Voxel phases are looked up at voxel centers in absolute
/// coordinates.
VoxelCell cut_sample(const VoxelCell& pattern, const Vec3& center, double delta, int n_sub);

/// Text format: "n edge_length" header, then n^3 phase ids, x-fastest.
VoxelCell read_voxel_pattern(std::istream& in, const std::map<int, MaterialTensorSet>& materials);
void write_voxel_pattern(std::ostream& out, const VoxelCell& cell);

/// Structured macro partition of the domain box.
struct MacroMesh {
  std::array<int, 3> divisions{1, 1, 1};
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Ones();

  StructuredGrid grid() const { return StructuredGrid::box(lower, upper, divisions); }
  void validate() const;
};

/// Degrees of freedom: 4 per node (u1, u2, u3, phi). A node is either its own
/// representative or a periodic slave of one master; each representative DOF
/// is free or Dirichlet-constrained.
class DofMap {
 public:
  static constexpr int kDofsPerNode = 4;
  static constexpr int kPotential = 3;

  explicit DofMap(int num_nodes);

  int num_nodes() const { return static_cast<int>(master_.size()); }
  /// Slaves `slave` to `master`. Throws ArgumentError if either side is
  /// already constrained in a way that would break the pairing invariants.
  void set_master(int slave, int master);
  /// Fixes one DOF of a representative node. Throws ArgumentError on a slave.
  void fix(int node, int component, double value);
  bool is_slave(int node) const { return master_[node] != node; }
  bool is_fixed(int node, int component) const {
    return fixed_[node * kDofsPerNode + component] != 0;
  }
  int representative(int node) const { return master_[node]; }
  int independent_nodes() const;

  /// Numbers free DOFs in representative-node order, (u1, u2, u3, phi) per node.
  void finalize();
  bool finalized() const { return finalized_; }
  int num_equations() const { return num_equations_; }
  /// Equation of the DOF after folding to the representative; -1 when fixed.
  int equation(int node, int component) const {
    return equation_[master_[node] * kDofsPerNode + component];
  }
  double fixed_value(int node, int component) const {
    return value_[master_[node] * kDofsPerNode + component];
  }
  bool equation_is_potential(int eq) const { return eq_component_[eq] == kPotential; }
  int equation_node(int eq) const { return eq_node_[eq]; }

 private:
  std::vector<int> master_;
  std::vector<std::uint8_t> fixed_;
  std::vector<double> value_;
  std::vector<int> equation_;
  std::vector<int> eq_node_;
  std::vector<std::uint8_t> eq_component_;
  int num_equations_ = 0;
  bool finalized_ = false;
};

/// Slaves every +face node to its -face image (edges and corners resolve to
/// the single master at index (i mod n, j mod n, k mod n)) and pins all four
/// fields at node 0 to remove the constant null space.
void apply_periodic_pairs(const StructuredGrid& grid, DofMap& dofs);

/// Fixes the selected components on every boundary node to zero.
void fix_boundary(const StructuredGrid& grid, DofMap& dofs, std::array<bool, 4> components);

}  // namespace piezohom

#endif  // PIEZOHOM_GRID_HPP
