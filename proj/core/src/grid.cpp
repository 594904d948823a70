#include "piezohom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "piezohom/errors.hpp"

namespace piezohom {

StructuredGrid StructuredGrid::box(const Vec3& lower, const Vec3& upper, std::array<int, 3> cells) {
  StructuredGrid g;
  g.cells = cells;
  g.origin = lower;
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1) throw GeometryError("structured grid needs at least one cell per axis");
    g.spacing[a] = (upper[a] - lower[a]) / cells[a];
  }
  g.validate();
  return g;
}

std::array<int, 3> StructuredGrid::node_ijk(int node) const {
  const int nx = nodes_along(0);
  const int ny = nodes_along(1);
  return {node % nx, (node / nx) % ny, node / (nx * ny)};
}

std::array<int, 3> StructuredGrid::cell_ijk(int cell) const {
  return {cell % cells[0], (cell / cells[0]) % cells[1], cell / (cells[0] * cells[1])};
}

Vec3 StructuredGrid::node_position(int node) const {
  const auto [i, j, k] = node_ijk(node);
  return origin + spacing.cwiseProduct(Vec3(i, j, k));
}

Vec3 StructuredGrid::cell_center(int cell) const {
  const auto [i, j, k] = cell_ijk(cell);
  return origin + spacing.cwiseProduct(Vec3(i + 0.5, j + 0.5, k + 0.5));
}

std::array<int, 8> StructuredGrid::cell_nodes(int cell) const {
  const auto [i, j, k] = cell_ijk(cell);
  std::array<int, 8> nodes{};
  for (int a = 0; a < 8; ++a) {
    nodes[a] = node_index(i + (a & 1), j + ((a >> 1) & 1), k + (a >> 2));
  }
  return nodes;
}

bool StructuredGrid::on_boundary(int node) const {
  const auto ijk = node_ijk(node);
  for (int a = 0; a < 3; ++a) {
    if (ijk[a] == 0 || ijk[a] == cells[a]) return true;
  }
  return false;
}

void StructuredGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1) throw GeometryError("structured grid needs at least one cell per axis");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw GeometryError("degenerate grid: non-positive spacing along axis " + std::to_string(a));
    }
  }
}

StructuredGrid VoxelCell::grid() const {
  StructuredGrid g;
  g.cells = {n, n, n};
  g.spacing = Vec3::Constant(voxel_size());
  g.origin = origin;
  return g;
}

double VoxelCell::phase_fraction(int id) const {
  if (phase.empty()) return 0.0;
  std::size_t count = 0;
  for (int p : phase) count += (p == id);
  return static_cast<double>(count) / static_cast<double>(phase.size());
}

void VoxelCell::validate() const {
  if (n < 2) throw GeometryError("voxel cell needs n >= 2, got " + std::to_string(n));
  if (!(edge_length > 0.0)) throw GeometryError("voxel cell edge length must be positive");
  if (phase.size() != static_cast<std::size_t>(n) * n * n) {
    throw GeometryError("voxel cell phase array has " + std::to_string(phase.size()) +
                        " entries, expected n^3 = " + std::to_string(n * n * n));
  }
  for (int p : phase) {
    if (!phase_materials.contains(p)) {
      throw ConfigurationError("voxel phase id " + std::to_string(p) + " has no registered material");
    }
  }
}

VoxelCell build_fiber_cell(int n, double r_frac, const MaterialTensorSet& fiber,
                           const MaterialTensorSet& matrix, double edge_length) {
  if (n < 2) throw ArgumentError("build_fiber_cell: n must be >= 2");
  if (r_frac < 0.0) throw GeometryError("build_fiber_cell: fiber radius must be non-negative");
  if (r_frac >= 0.5) {
    throw GeometryError("build_fiber_cell: r_frac >= 0.5 makes neighbouring fibers touch");
  }
  VoxelCell cell;
  cell.n = n;
  cell.edge_length = edge_length;
  cell.phase.assign(static_cast<std::size_t>(n) * n * n, kMatrixPhase);
  cell.phase_materials = {{kMatrixPhase, matrix}, {kFiberPhase, fiber}};
  const double r2 = r_frac * r_frac;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double dx = (i + 0.5) / n - 0.5;
        const double dy = (j + 0.5) / n - 0.5;
        if (dx * dx + dy * dy < r2) cell.phase[i + n * (j + n * k)] = kFiberPhase;
      }
  return cell;
}

VoxelCell build_laminate_cell(int n, double fraction, int axis, const MaterialTensorSet& phase_a,
                              const MaterialTensorSet& phase_b, double edge_length) {
  if (n < 2) throw ArgumentError("build_laminate_cell: n must be >= 2");
  if (axis < 0 || axis > 2) throw ArgumentError("build_laminate_cell: axis must be 0, 1 or 2");
  if (fraction < 0.0 || fraction > 1.0) {
    throw ArgumentError("build_laminate_cell: fraction must lie in [0, 1]");
  }
  VoxelCell cell;
  cell.n = n;
  cell.edge_length = edge_length;
  cell.phase.assign(static_cast<std::size_t>(n) * n * n, kMatrixPhase);
  cell.phase_materials = {{kMatrixPhase, phase_b}, {kFiberPhase, phase_a}};
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int along = std::array<int, 3>{i, j, k}[axis];
        if ((along + 0.5) / n < fraction) cell.phase[i + n * (j + n * k)] = kFiberPhase;
      }
  return cell;
}

VoxelCell build_homogeneous_cell(int n, const MaterialTensorSet& m, double edge_length) {
  if (n < 2) throw ArgumentError("build_homogeneous_cell: n must be >= 2");
  VoxelCell cell;
  cell.n = n;
  cell.edge_length = edge_length;
  cell.phase.assign(static_cast<std::size_t>(n) * n * n, kMatrixPhase);
  cell.phase_materials = {{kMatrixPhase, m}};
  return cell;
}

int periodic_phase_at(const VoxelCell& pattern, const Vec3& x) {
  std::array<int, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double t = (x[a] - pattern.origin[a]) / pattern.edge_length;
    double frac = t - std::floor(t);
    int v = static_cast<int>(std::floor(frac * pattern.n));
    idx[a] = std::clamp(v, 0, pattern.n - 1);
  }
  return pattern.voxel(idx[0], idx[1], idx[2]);
}

VoxelCell cut_sample(const VoxelCell& pattern, const Vec3& center, double delta, int n_sub) {
  if (!(delta > 0.0)) throw ArgumentError("cut_sample: delta must be positive");
  if (n_sub < 2) throw ArgumentError("cut_sample: n_sub must be >= 2");
  pattern.validate();

  const double period = pattern.edge_length;
  const double ratio = delta / period;
  const double whole = std::round(ratio);
  VoxelCell sample;
  sample.non_integer_period_multiple = std::abs(ratio - whole) > 1e-9 * std::max(1.0, ratio);
  sample.n = std::max(2, static_cast<int>(std::lround(ratio * n_sub)));
  sample.edge_length = delta;
  sample.origin = center - Vec3::Constant(0.5 * delta);
  sample.period = period;
  sample.phase_materials = pattern.phase_materials;
  sample.phase.resize(static_cast<std::size_t>(sample.n) * sample.n * sample.n);

  const double h = delta / sample.n;
  for (int k = 0; k < sample.n; ++k)
    for (int j = 0; j < sample.n; ++j)
      for (int i = 0; i < sample.n; ++i) {
        const Vec3 x = sample.origin + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
        sample.phase[i + sample.n * (j + sample.n * k)] = periodic_phase_at(pattern, x);
      }
  return sample;
}

VoxelCell read_voxel_pattern(std::istream& in, const std::map<int, MaterialTensorSet>& materials) {
  VoxelCell cell;
  if (!(in >> cell.n >> cell.edge_length)) {
    throw ConfigurationError("voxel pattern: expected header 'n edge_length'");
  }
  if (cell.n < 2) throw ConfigurationError("voxel pattern: n must be >= 2");
  const std::size_t count = static_cast<std::size_t>(cell.n) * cell.n * cell.n;
  cell.phase.resize(count);
  for (std::size_t v = 0; v < count; ++v) {
    if (!(in >> cell.phase[v])) {
      throw ConfigurationError("voxel pattern: expected " + std::to_string(count) +
                               " phase ids, read " + std::to_string(v));
    }
  }
  cell.phase_materials = materials;
  cell.validate();
  return cell;
}

void write_voxel_pattern(std::ostream& out, const VoxelCell& cell) {
  out << cell.n << ' ' << cell.edge_length << '\n';
  for (int k = 0; k < cell.n; ++k) {
    for (int j = 0; j < cell.n; ++j) {
      for (int i = 0; i < cell.n; ++i) out << (i ? " " : "") << cell.voxel(i, j, k);
      out << '\n';
    }
  }
}

void MacroMesh::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (divisions[a] < 1) throw GeometryError("macro mesh needs >= 1 division per axis");
    if (!(upper[a] > lower[a])) throw GeometryError("macro mesh box is empty along an axis");
  }
}

DofMap::DofMap(int num_nodes)
    : master_(num_nodes),
      fixed_(static_cast<std::size_t>(num_nodes) * kDofsPerNode, 0),
      value_(static_cast<std::size_t>(num_nodes) * kDofsPerNode, 0.0),
      equation_(static_cast<std::size_t>(num_nodes) * kDofsPerNode, -1) {
  for (int i = 0; i < num_nodes; ++i) master_[i] = i;
}

void DofMap::set_master(int slave, int master) {
  if (slave == master) return;
  if (is_slave(master)) throw ArgumentError("DofMap: master node is itself a slave");
  for (int c = 0; c < kDofsPerNode; ++c) {
    if (is_fixed(slave, c)) throw ArgumentError("DofMap: a Dirichlet node cannot become a slave");
  }
  if (is_slave(slave) && master_[slave] != master) {
    throw ArgumentError("DofMap: slave already has a different master");
  }
  master_[slave] = master;
  finalized_ = false;
}

void DofMap::fix(int node, int component, double value) {
  if (is_slave(node)) throw ArgumentError("DofMap: cannot fix a DOF of a periodic slave");
  fixed_[node * kDofsPerNode + component] = 1;
  value_[node * kDofsPerNode + component] = value;
  finalized_ = false;
}

int DofMap::independent_nodes() const {
  int count = 0;
  for (int i = 0; i < num_nodes(); ++i) count += !is_slave(i);
  return count;
}

void DofMap::finalize() {
  num_equations_ = 0;
  eq_node_.clear();
  eq_component_.clear();
  std::fill(equation_.begin(), equation_.end(), -1);
  for (int node = 0; node < num_nodes(); ++node) {
    if (is_slave(node)) continue;
    for (int c = 0; c < kDofsPerNode; ++c) {
      if (is_fixed(node, c)) continue;
      equation_[node * kDofsPerNode + c] = num_equations_++;
      eq_node_.push_back(node);
      eq_component_.push_back(static_cast<std::uint8_t>(c));
    }
  }
  finalized_ = true;
}

void apply_periodic_pairs(const StructuredGrid& grid, DofMap& dofs) {
  const auto& n = grid.cells;
  for (int node = 0; node < grid.num_nodes(); ++node) {
    const auto [i, j, k] = grid.node_ijk(node);
    const int master = grid.node_index(i % n[0], j % n[1], k % n[2]);
    if (master != node) dofs.set_master(node, master);
  }
  for (int c = 0; c < DofMap::kDofsPerNode; ++c) dofs.fix(0, c, 0.0);
}

void fix_boundary(const StructuredGrid& grid, DofMap& dofs, std::array<bool, 4> components) {
  for (int node = 0; node < grid.num_nodes(); ++node) {
    if (!grid.on_boundary(node)) continue;
    for (int c = 0; c < DofMap::kDofsPerNode; ++c) {
      if (components[c]) dofs.fix(node, c, 0.0);
    }
  }
}

}  // namespace piezohom
