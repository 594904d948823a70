#include "piezohom/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "piezohom/errors.hpp"

namespace piezohom {

CoupledField CoupledField::affine(const StructuredGrid& grid, const Vec3& u0, const Mat3& u_gradient,
                                  double phi0, const Vec3& phi_gradient) {
  CoupledField f = zeros(grid);
  for (int node = 0; node < grid.num_nodes(); ++node) {
    const Vec3 x = grid.node_position(node);
    f.values.row(node).head<3>() = (u0 + u_gradient * x).transpose();
    f.values(node, 3) = phi0 + phi_gradient.dot(x);
  }
  return f;
}

Discretization Discretization::from_cell(const VoxelCell& cell) {
  cell.validate();
  Discretization d;
  d.grid = cell.grid();
  std::map<int, int> slot;
  for (const auto& [id, m] : cell.phase_materials) {
    slot[id] = static_cast<int>(d.materials.size());
    d.materials.push_back(m);
  }
  d.element_material.resize(cell.phase.size());
  for (std::size_t v = 0; v < cell.phase.size(); ++v) d.element_material[v] = slot.at(cell.phase[v]);
  return d;
}

Discretization Discretization::uniform(const StructuredGrid& grid, const MaterialTensorSet& m) {
  Discretization d;
  d.grid = grid;
  d.materials = {m};
  d.element_material.assign(grid.num_cells(), 0);
  return d;
}

void Discretization::validate() const {
  grid.validate();
  if (element_material.size() != static_cast<std::size_t>(grid.num_cells())) {
    throw ConfigurationError("discretization: one material index per cell required");
  }
  for (int id : element_material) {
    if (id < 0 || id >= static_cast<int>(materials.size())) {
      throw ConfigurationError("discretization: cell refers to unregistered material " +
                               std::to_string(id));
    }
  }
}

HexQuadrature::HexQuadrature(const Vec3& size) {
  if (!(size.minCoeff() > 0.0) || !size.allFinite()) {
    throw GeometryError("degenerate voxel: edge lengths must be positive");
  }
  const double g = 1.0 / std::sqrt(3.0);
  const std::array<double, 2> xi{0.5 * (1.0 - g), 0.5 * (1.0 + g)};  // on [0, 1]
  weight = 0.125 * size.prod();
  for (int p = 0; p < 8; ++p) {
    const std::array<double, 3> t{xi[p & 1], xi[(p >> 1) & 1], xi[p >> 2]};
    for (int a = 0; a < 8; ++a) {
      std::array<double, 3> shape{};
      std::array<double, 3> slope{};
      for (int d = 0; d < 3; ++d) {
        const int bit = (a >> d) & 1;
        shape[d] = bit ? t[d] : 1.0 - t[d];
        slope[d] = (bit ? 1.0 : -1.0) / size[d];
      }
      values[p](0, a) = shape[0] * shape[1] * shape[2];
      gradients[p](0, a) = slope[0] * shape[1] * shape[2];
      gradients[p](1, a) = shape[0] * slope[1] * shape[2];
      gradients[p](2, a) = shape[0] * shape[1] * slope[2];
    }
  }
}

Eigen::Matrix<double, 6, 24> strain_operator(const Eigen::Matrix<double, 3, 8>& dn) {
  Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
  for (int a = 0; a < 8; ++a) {
    const int c = 3 * a;
    b(0, c + 0) = dn(0, a);
    b(1, c + 1) = dn(1, a);
    b(2, c + 2) = dn(2, a);
    b(3, c + 1) = dn(2, a);
    b(3, c + 2) = dn(1, a);
    b(4, c + 0) = dn(2, a);
    b(4, c + 2) = dn(0, a);
    b(5, c + 0) = dn(1, a);
    b(5, c + 1) = dn(0, a);
  }
  return b;
}

Eigen::Matrix<double, 24, 24> ElementMatrix::k_uu() const {
  Eigen::Matrix<double, 24, 24> k;
  for (int a = 0; a < 8; ++a)
    for (int i = 0; i < 3; ++i)
      for (int b = 0; b < 8; ++b)
        for (int j = 0; j < 3; ++j) k(3 * a + i, 3 * b + j) = full(4 * a + i, 4 * b + j);
  return k;
}

Eigen::Matrix<double, 24, 8> ElementMatrix::k_uphi() const {
  Eigen::Matrix<double, 24, 8> k;
  for (int a = 0; a < 8; ++a)
    for (int i = 0; i < 3; ++i)
      for (int b = 0; b < 8; ++b) k(3 * a + i, b) = full(4 * a + i, 4 * b + 3);
  return k;
}

Eigen::Matrix<double, 8, 8> ElementMatrix::k_phiphi() const {
  Eigen::Matrix<double, 8, 8> k;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) k(a, b) = -full(4 * a + 3, 4 * b + 3);
  return k;
}

ElementMatrix element_matrices(const Vec3& size, const MaterialTensorSet& m) {
  const HexQuadrature q(size);
  Eigen::Matrix<double, 24, 24> kuu = Eigen::Matrix<double, 24, 24>::Zero();
  Eigen::Matrix<double, 24, 8> kup = Eigen::Matrix<double, 24, 8>::Zero();
  Eigen::Matrix<double, 8, 8> kpp = Eigen::Matrix<double, 8, 8>::Zero();
  for (int p = 0; p < 8; ++p) {
    const auto b = strain_operator(q.gradients[p]);
    const auto& g = q.gradients[p];
    kuu.noalias() += q.weight * b.transpose() * m.c * b;
    kup.noalias() += q.weight * b.transpose() * m.e.transpose() * g;
    kpp.noalias() += q.weight * g.transpose() * m.eps * g;
  }
  ElementMatrix em;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) em.full(4 * a + i, 4 * b + j) = kuu(3 * a + i, 3 * b + j);
        em.full(4 * a + i, 4 * b + 3) = kup(3 * a + i, b);
        em.full(4 * b + 3, 4 * a + i) = kup(3 * a + i, b);
      }
      em.full(4 * a + 3, 4 * b + 3) = -kpp(a, b);
    }
  }
  return em;
}

std::vector<std::uint8_t> LinearSystem::potential_mask() const {
  std::vector<std::uint8_t> mask(dofs.num_equations());
  for (int eq = 0; eq < dofs.num_equations(); ++eq) mask[eq] = dofs.equation_is_potential(eq);
  return mask;
}

CoupledField dirichlet_lift(const StructuredGrid& grid, const DofMap& dofs) {
  CoupledField f = CoupledField::zeros(grid);
  for (int node = 0; node < grid.num_nodes(); ++node) {
    const int rep = dofs.representative(node);
    for (int c = 0; c < DofMap::kDofsPerNode; ++c) {
      if (dofs.is_fixed(rep, c)) f.values(node, c) = dofs.fixed_value(node, c);
    }
  }
  return f;
}

LinearSystem assemble(const Discretization& disc, const DofMap& dofs_in, const Vec3& body_load,
                      std::span<const CoupledField> lifts) {
  disc.validate();
  const StructuredGrid& grid = disc.grid;
  if (dofs_in.num_nodes() != grid.num_nodes()) {
    throw ConfigurationError("assemble: DofMap node count does not match the grid");
  }

  LinearSystem sys;
  sys.grid = grid;
  sys.dofs = dofs_in;
  if (!sys.dofs.finalized()) sys.dofs.finalize();
  const DofMap& dofs = sys.dofs;
  if (lifts.empty()) {
    sys.lifts.push_back(dirichlet_lift(grid, dofs));
  } else {
    sys.lifts.assign(lifts.begin(), lifts.end());
  }
  for (const auto& lift : sys.lifts) {
    if (lift.values.rows() != grid.num_nodes()) {
      throw ConfigurationError("assemble: lift field does not match the grid");
    }
  }

  const int num_eq = dofs.num_equations();
  const int num_nodes = grid.num_nodes();
  const int num_cells = grid.num_cells();

  // Node-level adjacency between representative nodes.
  std::vector<std::vector<int>> adjacency(num_nodes);
  for (int cell = 0; cell < num_cells; ++cell) {
    const auto nodes = grid.cell_nodes(cell);
    std::array<int, 8> reps{};
    for (int a = 0; a < 8; ++a) reps[a] = dofs.representative(nodes[a]);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) adjacency[reps[a]].push_back(reps[b]);
  }
  for (auto& adj : adjacency) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }

  // Column pattern: equation numbers grow with (node, component), so walking the
  // sorted node adjacency yields sorted row indices.
  std::vector<int> outer(num_eq + 1, 0);
  for (int eq = 0; eq < num_eq; ++eq) {
    int count = 0;
    for (int b : adjacency[dofs.equation_node(eq)])
      for (int c = 0; c < DofMap::kDofsPerNode; ++c) count += dofs.equation(b, c) >= 0;
    outer[eq + 1] = outer[eq] + count;
  }
  SparseMatrix k(num_eq, num_eq);
  k.resizeNonZeros(outer[num_eq]);
  std::copy(outer.begin(), outer.end(), k.outerIndexPtr());
  {
    int* inner = k.innerIndexPtr();
    for (int eq = 0; eq < num_eq; ++eq) {
      int pos = outer[eq];
      for (int b : adjacency[dofs.equation_node(eq)])
        for (int c = 0; c < DofMap::kDofsPerNode; ++c) {
          const int row = dofs.equation(b, c);
          if (row >= 0) inner[pos++] = row;
        }
    }
    std::fill(k.valuePtr(), k.valuePtr() + outer[num_eq], 0.0);
  }
  adjacency.clear();
  adjacency.shrink_to_fit();

  std::vector<ElementMatrix> element_cache;
  element_cache.reserve(disc.materials.size());
  for (const auto& m : disc.materials) element_cache.push_back(element_matrices(grid.spacing, m));

  const int num_rhs = static_cast<int>(sys.lifts.size());
  sys.rhs = Eigen::MatrixXd::Zero(num_eq, num_rhs);
  const double nodal_body = grid.cell_volume() / 8.0;

  const int* inner = k.innerIndexPtr();
  double* values = k.valuePtr();
  Eigen::Matrix<double, 32, 1> lift_local;
  for (int cell = 0; cell < num_cells; ++cell) {
    const auto nodes = grid.cell_nodes(cell);
    const auto& ke = element_cache[disc.element_material[cell]].full;
    std::array<int, 32> eq{};
    for (int a = 0; a < 8; ++a)
      for (int c = 0; c < 4; ++c) eq[4 * a + c] = dofs.equation(nodes[a], c);

    for (int q = 0; q < 32; ++q) {
      const int col = eq[q];
      if (col < 0) continue;
      const int* begin = inner + outer[col];
      const int* end = inner + outer[col + 1];
      for (int p = 0; p < 32; ++p) {
        const int row = eq[p];
        if (row < 0) continue;
        const int* it = std::lower_bound(begin, end, row);
        values[it - inner] += ke(p, q);
      }
    }

    for (int r = 0; r < num_rhs; ++r) {
      for (int a = 0; a < 8; ++a) lift_local.segment<4>(4 * a) = sys.lifts[r].values.row(nodes[a]).transpose();
      const Eigen::Matrix<double, 32, 1> fe = -(ke * lift_local);
      for (int p = 0; p < 32; ++p) {
        if (eq[p] < 0) continue;
        double value = fe[p];
        if (p % 4 != 3) value += body_load[p % 4] * nodal_body;
        sys.rhs(eq[p], r) += value;
      }
    }
  }
  sys.matrix = std::move(k);
  return sys;
}

CoupledField reconstruct(const StructuredGrid& grid, const DofMap& dofs,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const CoupledField& lift) {
  CoupledField f = lift;
  for (int node = 0; node < grid.num_nodes(); ++node) {
    for (int c = 0; c < DofMap::kDofsPerNode; ++c) {
      const int eq = dofs.equation(node, c);
      if (eq >= 0) f.values(node, c) += x[eq];
    }
  }
  return f;
}

std::vector<CoupledField> solve(const LinearSystem& sys, const SolverOptions& options,
                                SolveReport* report) {
  const auto mask = sys.potential_mask();
  const Eigen::MatrixXd x = solve_equations(sys.matrix, sys.rhs, mask, options, report);
  std::vector<CoupledField> fields;
  fields.reserve(sys.lifts.size());
  for (std::size_t r = 0; r < sys.lifts.size(); ++r) {
    fields.push_back(reconstruct(sys.grid, sys.dofs, x.col(static_cast<Eigen::Index>(r)), sys.lifts[r]));
  }
  return fields;
}

PointGradient gradient_at(const CoupledField& field, const HexQuadrature& q, int cell, int point) {
  const auto nodes = field.grid.cell_nodes(cell);
  Eigen::Matrix<double, 8, 4> local;
  for (int a = 0; a < 8; ++a) local.row(a) = field.values.row(nodes[a]);
  const Eigen::Matrix<double, 3, 4> grad = q.gradients[point] * local;
  const Eigen::Matrix<double, 1, 4> val = q.values[point] * local;
  PointGradient g;
  g.du = grad.leftCols<3>().transpose();
  g.dphi = grad.col(3);
  g.u = val.head<3>().transpose();
  g.phi = val(3);
  return g;
}

FluxAverage average_fluxes(const Discretization& disc, const CoupledField& field) {
  disc.validate();
  const HexQuadrature q(disc.grid.spacing);
  FluxAverage avg;
  for (int cell = 0; cell < disc.grid.num_cells(); ++cell) {
    const MaterialTensorSet& m = disc.material_of(cell);
    for (int p = 0; p < 8; ++p) {
      const PointGradient g = gradient_at(field, q, cell, p);
      const Vec6 strain = engineering_strain(g.du);
      avg.stress += q.weight * (m.c * strain + m.e.transpose() * g.dphi);
      avg.electric_displacement += q.weight * (m.e * strain - m.eps * g.dphi);
    }
  }
  const double volume = disc.grid.volume();
  avg.stress /= volume;
  avg.electric_displacement /= volume;
  return avg;
}

}  // namespace piezohom
