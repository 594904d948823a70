#include "piezohom/cells.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "piezohom/errors.hpp"

namespace piezohom {

namespace {

using Json = nlohmann::json;

bool case_active(CellPhysics physics, int index) {
  switch (physics) {
    case CellPhysics::kElasticOnly:
      return index < 6;
    case CellPhysics::kDielectricOnly:
      return index >= 6;
    case CellPhysics::kCoupled:
      break;
  }
  return true;
}

void clamp_reduced_field(const StructuredGrid& grid, DofMap& dofs, CellPhysics physics) {
  if (physics == CellPhysics::kCoupled) return;
  for (int node = 0; node < grid.num_nodes(); ++node) {
    if (dofs.is_slave(node)) continue;
    if (physics == CellPhysics::kElasticOnly) {
      dofs.fix(node, DofMap::kPotential, 0.0);
    } else {
      for (int c = 0; c < 3; ++c) dofs.fix(node, c, 0.0);
    }
  }
}

CellSolutionSet solve_cells(const VoxelCell& cell, const RouteTag& tag, const CellSolveOptions& options) {
  cell.validate();
  CellSolutionSet out;
  out.tag = tag;
  out.physics = options.physics;
  out.cell = cell;
  out.disc = Discretization::from_cell(cell);
  const StructuredGrid& grid = out.disc.grid;

  DofMap dofs(grid.num_nodes());
  if (tag.route == CellRoute::kHmm) {
    fix_boundary(grid, dofs, {true, true, true, true});
  } else {
    apply_periodic_pairs(grid, dofs);
  }
  clamp_reduced_field(grid, dofs, options.physics);

  std::vector<int> cases;
  std::vector<CoupledField> lifts;
  for (int c = 0; c < kLoadCases; ++c) {
    if (!case_active(options.physics, c)) continue;
    const MacroLoad load = load_case(c);
    cases.push_back(c);
    lifts.push_back(CoupledField::affine(grid, Vec3::Zero(), load.du, 0.0, load.dphi));
  }

  const LinearSystem sys = assemble(out.disc, dofs, Vec3::Zero(), lifts);
  std::vector<CoupledField> fields = solve(sys, options.solver, &out.report);

  out.total.assign(kLoadCases, CoupledField{grid, NodalValues()});
  out.fluctuation.assign(kLoadCases, CoupledField{grid, NodalValues()});
  for (std::size_t r = 0; r < cases.size(); ++r) {
    CoupledField fluct{grid, fields[r].values - lifts[r].values};
    if (tag.route == CellRoute::kPeriodic) {
      for (int comp = 0; comp < DofMap::kDofsPerNode; ++comp) {
        fluct.values.col(comp).array() -= field_mean(fluct, comp);
      }
      fields[r].values = lifts[r].values + fluct.values;
    }
    out.total[cases[r]] = std::move(fields[r]);
    out.fluctuation[cases[r]] = std::move(fluct);
  }
  return out;
}

EffectiveTensorSet effective_from(const CellSolutionSet& sols) {
  EffectiveTensorSet eff;
  eff.tag = sols.tag;
  eff.resolution = sols.cell.n;
  eff.physics = sols.physics;
  MaterialTensorSet& m = eff.tensors;
  for (int c = 0; c < kLoadCases; ++c) {
    if (!sols.has_case(c)) continue;
    const FluxAverage avg = average_fluxes(sols.disc, sols.total[c]);
    if (c < 6) {
      if (sols.physics != CellPhysics::kDielectricOnly) m.c.col(c) = avg.stress;
      if (sols.physics == CellPhysics::kCoupled) m.e.col(c) = avg.electric_displacement;
    } else {
      const int l = c - 6;
      if (sols.physics != CellPhysics::kElasticOnly) m.eps.col(l) = -avg.electric_displacement;
      if (sols.physics == CellPhysics::kCoupled) eff.e_dual.row(l) = avg.stress.transpose();
    }
  }
  if (sols.physics == CellPhysics::kCoupled) {
    const double scale = std::max(m.e.cwiseAbs().maxCoeff(),
                                  std::sqrt(m.c.cwiseAbs().maxCoeff() * m.eps.cwiseAbs().maxCoeff()));
    const double diff = (m.e - eff.e_dual).cwiseAbs().maxCoeff();
    eff.dual_discrepancy = scale > 0.0 ? diff / scale : diff;
  }
  return eff;
}

const char* route_name(CellRoute route) { return route == CellRoute::kHmm ? "HMM" : "PERIODIC"; }

const char* physics_name(CellPhysics physics) {
  switch (physics) {
    case CellPhysics::kElasticOnly:
      return "elastic-only";
    case CellPhysics::kDielectricOnly:
      return "dielectric-only";
    case CellPhysics::kCoupled:
      break;
  }
  return "coupled";
}

template <class M>
Json matrix_json(const M& a) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <class M>
void matrix_from_json(const Json& j, M& a, const char* key) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != a.rows()) {
    throw ValidationError(std::string("tensor JSON: '") + key + "' has the wrong row count");
  }
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != a.cols()) {
      throw ValidationError(std::string("tensor JSON: '") + key + "' has the wrong column count");
    }
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = row[c].get<double>();
  }
}

}  // namespace

std::string RouteTag::label() const {
  if (route == CellRoute::kPeriodic) return "PERIODIC";
  std::ostringstream s;
  s << "HMM(delta/eps=" << delta_over_eps << ", x=(" << sample_point[0] << ", " << sample_point[1]
    << ", " << sample_point[2] << "))";
  return s.str();
}

MacroLoad load_case(int index) {
  if (index < 0 || index >= kLoadCases) throw ArgumentError("load_case: index outside 0..8");
  MacroLoad load;
  if (index < 6) {
    const auto [k, l] = voigt_pair(index);
    load.du(k, l) = 1.0;
  } else {
    load.dphi[index - 6] = 1.0;
  }
  return load;
}

Eigen::Matrix<double, kLoadCases, 1> load_amplitudes(const Mat3& du, const Vec3& dphi) {
  Eigen::Matrix<double, kLoadCases, 1> a;
  a << engineering_strain(du), dphi;
  return a;
}

double field_mean(const CoupledField& field, int component) {
  const StructuredGrid& grid = field.grid;
  double sum = 0.0;
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    for (int node : grid.cell_nodes(cell)) sum += field.values(node, component);
  }
  return sum / (8.0 * grid.num_cells());
}

CellSolutionSet solve_hmm_cells(const VoxelCell& sample, const CellSolveOptions& options) {
  RouteTag tag;
  tag.route = CellRoute::kHmm;
  tag.delta_over_eps = sample.period > 0.0 ? sample.edge_length / sample.period : 0.0;
  tag.sample_point = sample.origin + Vec3::Constant(0.5 * sample.edge_length);
  return solve_cells(sample, tag, options);
}

CellSolutionSet solve_periodic_cells(const VoxelCell& unit, const CellSolveOptions& options) {
  RouteTag tag;
  tag.route = CellRoute::kPeriodic;
  return solve_cells(unit, tag, options);
}

EffectiveTensorSet hmm_effective(const CellSolutionSet& sols) {
  if (sols.tag.route != CellRoute::kHmm) {
    throw UsageError("hmm_effective: solutions come from the periodic route");
  }
  return effective_from(sols);
}

EffectiveTensorSet homogenized_effective(const CellSolutionSet& sols) {
  if (sols.tag.route != CellRoute::kPeriodic) {
    throw UsageError("homogenized_effective: solutions come from the HMM route");
  }
  return effective_from(sols);
}

std::string to_json(const EffectiveTensorSet& set) {
  Json j;
  j["route"] = route_name(set.tag.route);
  j["physics"] = physics_name(set.physics);
  j["resolution"] = set.resolution;
  if (set.tag.route == CellRoute::kHmm) {
    j["delta_over_eps"] = set.tag.delta_over_eps;
    j["sample_point"] = {set.tag.sample_point[0], set.tag.sample_point[1], set.tag.sample_point[2]};
  }
  j["c"] = matrix_json(set.tensors.c);
  j["e"] = matrix_json(set.tensors.e);
  j["eps"] = matrix_json(set.tensors.eps);
  j["e_dual"] = matrix_json(set.e_dual);
  j["dual_discrepancy"] = set.dual_discrepancy;
  return j.dump(2);
}

EffectiveTensorSet effective_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& err) {
    throw ValidationError(std::string("tensor JSON: ") + err.what());
  }
  EffectiveTensorSet set;
  try {
    const std::string route = j.at("route").get<std::string>();
    if (route == "HMM") {
      set.tag.route = CellRoute::kHmm;
      set.tag.delta_over_eps = j.at("delta_over_eps").get<double>();
      const auto& x = j.at("sample_point");
      set.tag.sample_point = Vec3(x.at(0).get<double>(), x.at(1).get<double>(), x.at(2).get<double>());
    } else if (route == "PERIODIC") {
      set.tag.route = CellRoute::kPeriodic;
    } else {
      throw ValidationError("tensor JSON: unknown route '" + route + "'");
    }
    const std::string physics = j.value("physics", std::string("coupled"));
    if (physics == "coupled") {
      set.physics = CellPhysics::kCoupled;
    } else if (physics == "elastic-only") {
      set.physics = CellPhysics::kElasticOnly;
    } else if (physics == "dielectric-only") {
      set.physics = CellPhysics::kDielectricOnly;
    } else {
      throw ValidationError("tensor JSON: unknown physics '" + physics + "'");
    }
    set.resolution = j.at("resolution").get<int>();
    matrix_from_json(j.at("c"), set.tensors.c, "c");
    matrix_from_json(j.at("e"), set.tensors.e, "e");
    matrix_from_json(j.at("eps"), set.tensors.eps, "eps");
    if (j.contains("e_dual")) matrix_from_json(j.at("e_dual"), set.e_dual, "e_dual");
    set.dual_discrepancy = j.value("dual_discrepancy", 0.0);
  } catch (const Json::exception& err) {
    throw ValidationError(std::string("tensor JSON: ") + err.what());
  }
  return set;
}

CoupledField first_order_corrector(const CoupledField& macro, const CellSolutionSet& cells,
                                   double epsilon, const StructuredGrid& micro) {
  if (cells.tag.route != CellRoute::kPeriodic || cells.physics != CellPhysics::kCoupled) {
    throw UsageError("first_order_corrector: needs coupled periodic cell solutions");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("first_order_corrector: epsilon must be positive");
  const StructuredGrid& coarse = macro.grid;
  const int n = cells.cell.n;
  std::array<int, 3> ratio{};
  for (int a = 0; a < 3; ++a) {
    const double tol = 1e-9 * std::max(1.0, std::abs(coarse.upper()[a]));
    if (micro.cells[a] % coarse.cells[a] != 0 || std::abs(micro.origin[a] - coarse.origin[a]) > tol ||
        std::abs(micro.upper()[a] - coarse.upper()[a]) > tol) {
      throw ArgumentError("first_order_corrector: micro grid does not subdivide the macro mesh");
    }
    ratio[a] = micro.cells[a] / coarse.cells[a];
    const double per_period = epsilon / micro.spacing[a];
    const double offset = micro.origin[a] / micro.spacing[a];
    if (std::abs(per_period - n) > 1e-6 || std::abs(offset - std::round(offset)) > 1e-6) {
      throw ArgumentError("first_order_corrector: micro spacing must be epsilon / " + std::to_string(n) +
                          " on the period lattice");
    }
  }

  // Centroid gradients of the macro field, one per macro element.
  const HexQuadrature q(coarse.spacing);
  std::vector<Eigen::Matrix<double, kLoadCases, 1>> amplitude(coarse.num_cells());
  for (int cell = 0; cell < coarse.num_cells(); ++cell) {
    Mat3 du = Mat3::Zero();
    Vec3 dphi = Vec3::Zero();
    for (int p = 0; p < 8; ++p) {
      const PointGradient g = gradient_at(macro, q, cell, p);
      du += g.du / 8.0;
      dphi += g.dphi / 8.0;
    }
    amplitude[cell] = load_amplitudes(du, dphi);
  }

  const StructuredGrid& unit = cells.disc.grid;
  const double scale = epsilon / cells.cell.edge_length;
  CoupledField out = CoupledField::zeros(micro);
  for (int node = 0; node < micro.num_nodes(); ++node) {
    const auto ijk = micro.node_ijk(node);

    std::array<int, 3> host{};
    Vec3 local;
    std::array<std::array<int, 2>, 3> share{};
    std::array<int, 3> share_count{};
    std::array<int, 3> unit_index{};
    for (int a = 0; a < 3; ++a) {
      host[a] = std::min(ijk[a] / ratio[a], coarse.cells[a] - 1);
      local[a] = static_cast<double>(ijk[a] - host[a] * ratio[a]) / ratio[a];
      share_count[a] = 0;
      if (ijk[a] % ratio[a] == 0 && ijk[a] > 0) share[a][share_count[a]++] = ijk[a] / ratio[a] - 1;
      if (ijk[a] / ratio[a] < coarse.cells[a]) share[a][share_count[a]++] = ijk[a] / ratio[a];
      const long lattice = std::lround(micro.origin[a] / micro.spacing[a]) + ijk[a];
      unit_index[a] = static_cast<int>(((lattice % n) + n) % n);
    }

    // Trilinear interpolation of the macro field inside its host element.
    const auto corners = coarse.cell_nodes(coarse.cell_index(host[0], host[1], host[2]));
    Eigen::Matrix<double, 1, 4> value = Eigen::Matrix<double, 1, 4>::Zero();
    for (int c = 0; c < 8; ++c) {
      const double w = ((c & 1) ? local[0] : 1.0 - local[0]) * (((c >> 1) & 1) ? local[1] : 1.0 - local[1]) *
                       ((c >> 2) ? local[2] : 1.0 - local[2]);
      value += w * macro.values.row(corners[c]);
    }

    Eigen::Matrix<double, kLoadCases, 1> amp = Eigen::Matrix<double, kLoadCases, 1>::Zero();
    int count = 0;
    for (int x = 0; x < share_count[0]; ++x)
      for (int y = 0; y < share_count[1]; ++y)
        for (int z = 0; z < share_count[2]; ++z) {
          amp += amplitude[coarse.cell_index(share[0][x], share[1][y], share[2][z])];
          ++count;
        }
    amp /= count;

    const int unit_node = unit.node_index(unit_index[0], unit_index[1], unit_index[2]);
    for (int c = 0; c < kLoadCases; ++c) {
      value += scale * amp[c] * cells.fluctuation[c].values.row(unit_node);
    }
    out.values.row(node) = value;
  }
  return out;
}

}  // namespace piezohom
