#include "piezohom/pipeline.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "piezohom/errors.hpp"

namespace piezohom {

namespace {

template <class Fn>
auto staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const SolverError& err) {
    throw SolverError(stage + ": " + err.what(), err.residual());
  }
}

void report(const PipelineConfig& config, const std::string& message) {
  if (config.progress) config.progress(message);
}

double relative_error_sum(const TensorErrors& e, const MaterialTensorSet& ref) {
  auto rel = [](double err, double norm) { return norm > 0.0 ? err / norm : err; };
  return rel(e.e_c, ref.c.norm()) + rel(e.e_e, ref.e.norm()) + rel(e.e_d, ref.eps.norm());
}

}  // namespace

std::vector<int> group_by_period_offset(const StructuredGrid& macro, double epsilon,
                                        const Vec3& lattice_origin, std::vector<Vec3>* representatives) {
  if (!(epsilon > 0.0)) throw ArgumentError("group_by_period_offset: epsilon must be positive");
  std::map<std::array<long long, 3>, int> index;
  std::vector<int> element_sample(macro.num_cells());
  if (representatives) representatives->clear();
  for (int cell = 0; cell < macro.num_cells(); ++cell) {
    const Vec3 x = macro.cell_center(cell);
    std::array<long long, 3> key{};
    for (int a = 0; a < 3; ++a) {
      double y = std::fmod((x[a] - lattice_origin[a]) / epsilon, 1.0);
      if (y < 0.0) y += 1.0;
      key[a] = std::llround(y * 1e9) % 1'000'000'000LL;
    }
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(index.size()));
    if (inserted && representatives) representatives->push_back(x);
    element_sample[cell] = it->second;
  }
  return element_sample;
}

PipelineResult run_hmm_pipeline(const PipelineConfig& config) {
  if (!(config.epsilon > 0.0)) throw ConfigurationError("pipeline: epsilon must be positive");
  if (config.delta_over_eps.empty()) throw ConfigurationError("pipeline: empty delta ladder");
  for (double d : config.delta_over_eps) {
    if (!(d > 0.0)) throw ConfigurationError("pipeline: delta values must be positive");
  }
  VoxelCell pattern = config.pattern;
  pattern.edge_length = config.epsilon;
  pattern.origin = config.lattice_origin;
  pattern.validate();
  const int n_sub = pattern.n;

  PipelineResult result;
  report(config, "step 1: periodic cell problems");
  result.homogenized = staged("step 1 (periodic cells)", [&] {
    return homogenized_effective(solve_periodic_cells(pattern, config.cell_options));
  });
  const MaterialTensorSet& reference = result.homogenized.tensors;

  MacroProblem macro = config.macro;
  if (config.solve_macro) {
    report(config, "step 2: macro solve with homogenized tensors");
    macro.element_tensors = {reference};
    result.macro_homogenized =
        staged("step 2 (macro, homogenized)", [&] { return solve_macro(macro, config.macro_solver); });
  }

  const StructuredGrid macro_grid = config.macro.mesh.grid();
  std::vector<Vec3> centers;
  const std::vector<int> element_sample = group_by_period_offset(macro_grid, config.epsilon, config.lattice_origin, &centers);

  std::vector<MaterialTensorSet> table_values;
  for (double ratio : config.delta_over_eps) {
    DeltaResult dr;
    dr.delta_over_eps = ratio;
    dr.element_sample = element_sample;
    std::ostringstream stage;
    stage << "step 3 (HMM cells, delta/eps=" << ratio << ")";
    report(config, stage.str() + ": " + std::to_string(centers.size()) + " distinct sample(s)");
    double worst = -1.0;
    for (std::size_t s = 0; s < centers.size(); ++s) {
      const VoxelCell sample = cut_sample(pattern, centers[s], ratio * config.epsilon, n_sub);
      EffectiveTensorSet eff = staged(stage.str(), [&] {
        return hmm_effective(solve_hmm_cells(sample, config.cell_options));
      });
      const TensorErrors err = tensor_errors(eff.tensors, reference);
      dr.errors.e_c = std::max(dr.errors.e_c, err.e_c);
      dr.errors.e_e = std::max(dr.errors.e_e, err.e_e);
      dr.errors.e_d = std::max(dr.errors.e_d, err.e_d);
      const double combined = relative_error_sum(err, reference);
      if (combined > worst) {
        worst = combined;
        dr.worst_sample = static_cast<int>(s);
      }
      dr.samples.push_back(std::move(eff));
    }
    table_values.push_back(dr.samples[dr.worst_sample].tensors);

    if (config.solve_macro) {
      std::ostringstream stage4;
      stage4 << "step 4 (macro, HMM tensors, delta/eps=" << ratio << ")";
      report(config, stage4.str());
      if (dr.samples.size() == 1) {
        macro.element_tensors = {dr.samples.front().tensors};
      } else {
        macro.element_tensors.clear();
        for (int cell = 0; cell < macro_grid.num_cells(); ++cell) {
          macro.element_tensors.push_back(dr.samples[element_sample[cell]].tensors);
        }
      }
      dr.macro = staged(stage4.str(), [&] { return solve_macro(macro, config.macro_solver); });
      dr.macro_difference = corrector_error(*dr.macro, *result.macro_homogenized);
    }
    result.deltas.push_back(std::move(dr));
  }

  result.table = build_convergence_table(config.delta_over_eps, table_values, reference);
  return result;
}

}  // namespace piezohom
