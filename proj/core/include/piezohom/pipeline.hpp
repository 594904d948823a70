#ifndef PIEZOHOM_PIPELINE_HPP
#define PIEZOHOM_PIPELINE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "piezohom/cells.hpp"
#include "piezohom/macro.hpp"
#include "piezohom/verify.hpp"

namespace piezohom {

struct PipelineConfig {
  /// One period of the medium; rescaled so its edge equals `epsilon`. Its
  /// voxel count is the per-period resolution of every HMM sample.
  VoxelCell pattern;
  double epsilon = 1.0;
  /// A period corner of the medium; shifts where barycenters fall inside the cell.
  Vec3 lattice_origin = Vec3::Zero();
  std::vector<double> delta_over_eps{2.0, 3.0, 4.0};
  /// Mesh, load and boundary data; the tensors are filled in by the pipeline.
  MacroProblem macro;
  bool solve_macro = true;
  CellSolveOptions cell_options;
  SolverOptions macro_solver;
  std::function<void(const std::string&)> progress;
};

struct DeltaResult {
  double delta_over_eps = 0.0;
  /// Distinct samples (one per phase offset mod epsilon) and the sample used
  /// by each macro element.
  std::vector<EffectiveTensorSet> samples;
  std::vector<int> element_sample;
  /// Largest errors against the homogenized tensors over all samples.
  TensorErrors errors;
  /// Sample with the largest combined relative error; feeds the table.
  int worst_sample = 0;
  std::optional<CoupledField> macro;
  /// Norms of the difference to the homogenized-tensor macro solution.
  FieldNorms macro_difference;
};

struct PipelineResult {
  EffectiveTensorSet homogenized;
  std::optional<CoupledField> macro_homogenized;
  std::vector<DeltaResult> deltas;
  ConvergenceTable table;
};

/// Step 1 periodic cells, step 2 macro solve with the homogenized tensors,
/// step 3 HMM cells at every element barycenter for every delta, step 4 macro
/// solve with the sampled tensors. Solver failures are re-thrown with the
/// stage in the message.
PipelineResult run_hmm_pipeline(const PipelineConfig& config);

/// Barycenters with the same offset modulo epsilon (relative to a lattice
/// corner) share a sample; returns the per-element sample index and fills the
/// representative barycenters.
std::vector<int> group_by_period_offset(const StructuredGrid& macro, double epsilon,
                                        const Vec3& lattice_origin, std::vector<Vec3>* representatives);

}  // namespace piezohom

#endif  // PIEZOHOM_PIPELINE_HPP
