#ifndef PIEZOHOM_CLI_CONFIG_HPP
#define PIEZOHOM_CLI_CONFIG_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "piezohom/errors.hpp"
#include "piezohom/grid.hpp"
#include "piezohom/macro.hpp"
#include "piezohom/materials.hpp"

namespace piezohom::cli {

/// Config problem tied to a line of the source file (0 when not line-specific).
class ConfigError : public ConfigurationError {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

enum class GeometryKind { kFiber, kLaminate, kHomogeneous, kPattern };

struct RunConfig {
  std::string source = "<config>";
  std::uint64_t hash = 0;  ///< FNV-1a of the config text

  GeometryKind geometry = GeometryKind::kFiber;
  double r_frac = 0.3125;
  double laminate_fraction = 0.5;
  int laminate_axis = 0;  ///< 0-based; written 1-based in the file
  std::string pattern_file;
  double epsilon = 0.015625;
  /// Where the first macro barycenter sits inside its period, as a fraction
  /// of epsilon per axis (0 = period corner, 0.5 = fiber axis).
  double sample_phase = 0.0;
  Vec3 domain_lower = Vec3::Zero();
  Vec3 domain_upper = Vec3::Constant(5.0);

  MaterialTensorSet fiber;
  MaterialTensorSet matrix;

  int voxels_per_period = 8;
  int cell_voxels = 32;
  std::array<int, 3> macro_divisions{40, 40, 40};
  long dof_budget = 2'000'000;

  std::vector<double> delta_over_eps{2.0, 3.0, 4.0};
  bool solve_macro = false;

  BoundaryConditions bc{};
  Vec3 body_load = Vec3::Zero();

  std::vector<double> corrector_eps{0.5, 0.25};
  Vec3 corrector_lower = Vec3::Zero();
  Vec3 corrector_upper = Vec3::Ones();
  int corrector_voxels = 8;
  BoundaryConditions corrector_bc{};
  Vec3 corrector_body_load = Vec3::Zero();

  double tolerance = 1e-10;
  std::string output_dir = "out";
  std::uint64_t seed = kDefaultPropertySeed;

  /// Unit-edge period at `n` voxels per edge.
  VoxelCell unit_cell(int n) const;
  /// Period corner placing element barycenters at `sample_phase`.
  Vec3 lattice_origin() const;
};

std::uint64_t fnv1a(const std::string& text);

/// Parses the sectioned key = value format documented in configs/README.md.
/// Relative pattern paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

}  // namespace piezohom::cli

#endif  // PIEZOHOM_CLI_CONFIG_HPP
