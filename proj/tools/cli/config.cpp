#include "config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace piezohom::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// One material section before it is turned into tensors.
struct MaterialDraft {
  std::string preset;
  bool table_units = false;
  bool decouple = false;
  std::map<std::string, std::pair<double, int>> ti;  // key -> (value, line)
  std::optional<std::pair<std::vector<double>, int>> c, e, eps;
  int section_line = 0;
};

class Parser {
 public:
  Parser(std::string source, std::string base_dir) : source_(std::move(source)), base_dir_(std::move(base_dir)) {}

  RunConfig run(const std::string& text) {
    cfg_.source = source_;
    cfg_.hash = fnv1a(text);
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      std::string s = raw;
      const auto hash = s.find_first_of("#;");
      if (hash != std::string::npos) s.erase(hash);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail("unterminated section header");
        section_ = trim(s.substr(1, s.size() - 2));
        if (section_ == "material.fiber" || section_ == "material.matrix") {
          drafts_[section_].section_line = line_;
        } else if (!known_section(section_)) {
          fail("unknown section [" + section_ + "]");
        }
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) fail("missing key before '='");
      if (section_.empty()) fail("key '" + key + "' outside any section");
      handle(key, value);
    }
    line_ = 0;
    finish();
    return cfg_;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(source_, line_, message); }

  static bool known_section(const std::string& s) {
    return s == "geometry" || s == "resolution" || s == "hmm" || s == "macro" || s == "bc" ||
           s == "corrector" || s == "corrector.bc" || s == "solver" || s == "output";
  }

  double number(const std::string& v) const {
    double x = 0.0;
    const char* begin = v.data();
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc() || ptr != end || !std::isfinite(x)) fail("'" + v + "' is not a finite number");
    return x;
  }

  std::vector<double> numbers(const std::string& v) const {
    std::string spaced = v;
    for (char& ch : spaced) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream in(spaced);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(number(token));
    if (out.empty()) fail("expected at least one number");
    return out;
  }

  std::vector<double> numbers(const std::string& v, std::size_t count) const {
    auto out = numbers(v);
    if (out.size() != count) {
      fail("expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
    }
    return out;
  }

  Vec3 vec3(const std::string& v) const {
    const auto x = numbers(v, 3);
    return Vec3(x[0], x[1], x[2]);
  }

  int integer(const std::string& v) const {
    const double x = number(v);
    if (x != std::floor(x) || std::abs(x) > 2e9) fail("'" + v + "' is not an integer");
    return static_cast<int>(x);
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail("'" + v + "' is not a boolean (true/false)");
  }

  void unknown(const std::string& key) const { fail("unknown key '" + key + "' in [" + section_ + "]"); }

  void handle(const std::string& key, const std::string& value) {
    if (section_ == "geometry") return geometry(key, value);
    if (section_ == "material.fiber" || section_ == "material.matrix") return material(key, value);
    if (section_ == "resolution") return resolution(key, value);
    if (section_ == "hmm") {
      if (key == "delta_over_eps") {
        cfg_.delta_over_eps = numbers(value);
        for (double d : cfg_.delta_over_eps) {
          if (!(d > 0.0)) fail("delta_over_eps values must be positive");
        }
        return;
      }
      return unknown(key);
    }
    if (section_ == "macro") {
      if (key == "solve") {
        cfg_.solve_macro = boolean(value);
        return;
      }
      return unknown(key);
    }
    if (section_ == "bc") return boundary(key, value, cfg_.bc, cfg_.body_load);
    if (section_ == "corrector.bc") return boundary(key, value, cfg_.corrector_bc, cfg_.corrector_body_load);
    if (section_ == "corrector") return corrector(key, value);
    if (section_ == "solver") {
      if (key == "tolerance") {
        cfg_.tolerance = number(value);
        if (!(cfg_.tolerance > 0.0 && cfg_.tolerance < 1.0)) fail("tolerance must lie in (0, 1)");
        return;
      }
      return unknown(key);
    }
    if (section_ == "output") {
      if (key == "directory") {
        if (value.empty()) fail("empty output directory");
        cfg_.output_dir = value;
        return;
      }
      if (key == "seed") {
        const double s = number(value);
        if (s < 0 || s != std::floor(s)) fail("seed must be a non-negative integer");
        cfg_.seed = static_cast<std::uint64_t>(s);
        return;
      }
      return unknown(key);
    }
    unknown(key);
  }

  void geometry(const std::string& key, const std::string& value) {
    if (key == "kind") {
      if (value == "fiber") {
        cfg_.geometry = GeometryKind::kFiber;
      } else if (value == "laminate") {
        cfg_.geometry = GeometryKind::kLaminate;
      } else if (value == "homogeneous") {
        cfg_.geometry = GeometryKind::kHomogeneous;
      } else if (value == "pattern") {
        cfg_.geometry = GeometryKind::kPattern;
      } else {
        fail("geometry kind must be fiber, laminate, homogeneous or pattern");
      }
    } else if (key == "r_frac") {
      cfg_.r_frac = number(value);
      if (!(cfg_.r_frac >= 0.0 && cfg_.r_frac < 0.5)) fail("r_frac must lie in [0, 0.5)");
    } else if (key == "laminate_fraction") {
      cfg_.laminate_fraction = number(value);
      if (!(cfg_.laminate_fraction >= 0.0 && cfg_.laminate_fraction <= 1.0)) fail("laminate_fraction must lie in [0, 1]");
    } else if (key == "laminate_axis") {
      const int axis = integer(value);
      if (axis < 1 || axis > 3) fail("laminate_axis must be 1, 2 or 3");
      cfg_.laminate_axis = axis - 1;
    } else if (key == "pattern_file") {
      std::filesystem::path p(value);
      if (p.is_relative()) p = std::filesystem::path(base_dir_) / p;
      cfg_.pattern_file = p.string();
    } else if (key == "epsilon") {
      cfg_.epsilon = number(value);
      if (!(cfg_.epsilon > 0.0)) fail("epsilon must be positive");
    } else if (key == "sample_phase") {
      cfg_.sample_phase = number(value);
      if (!(cfg_.sample_phase >= 0.0 && cfg_.sample_phase < 1.0)) fail("sample_phase must lie in [0, 1)");
    } else if (key == "domain_lower") {
      cfg_.domain_lower = vec3(value);
    } else if (key == "domain_upper") {
      cfg_.domain_upper = vec3(value);
    } else {
      unknown(key);
    }
  }

  void material(const std::string& key, const std::string& value) {
    MaterialDraft& d = drafts_[section_];
    static const char* ti_keys[] = {"c11", "c12", "c13", "c33", "c44", "c66",
                                    "e15", "e13", "e33", "eps11", "eps33"};
    if (key == "preset") {
      if (value != "pzt5" && value != "polymer" && value != "none") fail("preset must be pzt5, polymer or none");
      d.preset = value;
    } else if (key == "units") {
      if (value != "si" && value != "table") fail("units must be si or table");
      d.table_units = value == "table";
    } else if (key == "decouple") {
      d.decouple = boolean(value);
    } else if (key == "c") {
      d.c = {numbers(value, 36), line_};
    } else if (key == "e") {
      d.e = {numbers(value, 18), line_};
    } else if (key == "eps") {
      d.eps = {numbers(value, 9), line_};
    } else if (std::find(std::begin(ti_keys), std::end(ti_keys), key) != std::end(ti_keys)) {
      d.ti[key] = {number(value), line_};
    } else {
      unknown(key);
    }
  }

  void resolution(const std::string& key, const std::string& value) {
    if (key == "voxels_per_period") {
      cfg_.voxels_per_period = integer(value);
      if (cfg_.voxels_per_period < 2) fail("voxels_per_period must be at least 2");
    } else if (key == "cell_voxels") {
      cfg_.cell_voxels = integer(value);
      if (cfg_.cell_voxels < 2) fail("cell_voxels must be at least 2");
    } else if (key == "macro_divisions") {
      const auto v = numbers(value, 3);
      for (int a = 0; a < 3; ++a) {
        if (v[a] < 1 || v[a] != std::floor(v[a])) fail("macro_divisions must be positive integers");
        cfg_.macro_divisions[a] = static_cast<int>(v[a]);
      }
    } else if (key == "dof_budget") {
      const double b = number(value);
      if (b < 1 || b != std::floor(b)) fail("dof_budget must be a positive integer");
      cfg_.dof_budget = static_cast<long>(b);
    } else {
      unknown(key);
    }
  }

  void corrector(const std::string& key, const std::string& value) {
    if (key == "eps_ladder") {
      cfg_.corrector_eps = numbers(value);
      for (double e : cfg_.corrector_eps) {
        if (!(e > 0.0)) fail("eps_ladder values must be positive");
      }
    } else if (key == "voxels_per_period") {
      cfg_.corrector_voxels = integer(value);
      if (cfg_.corrector_voxels < 2) fail("voxels_per_period must be at least 2");
    } else if (key == "domain_lower") {
      cfg_.corrector_lower = vec3(value);
    } else if (key == "domain_upper") {
      cfg_.corrector_upper = vec3(value);
    } else {
      unknown(key);
    }
  }

  // Keys: preset = electrode, voltage = V, body_load = fx fy fz, and per face
  // <face>.u, <face>.u_gradient (row-major 3x3), <face>.phi,
  // <face>.phi_gradient, <face>.priority.
  void boundary(const std::string& key, const std::string& value, BoundaryConditions& bc, Vec3& body) {
    if (key == "preset") {
      if (value == "electrode") {
        const double v = bc[static_cast<int>(Face::kXMax)].phi0;
        bc = electrode_conditions(v);
      } else if (value == "clamped") {
        bc = BoundaryConditions{};
      } else {
        fail("bc preset must be electrode or clamped");
      }
      return;
    }
    if (key == "voltage") {
      auto& hot = bc[static_cast<int>(Face::kXMax)];
      hot.phi0 = number(value);
      hot.priority = std::max(hot.priority, 1);
      return;
    }
    if (key == "body_load") {
      body = vec3(value);
      return;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) return unknown(key);
    Face face;
    try {
      face = parse_face(key.substr(0, dot));
    } catch (const ArgumentError& err) {
      fail(err.what());
    }
    FaceCondition& f = bc[static_cast<int>(face)];
    const std::string field = key.substr(dot + 1);
    if (field == "u") {
      f.u0 = vec3(value);
    } else if (field == "u_gradient") {
      const auto g = numbers(value, 9);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) f.du(i, j) = g[3 * i + j];
    } else if (field == "phi") {
      f.phi0 = number(value);
    } else if (field == "phi_gradient") {
      f.dphi = vec3(value);
    } else if (field == "priority") {
      f.priority = integer(value);
    } else {
      unknown(key);
    }
  }

  MaterialTensorSet build_material(const std::string& name, const MaterialTensorSet& fallback_preset) {
    auto it = drafts_.find(name);
    if (it == drafts_.end()) return fallback_preset;
    const MaterialDraft& d = it->second;
    line_ = d.section_line;
    const double c_unit = d.table_units ? 1e10 : 1.0;
    const double eps_unit = d.table_units ? 1e-9 : 1.0;

    TransverselyIsotropicParams p;
    bool have_params = true;
    if (d.preset == "pzt5") {
      p = pzt5_params();
    } else if (d.preset == "polymer") {
      p = polymer_params();
    } else if (d.preset == "none") {
      have_params = false;
    } else {
      p = name == "material.fiber" ? pzt5_params() : polymer_params();
    }
    for (const auto& [key, entry] : d.ti) {
      const auto [value, line] = entry;
      const double scaled = key[0] == 'c' ? value * c_unit : key.rfind("eps", 0) == 0 ? value * eps_unit : value;
      double* slot = key == "c11"   ? &p.c11
                     : key == "c12" ? &p.c12
                     : key == "c13" ? &p.c13
                     : key == "c33" ? &p.c33
                     : key == "c44" ? &p.c44
                     : key == "c66" ? &p.c66
                     : key == "e15" ? &p.e15
                     : key == "e13" ? &p.e13
                     : key == "e33" ? &p.e33
                     : key == "eps11" ? &p.eps11
                                      : &p.eps33;
      *slot = scaled;
      have_params = true;
    }

    MaterialTensorSet m;
    if (have_params) {
      try {
        m = from_transversely_isotropic(p);
      } catch (const ValidationError& err) {
        fail(std::string("[") + name + "] " + err.what());
      }
    } else if (!(d.c && d.e && d.eps)) {
      fail("[" + name + "] preset = none needs full c, e and eps arrays");
    }
    if (d.c) {
      for (int i = 0; i < 36; ++i) m.c(i / 6, i % 6) = d.c->first[i] * c_unit;
    }
    if (d.e) {
      for (int i = 0; i < 18; ++i) m.e(i / 6, i % 6) = d.e->first[i];
    }
    if (d.eps) {
      for (int i = 0; i < 9; ++i) m.eps(i / 3, i % 3) = d.eps->first[i] * eps_unit;
    }
    if (d.decouple) m = m.without_coupling();
    return m;
  }

  void finish() {
    cfg_.fiber = build_material("material.fiber", from_transversely_isotropic(pzt5_params()));
    cfg_.matrix = build_material("material.matrix", from_transversely_isotropic(polymer_params()));
    line_ = 0;
    for (int a = 0; a < 3; ++a) {
      if (!(cfg_.domain_upper[a] > cfg_.domain_lower[a])) fail("[geometry] domain_upper must exceed domain_lower");
      if (!(cfg_.corrector_upper[a] > cfg_.corrector_lower[a])) {
        fail("[corrector] domain_upper must exceed domain_lower");
      }
    }
    if (cfg_.geometry == GeometryKind::kPattern && cfg_.pattern_file.empty()) {
      fail("[geometry] kind = pattern needs pattern_file");
    }
  }

  std::string source_;
  std::string base_dir_;
  RunConfig cfg_;
  std::string section_;
  int line_ = 0;
  std::map<std::string, MaterialDraft> drafts_;
};

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : ConfigurationError(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

VoxelCell RunConfig::unit_cell(int n) const {
  switch (geometry) {
    case GeometryKind::kFiber:
      return build_fiber_cell(n, r_frac, fiber, matrix, 1.0);
    case GeometryKind::kLaminate:
      return build_laminate_cell(n, laminate_fraction, laminate_axis, fiber, matrix, 1.0);
    case GeometryKind::kHomogeneous:
      return build_homogeneous_cell(n, fiber, 1.0);
    case GeometryKind::kPattern:
      break;
  }
  std::ifstream in(pattern_file);
  if (!in) throw ConfigError(source, 0, "cannot open pattern file '" + pattern_file + "'");
  VoxelCell cell = read_voxel_pattern(in, {{kMatrixPhase, matrix}, {kFiberPhase, fiber}});
  if (cell.n != n) {
    throw ConfigError(source, 0,
                      "pattern file has " + std::to_string(cell.n) + " voxels per edge, the run needs " +
                          std::to_string(n));
  }
  cell.edge_length = 1.0;
  return cell;
}

Vec3 RunConfig::lattice_origin() const {
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const double first_center = domain_lower[a] + 0.5 * (domain_upper[a] - domain_lower[a]) / macro_divisions[a];
    origin[a] = first_center - sample_phase * epsilon;
  }
  return origin;
}

RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir) {
  return Parser(source, base_dir).run(text);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_config(buf.str(), path, base.empty() ? "." : base);
}

}  // namespace piezohom::cli
