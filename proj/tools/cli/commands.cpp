#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "piezohom/pipeline.hpp"
#include "piezohom/verify.hpp"

#ifndef PIEZOHOM_VERSION
#define PIEZOHOM_VERSION "unknown"
#endif

namespace piezohom::cli {

namespace {

using Json = nlohmann::json;

constexpr double kSymmetryLimit = 1e-9;
constexpr double kDualLimit = 1e-8;
constexpr double kDecouplingLimit = 1e-9;
constexpr double kIdentityLimit = 1e-8;

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

std::string ladder_tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::filesystem::path output_dir(const RunConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigurationError("failed writing '" + path.string() + "'");
}

Json provenance_json(const RunConfig& config, const std::string& command) {
  return {{"tool", "piezohom " PIEZOHOM_VERSION},
          {"command", command},
          {"config_hash", hex(config.hash)},
          {"voxels_per_period", config.voxels_per_period},
          {"cell_voxels", config.cell_voxels},
          {"tolerance", config.tolerance}};
}

std::string tensor_document(const EffectiveTensorSet& set, const RunConfig& config, const std::string& command) {
  Json j = Json::parse(to_json(set));
  j["provenance"] = provenance_json(config, command);
  const TensorPropertyReport r = check_tensor_properties(set.tensors, config.seed);
  j["properties"] = {{"c_symmetry_residual", r.c_symmetry_residual},
                     {"e_symmetry_residual", r.e_symmetry_residual},
                     {"eps_symmetry_residual", r.eps_symmetry_residual},
                     {"min_elastic_form", r.min_elastic_form},
                     {"min_permittivity_eigenvalue", r.min_permittivity_eigenvalue},
                     {"samples", r.samples},
                     {"seed", config.seed}};
  return j.dump(2) + "\n";
}

CellSolveOptions cell_options(const RunConfig& config) {
  CellSolveOptions o;
  o.solver.tolerance = config.tolerance;
  return o;
}

MacroProblem macro_problem(const RunConfig& config) {
  MacroProblem p;
  p.mesh.divisions = config.macro_divisions;
  p.mesh.lower = config.domain_lower;
  p.mesh.upper = config.domain_upper;
  p.bc = config.bc;
  p.body_load = config.body_load;
  return p;
}

void validate_constituents(const RunConfig& config) {
  try {
    validate_material(config.fiber);
  } catch (const ValidationError& err) {
    throw ConfigError(config.source, 0, std::string("[material.fiber] ") + err.what());
  }
  try {
    validate_material(config.matrix);
  } catch (const ValidationError& err) {
    throw ConfigError(config.source, 0, std::string("[material.matrix] ") + err.what());
  }
}

void print_tensor_summary(std::ostream& out, const EffectiveTensorSet& set) {
  const MaterialTensorSet& m = set.tensors;
  out << set.tag.label() << " at " << set.resolution << "^3 voxels\n"
      << "  c11 " << sci(m.c(0, 0)) << "  c33 " << sci(m.c(2, 2)) << "  c13 " << sci(m.c(0, 2)) << "  c44 "
      << sci(m.c(3, 3)) << " Pa\n"
      << "  e31 " << sci(m.e(2, 0)) << "  e33 " << sci(m.e(2, 2)) << "  e15 " << sci(m.e(0, 4)) << " C/m^2\n"
      << "  eps11 " << sci(m.eps(0, 0)) << "  eps33 " << sci(m.eps(2, 2)) << " F/m\n"
      << "  dual e discrepancy " << sci(set.dual_discrepancy) << "\n";
}

void add_property_checks(std::vector<CheckResult>& checks, const std::string& what,
                         const EffectiveTensorSet& set, std::uint64_t seed) {
  const TensorPropertyReport r = check_tensor_properties(set.tensors, seed);
  const double sym = std::max({r.c_symmetry_residual, r.e_symmetry_residual, r.eps_symmetry_residual});
  checks.push_back({what + ": symmetry residual", sym, kSymmetryLimit, sym <= kSymmetryLimit, ""});
  checks.push_back({what + ": min elastic quadratic form", r.min_elastic_form, 0.0, r.min_elastic_form > 0.0,
                    "sampled over " + std::to_string(r.samples) + " directions"});
  checks.push_back({what + ": min permittivity eigenvalue", r.min_permittivity_eigenvalue, 0.0,
                    r.min_permittivity_eigenvalue > 0.0, ""});
  checks.push_back({what + ": dual e-formula discrepancy", set.dual_discrepancy, kDualLimit,
                    set.dual_discrepancy <= kDualLimit, ""});
}

double relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

std::vector<double> successive_orders(const std::vector<double>& ladder, const std::vector<double>& errors) {
  std::vector<double> rates(ladder.size(), std::nan(""));
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (errors[i] > 0.0 && errors[i - 1] > 0.0 && ladder[i] != ladder[i - 1]) {
      rates[i] = std::log(errors[i - 1] / errors[i]) / std::log(ladder[i - 1] / ladder[i]);
    }
  }
  return rates;
}

}  // namespace

std::string provenance_header(const RunConfig& config, const std::string& command) {
  std::ostringstream s;
  s << "# tool=piezohom " PIEZOHOM_VERSION "\n"
    << "# command=" << command << "\n"
    << "# config_hash=" << hex(config.hash) << "\n"
    << "# voxels_per_period=" << config.voxels_per_period << " cell_voxels=" << config.cell_voxels
    << " macro_divisions=" << config.macro_divisions[0] << "x" << config.macro_divisions[1] << "x"
    << config.macro_divisions[2] << "\n"
    << "# tolerance=" << sci(config.tolerance) << "\n";
  return s.str();
}

int cmd_homogenize(const RunConfig& config, Console console) {
  validate_constituents(config);
  const VoxelCell unit = config.unit_cell(config.cell_voxels);
  console.log << "solving 9 periodic cell problems on " << unit.n << "^3 voxels\n";
  const CellSolutionSet sols = solve_periodic_cells(unit, cell_options(config));
  const EffectiveTensorSet eff = homogenized_effective(sols);
  const auto dir = output_dir(config);
  write_file(dir / "homogenized.json", tensor_document(eff, config, "homogenize"));

  std::vector<CheckResult> checks;
  add_property_checks(checks, "homogenized", eff, config.seed);
  std::ostringstream report;
  report << provenance_header(config, "homogenize");
  for (const auto& c : checks) {
    report << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << sci(c.measured) << "\n";
  }
  write_file(dir / "properties.txt", report.str());
  print_tensor_summary(console.out, eff);
  console.out << "solver: " << sols.report.equations << " equations, relative residual "
              << sci(sols.report.relative_residual) << "\n";
  return kExitOk;
}

int cmd_hmm_sweep(const RunConfig& config, Console console) {
  validate_constituents(config);
  PipelineConfig pc;
  pc.pattern = config.unit_cell(config.voxels_per_period);
  pc.epsilon = config.epsilon;
  pc.lattice_origin = config.lattice_origin();
  pc.delta_over_eps = config.delta_over_eps;
  pc.macro = macro_problem(config);
  pc.solve_macro = config.solve_macro;
  pc.cell_options = cell_options(config);
  pc.macro_solver.tolerance = config.tolerance;
  pc.progress = [&](const std::string& msg) { console.log << msg << "\n"; };
  const PipelineResult result = run_hmm_pipeline(pc);

  const auto dir = output_dir(config);
  write_file(dir / "homogenized.json", tensor_document(result.homogenized, config, "hmm-sweep"));
  std::ostringstream errors;
  errors << provenance_header(config, "hmm-sweep");
  errors << "delta_over_eps,samples,e_c,e_e,e_d,h1_diff_u,h1_diff_phi\n";
  for (const auto& d : result.deltas) {
    const auto& worst = d.samples[d.worst_sample];
    write_file(dir / ("hmm_delta_" + ladder_tag(d.delta_over_eps) + ".json"),
               tensor_document(worst, config, "hmm-sweep"));
    errors << sci(d.delta_over_eps) << ',' << d.samples.size() << ',' << sci(d.errors.e_c) << ','
           << sci(d.errors.e_e) << ',' << sci(d.errors.e_d) << ',';
    if (d.macro) errors << sci(d.macro_difference.h1_u()) << ',' << sci(d.macro_difference.h1_phi());
    else errors << ',';
    errors << '\n';
    if (d.macro) {
      std::ostringstream vtk;
      write_vtk(vtk, *d.macro, "piezohom macro field, HMM tensors, delta/eps=" + ladder_tag(d.delta_over_eps));
      write_file(dir / ("macro_delta_" + ladder_tag(d.delta_over_eps) + ".vtk"), vtk.str());
    }
  }
  if (result.macro_homogenized) {
    std::ostringstream vtk;
    write_vtk(vtk, *result.macro_homogenized, "piezohom macro field, homogenized tensors");
    write_file(dir / "macro_homogenized.vtk", vtk.str());
  }
  write_file(dir / "errors.csv", errors.str());
  write_file(dir / "convergence.csv", provenance_header(config, "hmm-sweep") + result.table.to_csv());

  console.out << "homogenized ";
  print_tensor_summary(console.out, result.homogenized);
  console.out << "delta/eps      e_c            e_e            e_d\n";
  for (const auto& d : result.deltas) {
    console.out << std::setw(9) << d.delta_over_eps << "  " << sci(d.errors.e_c) << "  " << sci(d.errors.e_e)
                << "  " << sci(d.errors.e_d) << "\n";
  }
  return kExitOk;
}

std::vector<CheckResult> run_checks(const RunConfig& config, std::ostream& log) {
  std::vector<CheckResult> checks;

  bool constituents_ok = true;
  for (const auto& [name, m] : {std::pair<std::string, const MaterialTensorSet&>{"fiber", config.fiber},
                                {"matrix", config.matrix}}) {
    const TensorPropertyReport r = check_tensor_properties(m, config.seed);
    const double sym = std::max({r.c_symmetry_residual, r.e_symmetry_residual, r.eps_symmetry_residual});
    checks.push_back({"constituent " + name + ": symmetry residual", sym, kSymmetryLimit, sym <= kSymmetryLimit, ""});
    checks.push_back({"constituent " + name + ": min elastic quadratic form", r.min_elastic_form, 0.0,
                      r.min_elastic_form > 0.0, ""});
    checks.push_back({"constituent " + name + ": min permittivity eigenvalue", r.min_permittivity_eigenvalue, 0.0,
                      r.min_permittivity_eigenvalue > 0.0, ""});
    constituents_ok = constituents_ok && checks[checks.size() - 3].passed && checks[checks.size() - 2].passed &&
                      checks.back().passed;
  }
  if (!constituents_ok) {
    checks.push_back({"cell problems", 0.0, 0.0, false, "skipped: constituent tensors are invalid"});
    return checks;
  }

  const CellSolveOptions options = cell_options(config);

  log << "periodic cell problems at " << config.cell_voxels << "^3 voxels\n";
  const EffectiveTensorSet periodic =
      homogenized_effective(solve_periodic_cells(config.unit_cell(config.cell_voxels), options));
  add_property_checks(checks, "homogenized", periodic, config.seed);

  const int n = config.voxels_per_period;
  const VoxelCell pattern = config.unit_cell(n);
  {
    const double delta = config.delta_over_eps.front();
    VoxelCell scaled = pattern;
    scaled.origin = Vec3::Constant(-config.sample_phase);
    const VoxelCell sample = cut_sample(scaled, Vec3::Zero(), delta, n);
    log << "HMM cell problems, delta/eps=" << delta << " at " << sample.n << "^3 voxels\n";
    const EffectiveTensorSet hmm = hmm_effective(solve_hmm_cells(sample, options));
    add_property_checks(checks, "HMM delta/eps=" + ladder_tag(delta), hmm, config.seed);
  }

  // Decoupling consistency and bounds on the coupling-free medium.
  log << "decoupled cell problems at " << n << "^3 voxels\n";
  VoxelCell decoupled = pattern;
  for (auto& [id, m] : decoupled.phase_materials) m = m.without_coupling();
  const EffectiveTensorSet coupled = homogenized_effective(solve_periodic_cells(decoupled, options));
  CellSolveOptions elastic = options;
  elastic.physics = CellPhysics::kElasticOnly;
  CellSolveOptions dielectric = options;
  dielectric.physics = CellPhysics::kDielectricOnly;
  const EffectiveTensorSet c_only = homogenized_effective(solve_periodic_cells(decoupled, elastic));
  const EffectiveTensorSet d_only = homogenized_effective(solve_periodic_cells(decoupled, dielectric));
  const double dc = relative_difference(coupled.tensors.c, c_only.tensors.c);
  const double dd = relative_difference(coupled.tensors.eps, d_only.tensors.eps);
  checks.push_back({"decoupling: c vs elasticity-only", dc, kDecouplingLimit, dc <= kDecouplingLimit, ""});
  checks.push_back({"decoupling: eps vs dielectric-only", dd, kDecouplingLimit, dd <= kDecouplingLimit, ""});

  Mat3 arithmetic = Mat3::Zero();
  Mat3 harmonic_inv = Mat3::Zero();
  for (const auto& [id, m] : decoupled.phase_materials) {
    const double f = decoupled.phase_fraction(id);
    arithmetic += f * m.eps;
    harmonic_inv += f * m.eps.inverse();
  }
  const Mat3 harmonic = harmonic_inv.inverse();
  const Mat3 eps0 = 0.5 * (coupled.tensors.eps + coupled.tensors.eps.transpose());
  const double scale = arithmetic.norm();
  const Eigen::SelfAdjointEigenSolver<Mat3> lower(eps0 - harmonic);
  const Eigen::SelfAdjointEigenSolver<Mat3> upper(arithmetic - eps0);
  const double margin = std::min(lower.eigenvalues().minCoeff(), upper.eigenvalues().minCoeff()) / scale;
  checks.push_back({"bounds: harmonic <= eps0 <= arithmetic (min margin)", margin, -1e-12, margin >= -1e-12,
                    "relative to |arithmetic mean|"});

  // Patch test: a single-phase cell must return its own tensors.
  const VoxelCell single = build_homogeneous_cell(std::max(2, n / 2), config.fiber, 1.0);
  const EffectiveTensorSet hom_periodic = homogenized_effective(solve_periodic_cells(single, options));
  VoxelCell single_sample = single;
  single_sample.period = 1.0;
  const EffectiveTensorSet hom_hmm = hmm_effective(solve_hmm_cells(single_sample, options));
  for (const auto& [name, set] : {std::pair<std::string, const EffectiveTensorSet&>{"periodic", hom_periodic},
                                  {"HMM", hom_hmm}}) {
    const double rc = relative_difference(set.tensors.c, config.fiber.c);
    const double re = relative_difference(set.tensors.e, config.fiber.e);
    const double rd = relative_difference(set.tensors.eps, config.fiber.eps);
    const double worst = std::max({rc, re, rd});
    checks.push_back({"patch test (" + name + ", single phase)", worst, kIdentityLimit, worst <= kIdentityLimit, ""});
  }
  return checks;
}

int cmd_verify(const RunConfig& config, Console console) {
  const std::vector<CheckResult> checks = run_checks(config, console.log);
  std::ostringstream report;
  report << provenance_header(config, "verify");
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    report << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  measured=" << sci(c.measured)
           << "  limit=" << sci(c.limit);
    if (!c.detail.empty()) report << "  (" << c.detail << ")";
    report << "\n";
  }
  report << (all ? "all checks passed\n" : "verification FAILED\n");
  write_file(output_dir(config) / "verify_report.txt", report.str());
  console.out << report.str();
  return all ? kExitOk : kExitVerification;
}

int cmd_corrector(const RunConfig& config, Console console) {
  validate_constituents(config);
  const int n = config.corrector_voxels;
  const VoxelCell unit = config.unit_cell(n);
  SolverOptions solver;
  solver.tolerance = config.tolerance;

  // Refuse before any work if the finest level is over budget.
  for (double eps : config.corrector_eps) {
    ResolvedProblem probe;
    probe.lower = config.corrector_lower;
    probe.upper = config.corrector_upper;
    probe.epsilon = eps;
    probe.voxels_per_period = n;
    if (probe.estimated_dofs() > config.dof_budget) {
      throw BudgetError("corrector: eps=" + ladder_tag(eps) + " needs about " +
                            std::to_string(probe.estimated_dofs()) + " DOFs, above the budget of " +
                            std::to_string(config.dof_budget),
                        static_cast<double>(probe.estimated_dofs()));
    }
  }

  console.log << "periodic cell problems at " << n << "^3 voxels\n";
  const CellSolutionSet sols = solve_periodic_cells(unit, cell_options(config));
  const EffectiveTensorSet hom = homogenized_effective(sols);

  std::vector<double> h1_u, h1_phi;
  std::ostringstream rows;
  for (double eps : config.corrector_eps) {
    ResolvedProblem rp;
    rp.lower = config.corrector_lower;
    rp.upper = config.corrector_upper;
    rp.pattern = unit;
    rp.epsilon = eps;
    rp.voxels_per_period = n;
    rp.body_load = config.corrector_body_load;
    rp.bc = config.corrector_bc;
    rp.dof_budget = config.dof_budget;
    console.log << "eps=" << eps << ": resolved micro solve\n";
    const CoupledField micro = resolved_micro_solve(rp, solver);

    MacroProblem mp;
    mp.mesh.lower = rp.lower;
    mp.mesh.upper = rp.upper;
    mp.mesh.divisions = micro.grid.cells;
    mp.element_tensors = {hom.tensors};
    mp.body_load = rp.body_load;
    mp.bc = rp.bc;
    console.log << "eps=" << eps << ": homogenized macro solve\n";
    const CoupledField macro = solve_macro(mp, solver);
    const CoupledField corrected = first_order_corrector(macro, sols, eps, micro.grid);

    const FieldNorms err = corrector_error(micro, corrected);
    const FieldNorms err0 = corrector_error(micro, macro);
    const FieldNorms ref = field_norms(micro);
    h1_u.push_back(err.h1_u());
    h1_phi.push_back(err.h1_phi());
    auto rel = [](double a, double b) { return b > 0.0 ? a / b : a; };
    rows << sci(eps) << ',' << sci(err.h1_u()) << ',' << sci(err.h1_phi()) << ',' << sci(err.l2_u) << ','
         << sci(err.l2_phi) << ',' << sci(rel(err.h1_u(), ref.h1_u())) << ',' << sci(rel(err.h1_phi(), ref.h1_phi()))
         << ',' << sci(rel(err0.h1_u(), ref.h1_u())) << ',' << sci(rel(err0.h1_phi(), ref.h1_phi())) << "\n";
  }
  const auto rate_u = successive_orders(config.corrector_eps, h1_u);
  const auto rate_phi = successive_orders(config.corrector_eps, h1_phi);

  std::ostringstream csv;
  csv << provenance_header(config, "corrector");
  csv << "eps,h1_u,h1_phi,l2_u,l2_phi,rel_h1_u,rel_h1_phi,rel_h1_u_macro_only,rel_h1_phi_macro_only,rate_u,rate_phi\n";
  std::istringstream lines(rows.str());
  std::string line;
  for (std::size_t i = 0; std::getline(lines, line); ++i) {
    csv << line << ',';
    if (!std::isnan(rate_u[i])) csv << sci(rate_u[i]);
    csv << ',';
    if (!std::isnan(rate_phi[i])) csv << sci(rate_phi[i]);
    csv << '\n';
  }
  write_file(output_dir(config) / "corrector.csv", csv.str());
  console.out << csv.str();
  return kExitOk;
}

EffectiveTensorSet load_tensor_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open tensor document '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  EffectiveTensorSet set = effective_from_json(buf.str());
  const TensorPropertyReport r = check_tensor_properties(set.tensors);
  if (!r.symmetric(kSymmetryLimit) || !r.positive_definite()) {
    throw ValidationError("tensor document '" + path + "' fails the symmetry or positivity checks");
  }
  return set;
}

int run_cli(int argc, char** argv, Console console) {
  CLI::App app{"piezohom: multiscale piezoelectric composite homogenization"};
  app.set_version_flag("--version", PIEZOHOM_VERSION);
  app.require_subcommand(1);
  std::string config_path;
  std::string output_override;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, Console);
  };
  const Command commands[] = {
      {"homogenize", "periodic cell problems and homogenized tensors", cmd_homogenize},
      {"hmm-sweep", "HMM cell problems over the delta ladder and the convergence table", cmd_hmm_sweep},
      {"verify", "symmetry, positivity, dual-formula, decoupling, bounds and patch checks", cmd_verify},
      {"corrector", "first-order corrector error against resolved micro solves", cmd_corrector},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config_path, "run configuration file")->required();
    sub->add_option("-o,--output", output_override, "output directory (overrides [output] directory)");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err, console.out, console.log);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config = load_config(config_path);
    if (!output_override.empty()) config.output_dir = output_override;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(config, console);
    }
    return kExitConfig;
  } catch (const SolverError& err) {
    console.log << "solver failure: " << err.what() << "\n";
    return kExitSolver;
  } catch (const BudgetError& err) {
    console.log << "refused: " << err.what() << "\n";
    return kExitConfig;
  } catch (const ConfigurationError& err) {
    console.log << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    console.log << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    console.log << "internal error: " << err.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace piezohom::cli
