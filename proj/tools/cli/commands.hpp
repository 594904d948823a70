#ifndef PIEZOHOM_CLI_COMMANDS_HPP
#define PIEZOHOM_CLI_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "piezohom/cells.hpp"

namespace piezohom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerification = 3;

/// Console streams: `out` gets results, `log` gets progress.
struct Console {
  std::ostream& out;
  std::ostream& log;
};

int cmd_homogenize(const RunConfig& config, Console console);
int cmd_hmm_sweep(const RunConfig& config, Console console);
int cmd_verify(const RunConfig& config, Console console);
int cmd_corrector(const RunConfig& config, Console console);

/// One line of the verify report.
struct CheckResult {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  bool passed = false;
  std::string detail;
};
/// The property suite behind cmd_verify.
std::vector<CheckResult> run_checks(const RunConfig& config, std::ostream& log);

/// Reads a tensor document and re-runs the property checks on it; throws
/// ValidationError when the tensors are not symmetric or not positive definite.
EffectiveTensorSet load_tensor_json(const std::string& path);

/// Provenance lines ("# key=value") prefixed to CSV outputs.
std::string provenance_header(const RunConfig& config, const std::string& command);

/// Parses argv, dispatches, and maps exceptions to exit codes.
int run_cli(int argc, char** argv, Console console);

}  // namespace piezohom::cli

#endif  // PIEZOHOM_CLI_COMMANDS_HPP
