#include <iostream>

#include "cli/blas_guard.hpp"
#include "cli/commands.hpp"

int main(int argc, char** argv) {
  piezohom::cli::ensure_reliable_blas(argv);
  return piezohom::cli::run_cli(argc, argv, {std::cout, std::cerr});
}
