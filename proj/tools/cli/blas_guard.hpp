#ifndef PIEZOHOM_CLI_BLAS_GUARD_HPP
#define PIEZOHOM_CLI_BLAS_GUARD_HPP

#include <cstdlib>
#include <unistd.h>

#include "piezohom/fem.hpp"

namespace piezohom::cli {

/// Some OpenBLAS builds pick a kernel whose dpotrf is wrong on this CPU. When
/// the supernodal self-test fails and the kernel was auto-selected, restart the
/// process with OPENBLAS_CORETYPE=Haswell. If that is not possible the solver
/// falls back to the simplicial factorization on its own.
inline void ensure_reliable_blas(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  if (!__builtin_cpu_supports("avx2")) return;
  if (supernodal_factorization_reliable()) return;
  ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  ::execv("/proc/self/exe", argv);
#else
  (void)argv;
#endif
}

}  // namespace piezohom::cli

#endif  // PIEZOHOM_CLI_BLAS_GUARD_HPP
