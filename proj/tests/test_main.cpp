#include <gtest/gtest.h>

#include "cli/blas_guard.hpp"

int main(int argc, char** argv) {
  piezohom::cli::ensure_reliable_blas(argv);
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
