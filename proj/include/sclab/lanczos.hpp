#pragma once

#include <Eigen/Sparse>
#include <cstdint>

#include "sclab/common.hpp"

namespace sclab {

struct LanczosOptions {
  double tol = 1e-10;
  int max_dim = 5000;
  std::uint64_t seed = 0x5eedULL;
  // Shift by the smallest diagonal entry before iterating.
  bool shift_by_min_diagonal = true;
};

struct LanczosResult {
  Vec values;     // ascending
  Mat vectors;    // unit columns
  Vec residuals;  // ||A v - lambda v||
  int iterations = 0;
  double shift = 0.0;
};

// Lowest k eigenpairs of a symmetric sparse matrix by Lanczos with full
// reorthogonalization. Converged when each residual <= tol * max(|lambda|, 1).
LanczosResult lanczos_lowest(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, int k,
                             const LanczosOptions& opt = {});

}  // namespace sclab
