#pragma once

#include "sclab/common.hpp"
#include "sclab/lanczos.hpp"

namespace sclab {

struct KrylovOptions {
  int dim = 30;
  double tol = 1e-10;
};

// exp(-i tau (H - shift)) v for real symmetric H, by Lanczos on the Hermitian
// problem with step splitting until each piece meets its share of tol.
CVec expm_krylov(const Eigen::SparseMatrix<double, Eigen::RowMajor>& H, double shift, double tau, const CVec& v,
                 const KrylovOptions& opt = {}, int* substeps = nullptr);

}  // namespace sclab
