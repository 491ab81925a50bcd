#include "sclab/krylov.hpp"

#include <cmath>
#include <complex>
#include <limits>

namespace sclab {

CVec expm_krylov(const Eigen::SparseMatrix<double, Eigen::RowMajor>& H, double shift, double tau, const CVec& v,
                 const KrylovOptions& opt, int* substeps) {
  using cd = std::complex<double>;
  const long N = H.rows();
  if (v.size() != N) throw PreconditionError("expm_krylov: vector size mismatch");
  if (substeps) *substeps = 0;
  if (tau == 0.0) return v;
  const double sgn = tau > 0 ? 1.0 : -1.0;
  const double total = std::abs(tau);
  double rem = total, dt = total;
  CVec w = v;
  while (rem > 0.0) {
    const double nrm = w.norm();
    if (nrm == 0.0) return w;
    const long mmax = std::min<long>(opt.dim, N);
    CMat V(N, mmax);
    std::vector<double> alpha, beta;
    V.col(0) = w / nrm;
    bool exact = false;
    double tail = 0.0;
    long m = 0;
    for (long j = 0; j < mmax; ++j) {
      CVec u = H * V.col(j) - shift * V.col(j);
      alpha.push_back(V.col(j).dot(u).real());
      for (int pass = 0; pass < 2; ++pass) u -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * u);
      const double b = u.norm();
      m = j + 1;
      if (b <= 1e-14 * std::max(1.0, std::abs(alpha.back())) || m == N) {
        exact = true;
        break;
      }
      if (j + 1 < mmax) {
        V.col(j + 1) = u / b;
        beta.push_back(b);
      } else {
        tail = b;
      }
    }
    Vec d = Eigen::Map<Vec>(alpha.data(), m);
    Vec e = m > 1 ? Vec(Eigen::Map<Vec>(beta.data(), m - 1)) : Vec();
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    const Mat& Q = es.eigenvectors();
    CVec y;
    while (true) {
      dt = std::min(dt, rem);
      CVec ph(m);
      for (long i = 0; i < m; ++i) ph(i) = std::exp(cd(0.0, -sgn * dt * es.eigenvalues()(i))) * Q(0, i);
      y = Q.cast<cd>() * ph;
      const double err = exact ? 0.0 : tail * std::abs(y(m - 1));
      // The estimate cannot resolve below the rounding level of the projected exponential.
      const double noise = 32.0 * std::numeric_limits<double>::epsilon() * tail;
      if (err <= std::max(opt.tol * dt / total, noise)) break;
      dt *= 0.5;
      if (dt < 1e-300) throw NumericalError("expm_krylov: step size underflow");
    }
    w = nrm * (V.leftCols(m) * y);
    rem -= dt;
    if (rem < 1e-15 * total) rem = 0.0;
    if (substeps) ++*substeps;
  }
  return w;
}

}  // namespace sclab
