#include "sclab/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace sclab {

namespace {

LanczosResult dense_lowest(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, int k) {
  const Mat dense(A);
  Eigen::SelfAdjointEigenSolver<Mat> es(dense);
  LanczosResult res;
  res.values = es.eigenvalues().head(k);
  res.vectors = es.eigenvectors().leftCols(k);
  res.residuals = (A * res.vectors - res.vectors * res.values.asDiagonal()).colwise().norm().transpose();
  return res;
}

Vec random_unit(long n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (long i = 0; i < n; ++i) v(i) = nd(rng);
  return v / v.norm();
}

}  // namespace

LanczosResult lanczos_lowest(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, int k, const LanczosOptions& opt) {
  const long N = A.rows();
  if (A.cols() != N || N == 0) throw PreconditionError("lanczos: matrix must be square and nonempty");
  if (k < 1) throw PreconditionError("lanczos: need k >= 1");
  k = static_cast<int>(std::min<long>(k, N));
  if (N <= 16) return dense_lowest(A, k);

  const double sigma = opt.shift_by_min_diagonal ? A.diagonal().minCoeff() : 0.0;
  const long mmax = std::min<long>(opt.max_dim, N);
  std::mt19937_64 rng(opt.seed);

  Mat V(N, std::min<long>(mmax, 64));
  std::vector<double> alpha, beta;
  V.col(0) = random_unit(N, rng);
  long next_check = std::min<long>(std::max(20, 2 * k), mmax);
  double best = kInf;

  for (long j = 0; j < mmax; ++j) {
    Vec w = A * V.col(j) - sigma * V.col(j);
    const double a = V.col(j).dot(w);
    alpha.push_back(a);
    // Full reorthogonalization, classical Gram-Schmidt applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      const Vec coef = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * coef;
    }
    double b = w.norm();
    const bool last = j + 1 == mmax;
    const bool breakdown = b <= 1e-13 * std::max(1.0, std::abs(a));

    if (j + 1 >= next_check || last || breakdown) {
      const long m = j + 1;
      Vec d = Eigen::Map<Vec>(alpha.data(), m);
      Vec e = m > 1 ? Vec(Eigen::Map<Vec>(beta.data(), m - 1)) : Vec();
      Eigen::SelfAdjointEigenSolver<Mat> es;
      es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
      const int kk = static_cast<int>(std::min<long>(k, m));
      bool ok = kk == k;
      double worst = 0.0;
      for (int i = 0; i < kk; ++i) {
        const double lam = es.eigenvalues()(i) + sigma;
        const double est = std::abs(b * es.eigenvectors()(m - 1, i));
        worst = std::max(worst, est / std::max(std::abs(lam), 1.0));
        if (est > opt.tol * std::max(std::abs(lam), 1.0)) ok = false;
      }
      best = std::min(best, worst);
      if (ok || (last && m == N) || (breakdown && m == N)) {
        LanczosResult res;
        res.shift = sigma;
        res.iterations = static_cast<int>(m);
        res.values = es.eigenvalues().head(kk).array() + sigma;
        res.vectors = V.leftCols(m) * es.eigenvectors().leftCols(kk);
        for (int i = 0; i < kk; ++i) res.vectors.col(i).normalize();
        res.residuals = (A * res.vectors - res.vectors * res.values.asDiagonal()).colwise().norm().transpose();
        bool true_ok = true;
        for (int i = 0; i < kk; ++i)
          if (res.residuals(i) > opt.tol * std::max(std::abs(res.values(i)), 1.0) && m < N) true_ok = false;
        if (true_ok) return res;
      }
      next_check = std::min<long>(mmax, static_cast<long>(std::ceil(1.15 * static_cast<double>(m))) + 5);
    }
    if (last) break;
    if (V.cols() < j + 2) V.conservativeResize(Eigen::NoChange, std::min<long>(mmax, 2 * V.cols()));
    if (breakdown) {
      // Invariant subspace: continue from a fresh direction orthogonal to the basis.
      Vec r = random_unit(N, rng);
      for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * r);
      if (r.norm() < 1e-12) break;
      V.col(j + 1) = r / r.norm();
      beta.push_back(0.0);
    } else {
      V.col(j + 1) = w / b;
      beta.push_back(b);
    }
  }
  std::ostringstream os;
  os << "lanczos: no convergence within Krylov dimension " << mmax << " (best relative residual " << best << ")";
  throw ConvergenceError(os.str(), best);
}

}  // namespace sclab
