#include "sclab/quadrature.hpp"

#include <cmath>
#include <vector>

namespace sclab {

Quadrature gauss_hermite(int count) {
  if (count < 1) throw PreconditionError("gauss_hermite: need at least one node");
  Vec diag = Vec::Zero(count);
  Vec off(count > 1 ? count - 1 : 0);
  for (int k = 1; k < count; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  Quadrature q;
  q.nodes = es.eigenvalues();
  q.weights = es.eigenvectors().row(0).transpose().cwiseAbs2();
  // Symmetrize: the rule is exact for odd functions only when z_k = -z_{K-1-k}.
  for (int k = 0; k < count / 2; ++k) {
    const int m = count - 1 - k;
    const double z = 0.5 * (q.nodes(m) - q.nodes(k));
    const double w = 0.5 * (q.weights(k) + q.weights(m));
    q.nodes(k) = -z;
    q.nodes(m) = z;
    q.weights(k) = q.weights(m) = w;
  }
  if (count % 2 == 1) q.nodes(count / 2) = 0.0;
  return q;
}

Quadrature truncate_nodes(const Quadrature& q, double zmax) {
  std::vector<int> keep;
  for (int k = 0; k < q.nodes.size(); ++k)
    if (std::abs(q.nodes(k)) <= zmax) keep.push_back(k);
  Quadrature out;
  out.nodes.resize(static_cast<Eigen::Index>(keep.size()));
  out.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.nodes(static_cast<Eigen::Index>(i)) = q.nodes(keep[i]);
    out.weights(static_cast<Eigen::Index>(i)) = q.weights(keep[i]);
  }
  return out;
}

}  // namespace sclab
