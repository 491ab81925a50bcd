#pragma once

#include <vector>

#include "sclab/barrier.hpp"

namespace sclab {

// Uniform tensor grid of interior nodes; lo/hi carry the Dirichlet boundary.
// Node (k_0, ..., k_{d-1}) sits at lo + (k + 1) h and has linear index
// k_0 + n_0 (k_1 + n_1 k_2), axis 0 fastest.
struct Grid {
  int dim = 0;
  Vec lo, hi;
  std::vector<int> npts;

  Grid() = default;
  Grid(const Vec& lo, const Vec& hi, std::vector<int> npts);

  double spacing(int axis) const { return (hi(axis) - lo(axis)) / (npts[static_cast<std::size_t>(axis)] + 1); }
  Vec spacings() const;
  long size() const;
  double cell_volume() const;
  Vec node(long index) const;
  std::vector<int> multi_index(long index) const;
  long linear_index(const std::vector<int>& k) const;
  // Coordinates of all nodes, one per column.
  Mat nodes() const;
};

// Throws DomainError when a box corner has slack below min_slack, or
// PreconditionError when the grid exceeds the node cap.
void validate_grid(const Grid& grid, const Barrier& b, double min_slack = 1e-6, long max_nodes = 4'000'000);

struct GridPolicy {
  double sigma_multiple = 8.0;
  double dikin_multiple = 2.5;
  double points_per_sigma = 12.0;
  int min_points = 32;
  int max_points_per_axis = 4000;
  long max_nodes = 400'000;
  double box_scale = 1.0;
  double slack = 1e-6;
};

// Box z +- max(sigma_multiple * sigma_i, dikin_multiple * gamma^{-2/5} sqrt((A^{-1})_ii)) per axis,
// sigma_i from the harmonic ground state ((2 gamma sqrt A)^{-1} Euclidean, (2 gamma A)^{-1}
// Riemannian), clipped to the domain of b with the policy slack.
Grid policy_grid(const Barrier& b, const Vec& z, const Mat& A, double gamma, Mode mode,
                 const GridPolicy& policy = {});

}  // namespace sclab
