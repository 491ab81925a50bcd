#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sclab/grid.hpp"

namespace sclab {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class OperatorKind { Euclidean, Riemannian, Harmonic };

const char* kind_name(OperatorKind k);

struct OperatorOptions {
  // Multiplier on the kinetic term; 0.5 gives -1/2 Laplacian.
  double kinetic_scale = 0.5;
  // Subtracted from the potential before scaling by gamma^2.
  double potential_shift = 0.0;
};

// Discretized Schrodinger operator in the symmetric frame. Vectors in the frame
// are u = psi * sqrt(measure), so the plain l2 product equals the (weighted)
// grid L2 product of node functions psi.
struct DiscreteOperator {
  SpMat matrix;
  std::optional<Vec> weight;  // sqrt det g per node (Riemannian)
  double gamma = 1.0;
  OperatorKind kind = OperatorKind::Euclidean;
  Grid grid;
  Vec potential;  // gamma^2 * (V - shift) at nodes
  double kinetic_scale = 0.5;
  std::vector<Mat> inv_metric;  // g^{-1} per node (Riemannian)

  long size() const { return grid.size(); }
  Vec measure() const;
  Vec to_frame(const Vec& psi) const;
  Vec from_frame(const Vec& u) const;
};

DiscreteOperator build_euclidean(const Barrier& b, const Vec& c, double eta, const Grid& grid, double gamma,
                                 const OperatorOptions& opt = {});
DiscreteOperator build_riemannian(const Barrier& b, const Vec& c, double eta, const Grid& grid, double gamma,
                                  const OperatorOptions& opt = {});
DiscreteOperator build_harmonic(const Mat& A, const Vec& z, const Grid& grid, double gamma,
                                const OperatorOptions& opt = {});

// Largest asymmetry |S_ij - S_ji| relative to max |S_ij|.
double symmetry_defect(const SpMat& S);

// exp(-gamma/2 (x-z)^T sqrt(A) (x-z)) at the nodes, normalized so that
// sum psi^2 * weight * cell_volume = 1. Returns node values.
Vec gaussian_ground_state(const Mat& A, const Vec& z, double gamma, const Grid& grid,
                          const std::optional<Vec>& weight = std::nullopt);

// Smooth partition of unity pieces.
double bump_a(double x);
double bump_b(double x);
double bump_c(double s);
double bump_c_prime(double s);
// j(t) = sin(pi/2 c(t gamma^{2/5})), jbar = cos(...).
double bump_j(double t, double gamma);
double bump_jbar(double t, double gamma);
double bump_j_prime(double t, double gamma);
double bump_jbar_prime(double t, double gamma);

struct BumpPair {
  Vec J, Jbar;
  Vec r;  // r_z at each node
  double radius_inner = 0.0;
  double radius_outer = 0.0;
  Vec z;
  Mat A;
  double gamma = 1.0;

  // Analytic gradient of J (or Jbar) at node positions, one column per node.
  Mat grad_J(const Grid& grid, bool bar = false) const;
};

BumpPair bump_pair(const Vec& z, const Mat& A, double gamma, const Grid& grid);

struct LogHelperResult {
  double x0 = 0.0;
  double c = 0.0;
  double bound = 0.0;  // c y log^alpha(y)
};

// Smallest x0 (3 significant digits, rounded up) with x >= y log^alpha(x) for all x >= x0.
LogHelperResult log_helper_threshold(double y, double alpha);

struct RegionReport {
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
  double support_max = 0.0;  // inner check only: unweighted max over supp J
};

// Norm of the multiplication operator gamma^2 J (V - V(z) - q) J, q(x) = 1/2 (x-z)^T A (x-z),
// against 8/3 gamma^{4/5}.
RegionReport inner_region_check(const Barrier& potential, const BumpPair& bump, const Grid& grid);
// max over nodes of central-difference |grad J|^2 and |grad Jbar|^2 against 13 ||A|| gamma^{4/5}.
RegionReport boundary_gradient_check(const BumpPair& bump, const Grid& grid);
// min over probes of <Jbar u, H Jbar u> / <Jbar u, Jbar u> against 1/4 gamma^{6/5}.
// The operator potential must vanish at the bump center.
RegionReport outer_region_check(const DiscreteOperator& op, const BumpPair& bump, int probes, unsigned seed);

// Header "rows cols nnz", then one "i j value" line per stored entry (0-based).
void dump_operator(std::ostream& os, const DiscreteOperator& op);

}  // namespace sclab
