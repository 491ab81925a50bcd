#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "sclab/barrier.hpp"

namespace sclab {

struct PathPoint {
  double eta = 0.0;
  Vec x;
  double newton_decrement = 0.0;
  Mat hessian_at_x;
  int iterations = 0;
};

struct EtaSchedule {
  std::vector<double> etas;
  Mode mode = Mode::Riemannian;
  double kappa = 0.1;
  double gamma = 1.0;
  double theta = 1.0;
  double eps = 0.01;
  int dim = 1;
  // chi_l used for the ratio out of eta_l (one per entry; the last is unused).
  std::vector<double> chis;
  // Centered points x_{eta_l}; empty when no start point was supplied.
  std::vector<PathPoint> centers;

  int steps() const { return static_cast<int>(etas.size()) - 1; }
};

double newton_decrement(const Barrier& b, const Vec& c, double eta, const Vec& x);

// Damped Newton on eta c^T x + f from x0 until the decrement is <= tol.
PathPoint center(const Barrier& b, const Vec& c, double eta, const Vec& x0, double tol = 1e-10,
                 int max_iter = 500);

struct PathStabilityReport {
  double eta = 0.0;
  double eta_prime = 0.0;
  double delta = 0.0;
  double distance = 0.0;
  double limit = 0.0;
  bool passed = false;
};

PathStabilityReport check_path_stability(const Barrier& b, const Vec& c, double eta, double eta_prime,
                                         double delta, const Vec& x0, double constant = 3.0);

struct DualityGapReport {
  double gap = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool passed = false;
};

DualityGapReport duality_gap_check(const Barrier& b, const Vec& c, const PathPoint& p, double val);

// eta_{l+1} = eta_l (1 + kappa / sqrt((n + 2 gamma chi_l) theta)) from eta0 until >= theta / eps.
// Euclidean chi_l = ||H(x_{eta_l})^{-1/2}||, which needs x0 to center from.
EtaSchedule eta_schedule(const Barrier& b, const Vec& c, double gamma, double eps, double kappa, Mode mode,
                         const std::optional<Vec>& x0 = std::nullopt, double eta0 = 1.0,
                         double center_tol = 1e-10);

double gaussian_tv_bound(const Vec& mu1, const Mat& S1, const Vec& mu2, const Mat& S2);

// Covariance of the harmonic ground-state density at a point with Hessian g:
// (2 gamma g^{1/2})^{-1} Euclidean, (2 gamma g)^{-1} Riemannian.
Mat harmonic_covariance(const Mat& g, double gamma, Mode mode);

double ground_overlap_bound(const Barrier& b, const Vec& x, const Vec& y, double gamma, Mode mode);

struct OverlapBracket {
  double lower = 0.0;
  double upper = 0.0;
  double overlap = 0.0;
  double tv = 0.0;
};

// u, v are densities on a grid with uniform cell volume; each must integrate to 1.
OverlapBracket hellinger_overlap_bracket(const Vec& u, const Vec& v, double cell_volume);

// Rows: eta, x..., decrement, gap_bound, gap_actual.
void write_path_csv(std::ostream& os, const Vec& c, const EtaSchedule& s, double val);

}  // namespace sclab
