#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sclab/common.hpp"

namespace YAML {
class Node;
}

namespace sclab {

// A self-concordant function given by its value/gradient/Hessian evaluators.
// All evaluators are pure; they assume domain_test(x) holds.
struct Barrier {
  int dim = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  double theta = kInf;
  std::function<bool(const Vec&)> domain_test;
  // Smallest facet slack b_i - a_i^T x (+inf for unconstrained instances).
  std::function<double(const Vec&)> slack;
  std::string name;
  // Axis-aligned box containing the domain, when it is bounded.
  std::optional<std::pair<Vec, Vec>> bounds;
  // A known interior point (vertex centroid for polytopes).
  std::optional<Vec> start;
};

struct LocalGeometry {
  Vec center;
  Mat metric;
  double radius = 0.0;
};

Barrier interval_barrier(double lo, double hi);
Barrier box_barrier(const Vec& lo, const Vec& hi);
// -sum log(b - A x); theta = number of rows.
Barrier polytope_barrier(const Mat& A, const Vec& b);
// -log x on (0, inf).
Barrier halfline_barrier();
// 1/2 (x - z)^T Q (x - z) on all of R^n (theta = inf).
Barrier quadratic_potential(const Mat& Q, const Vec& z);
// x^4 on (-1, 1): convex but not self-concordant near 0.
Barrier quartic_counterexample();

// eta c^T x + f(x); Hessian unchanged.
Barrier with_linear_objective(const Barrier& b, const Vec& c, double eta);
// x -> f(T x + s).
Barrier affine_pullback(const Barrier& b, const Mat& T, const Vec& s);
// f + constant.
Barrier shifted(const Barrier& b, double constant);

// start if set, else the middle of bounds; throws PreconditionError when neither is interior.
Vec interior_point(const Barrier& b);

// Throws DomainError when x is outside the open domain.
void require_interior(const Barrier& b, const Vec& x);

double local_norm(const Barrier& b, const Vec& x, const Vec& v);
bool dikin_contains(const Barrier& b, const Vec& x, const Vec& y);
LocalGeometry local_geometry(const Barrier& b, const Vec& x, double radius);

struct SelfConcordanceReport {
  double max_ratio = 0.0;
  Vec worst_x;
  Vec worst_u;
  int checked = 0;
  int unverifiable = 0;
  double fd_tolerance = 1e-4;
  bool passed = false;
};

struct SamplePair {
  Vec x;
  Vec u;
};

// D3 of t -> f(x + t u) from central differences of u^T H(x + t u) u.
SelfConcordanceReport check_self_concordance(const Barrier& b,
                                             const std::vector<SamplePair>& samples,
                                             double fd_tolerance = 1e-4);

struct HessianStabilityReport {
  double r = 0.0;
  double lower = 1.0;
  double upper = 1.0;
  std::vector<double> ratios;
  double worst_margin = 0.0;
  bool passed = false;
};

HessianStabilityReport check_hessian_stability(const Barrier& b, const Vec& x, const Vec& y,
                                               const std::vector<Vec>& probes);

double barrier_parameter_estimate(const Barrier& b, const std::vector<Vec>& samples);

// The first `count` quasi-random points of [lo, hi] that lie in the domain with slack >= min_slack.
std::vector<Vec> sobol_interior_samples(const Barrier& b, const Vec& lo, const Vec& hi,
                                        int count, double min_slack = 1e-9);
std::vector<Vec> sobol_interior_samples(const Barrier& b, int count, double min_slack = 1e-9);

// Builds a barrier from a config node: {kind: interval|box|polytope|halfline|quadratic|quartic, ...}
// with an optional linear `transform` (matrix) and `offset` applied by pullback.
Barrier barrier_from_config(const YAML::Node& node);

}  // namespace sclab
