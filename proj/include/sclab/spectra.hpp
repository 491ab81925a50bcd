#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sclab/centralpath.hpp"
#include "sclab/lanczos.hpp"
#include "sclab/operator.hpp"

namespace sclab {

struct SpectrumResult {
  Vec eigenvalues;  // ascending
  Vec residuals;
  Mat vectors;      // frame vectors, unit l2 norm
  Vec ground_state; // frame vector, largest-magnitude entry positive
  double degeneracy_tol = 0.0;
  int iterations = 0;
};

SpectrumResult lowest_eigenpairs(const DiscreteOperator& op, int k, double tol = 1e-10,
                                 const LanczosOptions& lanczos = {});

// lambda1 - lambda0; DegenerateSpectrumError when below the degeneracy tolerance.
double spectral_gap(const SpectrumResult& s);

struct HarmonicReference {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double gap = 0.0;
};

// -1/2 Laplacian + gamma^2/2 x^T A x: lambda0 = gamma/2 Tr sqrt(A), gap = gamma lambda_min(sqrt(A)).
// kinetic_scale rescales the kinetic term (s Laplacian): frequencies scale by sqrt(2 s).
HarmonicReference harmonic_reference(const Mat& A, double gamma, double kinetic_scale = 0.5);

struct ImsReport {
  double tier_a_residual = 0.0;  // relative to max |H_ij|
  double tier_b_discrepancy = 0.0;
  double partition_defect = 0.0;  // max |J^2 + Jbar^2 - 1|
};

// (a) JHJ + JbarHJbar - H + 1/2([J,[J,H]] + [Jbar,[Jbar,H]]) as sparse matrices.
// (b) max over smooth probes of ||(JHJ + JbarHJbar - H - D) u|| / ||u|| with D the
//     diagonal s (|grad J|^2_* + |grad Jbar|^2_*) using the dual metric.
ImsReport ims_identity_check(const DiscreteOperator& op, const BumpPair& bump);

struct ImsRefinement {
  ImsReport coarse, fine;
  double decay = 0.0;  // coarse.tier_b / fine.tier_b
};

// Runs ims_identity_check on grid and on the grid with spacing halved.
ImsRefinement ims_refinement_study(const std::function<DiscreteOperator(const Grid&)>& build, const Grid& grid,
                                   const Vec& z, const Mat& A, double gamma);

struct ConcentrationReport {
  double mass = 0.0;   // ||Jbar psi0||^2
  double bound = 0.0;  // 2 exp(-c0 t n)
  double c0 = 0.125;
  double t = 1.0;
  bool truncation_warning = false;
  bool passed = false;
};

ConcentrationReport concentration_check(const Mat& A, const Vec& z, double gamma, const BumpPair& bump,
                                        const Grid& grid, double t = 1.0, double c0 = 0.125);

struct DikinFormReport {
  std::vector<double> mass_ratio;    // <psi,psi>_R / <psi,psi>_z
  std::vector<double> energy_ratio;  // energy forms, Riemannian over frozen metric
  double mass_lo = 0.0, mass_hi = 0.0, energy_lo = 0.0, energy_hi = 0.0;
  double slack = 1e-3;
  bool passed = false;
};

// psi are node values on grid supported in {r_z <= r}. Forms use the Hessian metric of b
// at each node (Riemannian) against the metric frozen at z.
DikinFormReport dikin_form_comparison(const Barrier& b, const Vec& z, double r, const Grid& grid,
                                      const std::vector<Vec>& psi, double slack = 1e-3);

// Smooth test function supported in {r_z <= r}: c(2 r_z / r) with the bump profile.
Vec dikin_test_function(const Mat& gz, const Vec& z, double r, const Grid& grid, const Vec& offset);

struct OverlapReport {
  double overlap = 0.0;
  double lambda0_h = 0.0;
  double lambda0_h0 = 0.0;
};

// Euclidean: |<psi, psi0>|. Riemannian: |<psi, J psi0 / ||J psi0||>_R| with both
// normalized in the weighted product of opH. opH0 is the harmonic comparison
// operator on the same grid.
OverlapReport ground_overlap_check(const DiscreteOperator& opH, const DiscreteOperator& opH0, const BumpPair& bump,
                                   Mode mode, double tol = 1e-10);

struct GapRow {
  double gamma = 0.0;
  double lambda0 = 0.0, lambda1 = 0.0, gap = 0.0;
  double lambda0_ref = 0.0, gap_ref = 0.0, bound = 0.0;
  bool bound_satisfied = false;
  long nodes = 0;
  int iterations = 0;
  std::string error;
};

struct GapSummary {
  std::vector<GapRow> rows;
  double gamma_threshold_observed = 0.0;  // smallest gamma from which every row passes; inf if none
  double min_margin = 0.0;                // min over rows at or above the threshold of gap/bound - 1
};

struct GapOptions {
  OperatorOptions op;
  GridPolicy policy;
  double tol = 1e-10;
  // Gap below degeneracy_rel * max(1, |lambda0|) counts as degenerate.
  double degeneracy_rel = 1e-8;
  int workers = 1;
};

// Potential eta c^T x + f minimized at z; A its Hessian there.
GapSummary gap_experiment(const Barrier& b, const Vec& c, double eta, Mode mode, const std::vector<double>& gammas,
                          const GapOptions& opt = {});

// Minimizer z of eta c^T x + f and its Hessian.
std::pair<Vec, Mat> potential_minimizer(const Barrier& b, const Vec& c, double eta);

DiscreteOperator build_operator(Mode mode, const Barrier& b, const Vec& c, double eta, const Grid& grid,
                                double gamma, const OperatorOptions& opt = {});

}  // namespace sclab
