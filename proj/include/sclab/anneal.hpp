#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sclab/centralpath.hpp"
#include "sclab/krylov.hpp"
#include "sclab/operator.hpp"
#include "sclab/quadrature.hpp"

namespace sclab {

// Unit vector in the symmetric frame of some grid operator.
struct QuantumState {
  CVec amplitudes;
  std::optional<Vec> weight;

  QuantumState() = default;
  explicit QuantumState(CVec a, std::optional<Vec> w = std::nullopt);

  double norm() const { return amplitudes.norm(); }
  std::complex<double> inner(const QuantumState& other) const { return amplitudes.dot(other.amplitudes); }
};

// state + (e^{sign i pi/3} - 1) target <target, state>.
QuantumState pi3_rotation(const QuantumState& state, const QuantumState& target, int sign = +1);
CVec pi3_rotation(const CVec& state, const CVec& target, int sign = +1);

struct ProjectorConfig {
  double t = 1.0;
  double lambda0_estimate = 0.0;
  int quad_nodes = 40;
  double z_truncation = 8.0;
  // Compare against a run with twice the nodes and fail above drift_tol.
  bool check_resolution = true;
  double drift_tol = 1e-6;
  KrylovOptions krylov;
  int workers = 1;
};

// Smallest t with t >= c log(1/delta) / gap^2.
double projector_time(double gap, double delta, double c = 1.0);

struct ProjectorReport {
  double drift = 0.0;  // relative to ||state||
  int nodes_used = 0;
  int krylov_substeps = 0;
};

// exp(-t (H - lambda)^2) state as sum_k w_k exp(-i sqrt(2t) (H - lambda) z_k) state.
// Not normalized. Throws NumericalError when the node-doubling drift exceeds cfg.drift_tol.
CVec hs_projector_apply(const SpMat& H, const ProjectorConfig& cfg, const CVec& state,
                        ProjectorReport* report = nullptr);

struct EmulationReport {
  CVec output;                 // system part of the ancilla-restored branch (norm <= 1)
  CVec reference;              // pi3_rotation(state, ground, sign)
  double trace_distance = 0.0; // reduced system state against the reference
  double joint_distance = 0.0; // sqrt(1 - |<joint, reference x ancilla>|^2)
  double ancilla_restoration = 0.0;  // ||output||^2
  double drift = 0.0;
};

// Full two-register circuit with the ancilla on the truncated quadrature nodes.
EmulationReport two_register_emulation(const SpMat& H, const ProjectorConfig& cfg, const CVec& state,
                                       const CVec& ground, int sign = +1);

// Multilinear interpolation of node values on `from` (zero on its boundary ring) at `to`'s nodes.
Vec interpolate_nodes(const Grid& from, const Vec& values, const Grid& to);

struct PathStates {
  Grid common;
  Vec common_measure;           // weight * cell volume on the common grid
  std::vector<Grid> grids;      // per-eta grids
  std::vector<CVec> states;     // ground states on the common grid, frame vectors (empty unless kept)
  std::vector<double> overlaps; // |<psi_l, psi_{l+1}>|
  std::vector<double> interpolation_errors;  // | ||I psi_l|| - 1 | before renormalization
  std::vector<double> lambda0, gaps;
  double w_star = 1.0;
  int completed = 0;  // states computed before an abort
  std::string abort_reason;
};

struct PathOptions {
  GridPolicy policy;
  OperatorOptions op;
  double tol = 1e-10;
  bool keep_states = true;
  // Common grid spacing never finer than this multiple of the smallest per-eta spacing.
  double common_refinement = 1.0;
  long max_common_nodes = 2'000'000;
};

PathStates quantum_central_path(const Barrier& b, const Vec& c, double gamma, const EtaSchedule& schedule,
                                Mode mode, const PathOptions& opt = {});

enum class AnnealMode { Ideal, Emulated };

enum class EnergyEstimate { Eigensolve, Harmonic };

struct AnnealOptions {
  double kappa = 0.1;
  AnnealMode run_mode = AnnealMode::Ideal;
  EnergyEstimate energy = EnergyEstimate::Eigensolve;
  PathOptions path;
  std::optional<int> depth_override;
  // Emulated mode: the operators are rebuilt on a common grid with this many points per axis.
  int emulated_points = 160;
  ProjectorConfig projector;
  double projector_delta = 1e-8;
  std::optional<Vec> argmin;  // true minimizer for the position-mean check
};

struct AnnealTrace {
  EtaSchedule schedule;
  std::vector<double> pairwise_overlaps;
  std::vector<double> per_step_errors;   // 1 - |<state_{l+1}, psi_{l+1}>|
  std::vector<double> interpolation_errors;
  double w_star = 1.0;
  int depth = 0;
  long rotations_used = 0;
  double rotation_constant = 0.0;  // rotations_used / (4 T log(T / eps))
  double final_fidelity = 0.0;
  Vec position_mean;
  double position_distance = 0.0;
  double position_bound = 0.0;
  bool position_ok = false;
  long common_nodes = 0;
  std::vector<std::string> surrogates;
  std::string mode;
};

// Smallest depth d >= 0 with T (1 - w^2)^{3^d / 2} <= eps.
int pi3_depth(double eps, int steps, double w_star);
inline long pi3_rotations_per_step(int depth) {
  long r = 1;
  for (int i = 0; i < depth; ++i) r *= 3;
  return r - 1;
}

// U_d applied to v with U_0 = I and U_d = U_{d-1} R_s U_{d-1}^dag R_t U_{d-1}.
CVec pi3_recursion(const CVec& v, const CVec& source, const CVec& target, int depth, bool adjoint = false);

AnnealTrace run_annealing(const Barrier& b, const Vec& c, double gamma, double eps, Mode mode,
                          const AnnealOptions& opt = {});

}  // namespace sclab
