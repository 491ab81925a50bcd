#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sclab/anneal.hpp"
#include "sclab/barrier.hpp"
#include "sclab/grid.hpp"
#include "sclab/spectra.hpp"

namespace sclab {

enum class Suite { Gap, Overlap, Ims, ScCheck, Path, Anneal, Projector, Count };

struct SuiteInfo {
  Suite id;
  std::string_view name;
  std::string_view anchor;
  std::string_view summary;
};

inline constexpr std::array<SuiteInfo, static_cast<std::size_t>(Suite::Count)> kSuites{{
    {Suite::Gap, "gap", "spectral gap lower bounds (Euclidean and Hessian metric)",
     "lowest two eigenvalues across a gamma sweep against half the harmonic gap"},
    {Suite::Overlap, "overlap", "ground-state overlap with the harmonic approximation",
     "|<psi, psi0>| across a gamma sweep; must approach one monotonically"},
    {Suite::Ims, "ims", "IMS localization formula",
     "exact matrix identity plus the continuum gradient term under grid refinement"},
    {Suite::ScCheck, "sc-check", "self-concordance and barrier parameter",
     "third-derivative ratio and g^T H^-1 g on quasi-random interior samples"},
    {Suite::Path, "path", "central path duality bound and path stability",
     "eta schedule, c^T x_eta - val <= theta/eta, and Newton-decrement stability"},
    {Suite::Anneal, "anneal", "path following by pi/3 fixed-point rotations",
     "ground states along the schedule, pairwise overlaps, and the annealed output state"},
    {Suite::Projector, "projector", "Gaussian imaginary-time projector via Hubbard-Stratonovich",
     "quadrature projector against a dense oracle and the two-register circuit"},
}};

std::optional<Suite> parse_suite(std::string_view name);

struct Knobs {
  double kappa = 0.1;
  double c0 = 0.125;
  double degeneracy_rel = 1e-8;
  double kinetic_scale = 0.5;
  double tol = 1e-10;
  double sc_ratio_limit = 1.001;
  double path_constant = 3.0;
  double overlap_min = 0.99;
  double ims_decay_min = 3.0;
};

struct ExperimentSpec {
  std::string name;
  Suite suite = Suite::Gap;
  std::string barrier_yaml;  // descriptor as written, re-emitted
  Barrier barrier;
  Vec c;
  Mode mode = Mode::Euclidean;
  double eta = 1.0;
  std::vector<double> gammas;
  GridPolicy policy;
  Knobs knobs;
  std::string out_dir = "results";
  std::uint64_t seed = 1;
  int workers = 1;

  // sc-check
  int samples = 10000;
  std::optional<std::pair<Vec, Vec>> sample_box;
  // path / anneal
  double eps = 0.01;
  std::vector<double> deltas{0.01, 0.05, 0.1};
  std::optional<double> optimum;
  std::optional<Vec> argmin;
  AnnealMode anneal_mode = AnnealMode::Ideal;
  int emulated_points = 160;
  // projector
  int projector_dim = 64;
  double projector_t = 2.5;
  int quad_nodes = 40;
  double energy_error = 0.05;
};

// Throws ConfigError naming the offending field (and line when known).
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::string& path);

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  std::vector<Verdict> verdicts;
  std::string csv;
  std::string summary_json;
  std::string svg;  // empty when the suite has no plot
  bool numerical_failure = false;
  std::string error;
  int exit_code = 0;  // 0 pass, 1 verdict failure, 2 usage/config, 3 numerical
};

// Runs the suite; files are written to spec.out_dir when write_files is set.
RunResult run_experiment(const ExperimentSpec& spec, bool write_files = true);

// Operator H(eta) of the experiment at gamma on its policy grid.
DiscreteOperator spec_operator(const ExperimentSpec& spec, double gamma);

}  // namespace sclab
