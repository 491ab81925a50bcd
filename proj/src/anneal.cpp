#include "sclab/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <tuple>

#include "sclab/parallel.hpp"
#include "sclab/spectra.hpp"

namespace sclab {

namespace {

using cd = std::complex<double>;

cd omega(int sign) { return std::polar(1.0, sign * std::numbers::pi / 3.0); }

double potential_at(const Barrier& b, const Vec& c, double eta, const Vec& x) { return b.value(x) + eta * c.dot(x); }

Vec node_measure(const Grid& g, const Barrier& b, Mode mode) {
  Vec m = Vec::Constant(g.size(), g.cell_volume());
  if (mode == Mode::Riemannian) {
    for (long i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      if (!b.domain_test(x)) {
        m(i) = 0.0;
        continue;
      }
      m(i) *= std::sqrt(std::max(0.0, b.hessian(x).determinant()));
    }
  }
  return m;
}

// Ground state of H(eta) as node values on its own grid.
struct GroundState {
  Grid grid;
  Vec psi;
  double lambda0 = 0.0;
  double gap = 0.0;
  Vec z;
  Mat A;
};

GroundState solve_ground(const Barrier& b, const Vec& c, double eta, double gamma, Mode mode, const Grid& grid,
                         const Vec& z, const Mat& A, const PathOptions& opt) {
  OperatorOptions oo = opt.op;
  oo.potential_shift = potential_at(b, c, eta, z);
  const DiscreteOperator op = build_operator(mode, b, c, eta, grid, gamma, oo);
  const SpectrumResult s = lowest_eigenpairs(op, 2, opt.tol);
  GroundState g;
  g.grid = grid;
  g.psi = op.from_frame(s.ground_state);
  g.lambda0 = s.eigenvalues(0);
  g.gap = spectral_gap(s);
  g.z = z;
  g.A = A;
  return g;
}

Grid union_grid(const std::vector<Grid>& grids, double refinement, long max_nodes) {
  const int n = grids.front().dim;
  Vec lo = grids.front().lo, hi = grids.front().hi;
  Vec h = grids.front().spacings();
  for (const Grid& g : grids) {
    lo = lo.cwiseMin(g.lo);
    hi = hi.cwiseMax(g.hi);
    h = h.cwiseMin(g.spacings());
  }
  std::vector<int> npts(static_cast<std::size_t>(n));
  long total = 1;
  for (int a = 0; a < n; ++a) {
    const double step = h(a) * refinement;
    const long k = std::max<long>(1, static_cast<long>(std::ceil((hi(a) - lo(a)) / step)) - 1);
    if (k > 50'000'000) throw PreconditionError("quantum_central_path: common grid too fine");
    npts[static_cast<std::size_t>(a)] = static_cast<int>(k);
    total *= k;
  }
  if (total > max_nodes) {
    std::ostringstream os;
    os << "quantum_central_path: common grid needs " << total << " nodes (cap " << max_nodes << ")";
    throw PreconditionError(os.str());
  }
  return Grid(lo, hi, npts);
}

CVec to_common(const GroundState& g, const Grid& common, const Vec& measure, double* interp_error) {
  const Vec v = interpolate_nodes(g.grid, g.psi, common);
  CVec u = (v.array() * measure.array().sqrt()).matrix().cast<cd>();
  const double nrm = u.norm();
  if (interp_error) *interp_error = std::abs(nrm - 1.0);
  if (nrm == 0.0) throw NumericalError("quantum_central_path: ground state vanishes on the common grid");
  return u / nrm;
}

}  // namespace

QuantumState::QuantumState(CVec a, std::optional<Vec> w) : amplitudes(std::move(a)), weight(std::move(w)) {
  const double n = amplitudes.norm();
  if (n == 0.0) throw PreconditionError("QuantumState: zero vector");
  amplitudes /= n;
}

CVec pi3_rotation(const CVec& state, const CVec& target, int sign) {
  return state + (omega(sign) - 1.0) * target.dot(state) * target;
}

QuantumState pi3_rotation(const QuantumState& state, const QuantumState& target, int sign) {
  QuantumState out = state;
  out.amplitudes = pi3_rotation(state.amplitudes, target.amplitudes, sign);
  return out;
}

double projector_time(double gap, double delta, double c) {
  if (!(gap > 0.0) || !(delta > 0.0 && delta < 1.0)) throw PreconditionError("projector_time: need gap > 0, 0 < delta < 1");
  return c * std::log(1.0 / delta) / (gap * gap);
}

namespace {

CVec hs_sum(const SpMat& H, const ProjectorConfig& cfg, const CVec& state, int count, int* substeps) {
  const Quadrature q = truncate_nodes(gauss_hermite(count), cfg.z_truncation);
  const int K = static_cast<int>(q.nodes.size());
  const double scale = std::sqrt(2.0 * cfg.t);
  std::vector<CVec> terms(static_cast<std::size_t>(K));
  std::vector<int> steps(static_cast<std::size_t>(K), 0);
  parallel_for(K, cfg.workers, [&](int k) {
    terms[static_cast<std::size_t>(k)] =
        expm_krylov(H, cfg.lambda0_estimate, scale * q.nodes(k), state, cfg.krylov, &steps[static_cast<std::size_t>(k)]);
  });
  CVec sum = CVec::Zero(state.size());
  for (int k = 0; k < K; ++k) sum += q.weights(k) * terms[static_cast<std::size_t>(k)];
  if (substeps)
    for (int s : steps) *substeps += s;
  return sum;
}

}  // namespace

CVec hs_projector_apply(const SpMat& H, const ProjectorConfig& cfg, const CVec& state, ProjectorReport* report) {
  if (cfg.t < 0.0) throw PreconditionError("hs_projector_apply: t must be nonnegative");
  if (cfg.quad_nodes < 1) throw PreconditionError("hs_projector_apply: quad_nodes must be positive");
  if (state.size() != H.rows()) throw PreconditionError("hs_projector_apply: state size mismatch");
  int substeps = 0;
  CVec out = hs_sum(H, cfg, state, cfg.quad_nodes, &substeps);
  double drift = 0.0;
  if (cfg.check_resolution) {
    const CVec fine = hs_sum(H, cfg, state, 2 * cfg.quad_nodes, &substeps);
    drift = (fine - out).norm() / std::max(state.norm(), 1e-300);
    if (drift > cfg.drift_tol) {
      std::ostringstream os;
      os << "hs_projector_apply: quadrature drift " << drift << " exceeds " << cfg.drift_tol << " with "
         << cfg.quad_nodes << " nodes; increase quad_nodes or reduce t";
      throw NumericalError(os.str());
    }
  }
  if (report) {
    report->drift = drift;
    report->nodes_used = cfg.quad_nodes;
    report->krylov_substeps = substeps;
  }
  return out;
}

EmulationReport two_register_emulation(const SpMat& H, const ProjectorConfig& cfg, const CVec& state,
                                       const CVec& ground, int sign) {
  ProjectorReport pr;
  const CVec chi = hs_projector_apply(H, cfg, state, &pr);
  const Quadrature q = truncate_nodes(gauss_hermite(cfg.quad_nodes), cfg.z_truncation);
  const int K = static_cast<int>(q.nodes.size());
  const Vec w = q.weights / q.weights.sum();
  const double scale = std::sqrt(2.0 * cfg.t);
  const cd om1 = omega(sign) - 1.0;

  // Branch k of the joint state after the inverse controlled evolution:
  // sqrt(w_k) [phi + (omega - 1) exp(-i sqrt(2t) (H - lambda) z_k) chi].
  CMat V(state.size(), K);
  parallel_for(K, cfg.workers, [&](int k) {
    V.col(k) = std::sqrt(w(k)) *
               (state + om1 * expm_krylov(H, cfg.lambda0_estimate, -scale * q.nodes(k), chi, cfg.krylov));
  });

  EmulationReport rep;
  rep.drift = pr.drift;
  rep.reference = pi3_rotation(state, ground, sign);
  rep.output = V * w.cwiseSqrt().cast<cd>();
  rep.ancilla_restoration = rep.output.squaredNorm();
  const double joint = std::abs(rep.reference.dot(rep.output));
  rep.joint_distance = std::sqrt(std::max(0.0, 1.0 - joint * joint));

  // Trace distance of sum_k v_k v_k^dag against tau tau^dag inside span{V, tau}.
  CMat B(state.size(), K + 1);
  B << V, rep.reference;
  Eigen::HouseholderQR<CMat> qr(B);
  const CMat Q = qr.householderQ() * CMat::Identity(state.size(), std::min<long>(K + 1, state.size()));
  const CMat Vq = Q.adjoint() * V;
  const CVec tq = Q.adjoint() * rep.reference;
  const CMat D = Vq * Vq.adjoint() - tq * tq.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es(D);
  rep.trace_distance = 0.5 * es.eigenvalues().cwiseAbs().sum();
  return rep;
}

Vec interpolate_nodes(const Grid& from, const Vec& values, const Grid& to) {
  if (from.dim != to.dim) throw PreconditionError("interpolate_nodes: dimension mismatch");
  if (values.size() != from.size()) throw PreconditionError("interpolate_nodes: value count mismatch");
  const int n = from.dim;
  const Vec h = from.spacings();
  Vec out = Vec::Zero(to.size());
  std::vector<int> base(static_cast<std::size_t>(n)), k(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (long i = 0; i < to.size(); ++i) {
    const Vec x = to.node(i);
    bool inside = true;
    for (int a = 0; a < n && inside; ++a) {
      // Extended index: 0 and npts+1 are the zero boundary ring.
      const double s = (x(a) - from.lo(a)) / h(a);
      const int np = from.npts[static_cast<std::size_t>(a)];
      if (s <= 0.0 || s >= np + 1) {
        inside = false;
        break;
      }
      const int f = std::min(static_cast<int>(std::floor(s)), np);
      base[static_cast<std::size_t>(a)] = f;
      frac[static_cast<std::size_t>(a)] = s - f;
    }
    if (!inside) continue;
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
      double wgt = 1.0;
      bool zero = false;
      for (int a = 0; a < n; ++a) {
        const int bit = (corner >> a) & 1;
        const int e = base[static_cast<std::size_t>(a)] + bit;
        const double fa = frac[static_cast<std::size_t>(a)];
        wgt *= bit ? fa : 1.0 - fa;
        if (e == 0 || e == from.npts[static_cast<std::size_t>(a)] + 1) zero = true;
        k[static_cast<std::size_t>(a)] = e - 1;
      }
      if (zero || wgt == 0.0) continue;
      acc += wgt * values(from.linear_index(k));
    }
    out(i) = acc;
  }
  return out;
}

PathStates quantum_central_path(const Barrier& b, const Vec& c, double gamma, const EtaSchedule& schedule,
                                Mode mode, const PathOptions& opt) {
  if (schedule.etas.empty()) throw PreconditionError("quantum_central_path: empty schedule");
  PathStates out;
  const std::size_t L = schedule.etas.size();
  std::vector<Vec> zs(L);
  std::vector<Mat> As(L);
  out.grids.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    auto [z, A] = potential_minimizer(b, c, schedule.etas[l]);
    out.grids[l] = policy_grid(b, z, A, gamma, mode, opt.policy);
    zs[l] = std::move(z);
    As[l] = std::move(A);
  }
  out.common = union_grid(out.grids, opt.common_refinement, opt.max_common_nodes);
  out.common_measure = node_measure(out.common, b, mode);

  CVec prev;
  for (std::size_t l = 0; l < L; ++l) {
    CVec cur;
    try {
      const GroundState g = solve_ground(b, c, schedule.etas[l], gamma, mode, out.grids[l], zs[l], As[l], opt);
      double ie = 0.0;
      cur = to_common(g, out.common, out.common_measure, &ie);
      out.interpolation_errors.push_back(ie);
      out.lambda0.push_back(g.lambda0);
      out.gaps.push_back(g.gap);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "eta[" << l << "] = " << schedule.etas[l] << ": " << e.what();
      out.abort_reason = os.str();
      break;
    }
    if (l > 0) out.overlaps.push_back(std::abs(prev.dot(cur)));
    if (opt.keep_states) out.states.push_back(cur);
    prev = std::move(cur);
    ++out.completed;
  }
  out.w_star = out.overlaps.empty() ? 1.0 : *std::min_element(out.overlaps.begin(), out.overlaps.end());
  return out;
}

int pi3_depth(double eps, int steps, double w_star) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("pi3_depth: eps must lie in (0, 1)");
  if (steps < 1) return 0;
  const double p = w_star * w_star;
  if (p >= 1.0) return 0;
  if (p <= 0.0) throw PreconditionError("pi3_depth: w* must be positive");
  // Per-step amplitude error (1 - p)^{3^d / 2}; the T steps add up in amplitude.
  const double ratio = 2.0 * std::log(eps / steps) / std::log(1.0 - p);
  if (ratio <= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log(ratio) / std::log(3.0) - 1e-12));
}

namespace {

using Rotation = std::function<CVec(const CVec&, bool target, int sign)>;

CVec recurse(const CVec& v, int d, bool adjoint, const Rotation& rot) {
  if (d == 0) return v;
  if (!adjoint) {
    CVec w = recurse(v, d - 1, false, rot);
    w = rot(w, true, +1);
    w = recurse(w, d - 1, true, rot);
    w = rot(w, false, +1);
    return recurse(w, d - 1, false, rot);
  }
  CVec w = recurse(v, d - 1, true, rot);
  w = rot(w, false, -1);
  w = recurse(w, d - 1, false, rot);
  w = rot(w, true, -1);
  return recurse(w, d - 1, true, rot);
}

}  // namespace

CVec pi3_recursion(const CVec& v, const CVec& source, const CVec& target, int depth, bool adjoint) {
  const Rotation rot = [&](const CVec& x, bool t, int sign) { return pi3_rotation(x, t ? target : source, sign); };
  return recurse(v, depth, adjoint, rot);
}

AnnealTrace run_annealing(const Barrier& b, const Vec& c, double gamma, double eps, Mode mode,
                          const AnnealOptions& opt) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("run_annealing: eps must lie in (0, 1)");
  AnnealTrace tr;
  tr.mode = opt.run_mode == AnnealMode::Ideal ? "ideal" : "emulated";
  tr.surrogates = {"initial_state=eigensolve",
                   opt.energy == EnergyEstimate::Eigensolve ? "energy_estimate=eigensolve" : "energy_estimate=harmonic",
                   opt.run_mode == AnnealMode::Ideal ? "rotation=exact_projector"
                                                     : "controlled_evolution=krylov_exponential"};
  tr.schedule = eta_schedule(b, c, gamma, eps, opt.kappa, mode, interior_point(b));
  const EtaSchedule& sch = tr.schedule;
  const int T = sch.steps();
  const std::size_t L = sch.etas.size();

  // Certification pass: ground states along the path on the common grid.
  PathOptions po = opt.path;
  po.keep_states = false;
  PathStates ps = quantum_central_path(b, c, gamma, sch, mode, po);
  if (!ps.abort_reason.empty()) throw NumericalError("run_annealing: path eigensolve failed at " + ps.abort_reason);
  tr.pairwise_overlaps = ps.overlaps;
  tr.interpolation_errors = ps.interpolation_errors;
  tr.w_star = ps.w_star;
  if (T > 0 && tr.w_star < 0.5) {
    std::ostringstream os;
    os << "run_annealing: path not certified, w* = " << tr.w_star << " < 1/2";
    throw PreconditionError(os.str());
  }
  tr.depth = opt.depth_override ? *opt.depth_override : pi3_depth(eps, std::max(T, 1), tr.w_star);

  std::vector<Vec> zs(L);
  std::vector<Mat> As(L);
  for (std::size_t l = 0; l < L; ++l) std::tie(zs[l], As[l]) = potential_minimizer(b, c, sch.etas[l]);

  Grid grid = ps.common;
  Vec measure = ps.common_measure;
  if (opt.run_mode == AnnealMode::Emulated) {
    grid = Grid(ps.common.lo, ps.common.hi, std::vector<int>(static_cast<std::size_t>(b.dim), opt.emulated_points));
    measure = node_measure(grid, b, mode);
  }
  tr.common_nodes = grid.size();

  struct Stage {
    CVec psi;
    DiscreteOperator op;
    double lambda0 = 0.0, gap = 0.0;
  };
  auto stage = [&](std::size_t l) {
    Stage s;
    if (opt.run_mode == AnnealMode::Ideal) {
      const GroundState g = solve_ground(b, c, sch.etas[l], gamma, mode, ps.grids[l], zs[l], As[l], opt.path);
      s.psi = to_common(g, grid, measure, nullptr);
      s.lambda0 = g.lambda0;
      s.gap = g.gap;
    } else {
      OperatorOptions oo = opt.path.op;
      oo.potential_shift = potential_at(b, c, sch.etas[l], zs[l]);
      s.op = build_operator(mode, b, c, sch.etas[l], grid, gamma, oo);
      const SpectrumResult sr = lowest_eigenpairs(s.op, 2, opt.path.tol);
      s.psi = sr.ground_state.cast<cd>();
      s.lambda0 = sr.eigenvalues(0);
      s.gap = spectral_gap(sr);
    }
    return s;
  };

  // Emulated runs rotate about the ground states of the operators they evolve
  // with, so the path is recertified on the common grid.
  std::vector<Stage> stages;
  if (opt.run_mode == AnnealMode::Emulated) {
    for (std::size_t l = 0; l < L; ++l) stages.push_back(stage(l));
    tr.pairwise_overlaps.clear();
    for (std::size_t l = 0; l + 1 < L; ++l) tr.pairwise_overlaps.push_back(std::abs(stages[l].psi.dot(stages[l + 1].psi)));
    tr.w_star = tr.pairwise_overlaps.empty()
                    ? 1.0
                    : *std::min_element(tr.pairwise_overlaps.begin(), tr.pairwise_overlaps.end());
    if (T > 0 && tr.w_star < 0.5) {
      std::ostringstream os;
      os << "run_annealing: emulated path not certified, w* = " << tr.w_star << " < 1/2";
      throw PreconditionError(os.str());
    }
    if (!opt.depth_override) tr.depth = pi3_depth(eps, std::max(T, 1), tr.w_star);
  }
  auto fetch = [&](std::size_t l) { return stages.empty() ? stage(l) : std::move(stages[l]); };

  const double w_check = tr.w_star;
  Stage cur = fetch(0);
  CVec state = cur.psi;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    Stage next = fetch(l + 1);
    const double measured = std::abs(cur.psi.dot(next.psi));
    if (measured < w_check - 1e-9) {
      std::ostringstream os;
      os << "run_annealing: step " << l << " overlap " << measured << " below w* = " << w_check;
      throw NumericalError(os.str());
    }
    Rotation rot;
    if (opt.run_mode == AnnealMode::Ideal) {
      rot = [&](const CVec& x, bool t, int sign) { return pi3_rotation(x, t ? next.psi : cur.psi, sign); };
    } else {
      rot = [&](const CVec& x, bool t, int sign) {
        const Stage& s = t ? next : cur;
        ProjectorConfig cfg = opt.projector;
        cfg.t = projector_time(s.gap, opt.projector_delta);
        if (opt.energy == EnergyEstimate::Eigensolve) {
          cfg.lambda0_estimate = s.lambda0;
        } else {
          const Mat Aref = mode == Mode::Euclidean ? As[t ? l + 1 : l] : Mat::Identity(b.dim, b.dim);
          cfg.lambda0_estimate = harmonic_reference(Aref, gamma, opt.path.op.kinetic_scale).lambda0;
        }
        return two_register_emulation(s.op.matrix, cfg, x, s.psi, sign).output;
      };
    }
    state = recurse(state, tr.depth, false, rot);
    const double nrm = state.norm();
    if (nrm == 0.0) throw NumericalError("run_annealing: state annihilated");
    state /= nrm;
    tr.rotations_used += pi3_rotations_per_step(tr.depth);
    tr.per_step_errors.push_back(1.0 - std::abs(next.psi.dot(state)));
    cur = std::move(next);
  }
  tr.final_fidelity = std::abs(cur.psi.dot(state));
  if (T > 0) tr.rotation_constant = static_cast<double>(tr.rotations_used) / (4.0 * T * std::log(T / eps));

  // Position mean of the output state against the true minimizer.
  const Vec prob = state.cwiseAbs2();
  tr.position_mean = Vec::Zero(b.dim);
  for (long i = 0; i < grid.size(); ++i) tr.position_mean += prob(i) * grid.node(i);
  tr.position_mean /= prob.sum();
  if (opt.argmin) {
    const double cn = c.norm();
    const Vec u = c / cn;
    const Mat S = harmonic_covariance(As.back(), gamma, mode);
    tr.position_distance = std::abs(u.dot(tr.position_mean - *opt.argmin));
    tr.position_bound = sch.theta / (sch.etas.back() * cn) + 3.0 * std::sqrt(u.dot(S * u));
    tr.position_ok = tr.position_distance <= tr.position_bound;
  }
  return tr;
}

}  // namespace sclab
