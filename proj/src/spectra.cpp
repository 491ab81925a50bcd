#include "sclab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sclab/parallel.hpp"

namespace sclab {

SpectrumResult lowest_eigenpairs(const DiscreteOperator& op, int k, double tol, const LanczosOptions& lanczos) {
  if (k < 1 || k > 8) throw PreconditionError("lowest_eigenpairs: k must lie in [1, 8]");
  LanczosOptions lo = lanczos;
  lo.tol = tol;
  const LanczosResult r = lanczos_lowest(op.matrix, k, lo);
  SpectrumResult s;
  s.eigenvalues = r.values;
  s.residuals = r.residuals;
  s.vectors = r.vectors;
  s.iterations = r.iterations;
  s.degeneracy_tol = 1e-8 * std::max(1.0, std::abs(r.values(0)));
  for (int i = 0; i < s.vectors.cols(); ++i) {
    Eigen::Index at;
    s.vectors.col(i).cwiseAbs().maxCoeff(&at);
    if (s.vectors(at, i) < 0) s.vectors.col(i) *= -1.0;
  }
  s.ground_state = s.vectors.col(0);
  return s;
}

double spectral_gap(const SpectrumResult& s) {
  if (s.eigenvalues.size() < 2) throw PreconditionError("spectral_gap: need two eigenvalues");
  const double g = s.eigenvalues(1) - s.eigenvalues(0);
  if (g <= s.degeneracy_tol) {
    std::ostringstream os;
    os << "spectral_gap: degenerate ground state (gap " << g << " <= " << s.degeneracy_tol << ")";
    throw DegenerateSpectrumError(os.str());
  }
  return g;
}

HarmonicReference harmonic_reference(const Mat& A, double gamma, double kinetic_scale) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw PreconditionError("harmonic_reference: A must be SPD");
  const Vec mu = es.eigenvalues().cwiseSqrt();
  const double f = std::sqrt(2.0 * kinetic_scale);
  HarmonicReference h;
  h.lambda0 = 0.5 * gamma * mu.sum() * f;
  h.gap = gamma * mu.minCoeff() * f;
  h.lambda1 = h.lambda0 + h.gap;
  return h;
}

namespace {

SpMat diag_sparse(const Vec& d) {
  SpMat D(d.size(), d.size());
  D.setIdentity();
  D.diagonal() = d;
  return D;
}

double max_abs(const SpMat& S) {
  double m = 0.0;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

ImsReport ims_identity_check(const DiscreteOperator& op, const BumpPair& bump) {
  if (bump.J.size() != op.size()) throw PreconditionError("ims: bump not defined on the operator grid");
  ImsReport rep;
  rep.partition_defect = (bump.J.cwiseAbs2() + bump.Jbar.cwiseAbs2() - Vec::Ones(op.size())).cwiseAbs().maxCoeff();
  if (rep.partition_defect > 1e-12) throw PreconditionError("ims: J^2 + Jbar^2 != 1");
  const SpMat& H = op.matrix;
  const SpMat J = diag_sparse(bump.J), Jb = diag_sparse(bump.Jbar);
  const SpMat M = SpMat(J * H * J) + SpMat(Jb * H * Jb) - H;
  const SpMat cj = SpMat(J * H) - SpMat(H * J);
  const SpMat cb = SpMat(Jb * H) - SpMat(H * Jb);
  const SpMat dj = SpMat(J * cj) - SpMat(cj * J);
  const SpMat db = SpMat(Jb * cb) - SpMat(cb * Jb);
  const SpMat R = M + 0.5 * (dj + db);
  rep.tier_a_residual = max_abs(R) / max_abs(H);

  // Continuum limit: s (|grad J|^2 + |grad Jbar|^2) in the dual metric.
  const Mat gJ = bump.grad_J(op.grid, false), gB = bump.grad_J(op.grid, true);
  Vec D(op.size());
  for (long i = 0; i < op.size(); ++i) {
    if (!op.inv_metric.empty()) {
      const Mat& gi = op.inv_metric[static_cast<std::size_t>(i)];
      D(i) = gJ.col(i).dot(gi * gJ.col(i)) + gB.col(i).dot(gi * gB.col(i));
    } else {
      D(i) = gJ.col(i).squaredNorm() + gB.col(i).squaredNorm();
    }
  }
  D *= op.kinetic_scale;
  const Eigen::SelfAdjointEigenSolver<Mat> es(bump.A);
  const double w = bump.radius_inner;
  double worst = 0.0;
  for (double shift : {-1.5, 0.0, 1.5}) {
    // Probe centered shift * w along the softest axis of A, width w in the A-norm.
    const Vec c = bump.z + shift * w * es.eigenvectors().col(0) / std::sqrt(es.eigenvalues()(0));
    Vec psi(op.size());
    for (long i = 0; i < op.size(); ++i) {
      const Vec dx = op.grid.node(i) - c;
      psi(i) = std::exp(-0.5 * dx.dot(bump.A * dx) / (w * w));
    }
    const Vec u = op.to_frame(psi);
    const Vec err = M * u - D.cwiseProduct(u);
    worst = std::max(worst, err.norm() / u.norm());
  }
  rep.tier_b_discrepancy = worst;
  return rep;
}

ImsRefinement ims_refinement_study(const std::function<DiscreteOperator(const Grid&)>& build, const Grid& grid,
                                   const Vec& z, const Mat& A, double gamma) {
  std::vector<int> fine_n = grid.npts;
  for (auto& k : fine_n) k = 2 * k + 1;
  const Grid fine(grid.lo, grid.hi, fine_n);
  ImsRefinement out;
  out.coarse = ims_identity_check(build(grid), bump_pair(z, A, gamma, grid));
  out.fine = ims_identity_check(build(fine), bump_pair(z, A, gamma, fine));
  out.decay = out.coarse.tier_b_discrepancy / out.fine.tier_b_discrepancy;
  return out;
}

ConcentrationReport concentration_check(const Mat& A, const Vec& z, double gamma, const BumpPair& bump,
                                        const Grid& grid, double t, double c0) {
  const int n = static_cast<int>(z.size());
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const double normA = es.eigenvalues().maxCoeff();
  if (gamma < std::pow(t * n * std::sqrt(normA), 5.0) * (1.0 - 1e-12))
    throw PreconditionError("concentration: need gamma >= (t n sqrt||A||)^5");
  ConcentrationReport rep;
  rep.t = t;
  rep.c0 = c0;
  const Vec psi = gaussian_ground_state(A, z, gamma, grid);
  rep.mass = bump.Jbar.cwiseProduct(psi).squaredNorm() * grid.cell_volume();
  rep.bound = 2.0 * std::exp(-c0 * t * n);
  const Mat cov = harmonic_covariance(A, gamma, Mode::Euclidean);
  for (int a = 0; a < n; ++a) {
    const double s = 8.0 * std::sqrt(cov(a, a));
    if (z(a) - s < grid.lo(a) || z(a) + s > grid.hi(a)) rep.truncation_warning = true;
  }
  rep.passed = rep.mass <= rep.bound;
  return rep;
}

Vec dikin_test_function(const Mat& gz, const Vec& z, double r, const Grid& grid, const Vec& offset) {
  Vec psi(grid.size());
  for (long i = 0; i < grid.size(); ++i) {
    const Vec dx = grid.node(i) - z;
    const double rz = std::sqrt(dx.dot(gz * dx));
    psi(i) = bump_c(2.0 * rz / r) * (1.0 + offset.dot(dx));
  }
  return psi;
}

DikinFormReport dikin_form_comparison(const Barrier& b, const Vec& z, double r, const Grid& grid,
                                      const std::vector<Vec>& psi, double slack) {
  if (!(r > 0.0 && r < 1.0)) throw PreconditionError("dikin forms: need 0 < r < 1");
  require_interior(b, z);
  const Mat gz = b.hessian(z);
  const int n = b.dim;
  OperatorOptions unit;
  unit.kinetic_scale = 1.0;
  const Vec zero = Vec::Zero(n);
  const DiscreteOperator opR = build_riemannian(b, zero, 0.0, grid, 0.0, unit);
  const DiscreteOperator opZ = build_riemannian(quadratic_potential(gz, z), zero, 0.0, grid, 0.0, unit);
  DikinFormReport rep;
  rep.slack = slack;
  rep.mass_lo = std::pow(1.0 - r, n);
  rep.mass_hi = 1.0 / rep.mass_lo;
  rep.energy_lo = std::pow(1.0 - r, n + 2);
  rep.energy_hi = 1.0 / rep.energy_lo;
  rep.passed = true;
  for (const Vec& p : psi) {
    if (p.size() != grid.size()) throw PreconditionError("dikin forms: test function size mismatch");
    for (long i = 0; i < grid.size(); ++i) {
      if (p(i) == 0.0) continue;
      const Vec dx = grid.node(i) - z;
      if (std::sqrt(dx.dot(gz * dx)) > r * (1.0 + 1e-12))
        throw PreconditionError("dikin forms: test function support leaks outside the ball");
    }
    const Vec uR = opR.to_frame(p), uZ = opZ.to_frame(p);
    const double mR = uR.squaredNorm(), mZ = uZ.squaredNorm();
    const double eR = uR.dot(opR.matrix * uR), eZ = uZ.dot(opZ.matrix * uZ);
    const double mr = mR / mZ, er = eR / eZ;
    rep.mass_ratio.push_back(mr);
    rep.energy_ratio.push_back(er);
    if (mr < rep.mass_lo * (1.0 - slack) || mr > rep.mass_hi * (1.0 + slack)) rep.passed = false;
    if (er < rep.energy_lo * (1.0 - slack) || er > rep.energy_hi * (1.0 + slack)) rep.passed = false;
  }
  return rep;
}

OverlapReport ground_overlap_check(const DiscreteOperator& opH, const DiscreteOperator& opH0, const BumpPair& bump,
                                   Mode mode, double tol) {
  if (opH.size() != opH0.size()) throw PreconditionError("overlap: operators live on different grids");
  const SpectrumResult s = lowest_eigenpairs(opH, 1, tol);
  const SpectrumResult s0 = lowest_eigenpairs(opH0, 1, tol);
  OverlapReport rep;
  rep.lambda0_h = s.eigenvalues(0);
  rep.lambda0_h0 = s0.eigenvalues(0);
  if (mode == Mode::Euclidean) {
    rep.overlap = std::abs(s.ground_state.dot(s0.ground_state));
    return rep;
  }
  const Vec psi0 = opH0.from_frame(s0.ground_state);
  Vec u = opH.to_frame(bump.J.cwiseProduct(psi0));
  u /= u.norm();
  rep.overlap = std::abs(s.ground_state.dot(u));
  return rep;
}

std::pair<Vec, Mat> potential_minimizer(const Barrier& b, const Vec& c, double eta) {
  const PathPoint p = center(b, c, eta, interior_point(b), 1e-12);
  return {p.x, p.hessian_at_x};
}

DiscreteOperator build_operator(Mode mode, const Barrier& b, const Vec& c, double eta, const Grid& grid,
                                double gamma, const OperatorOptions& opt) {
  return mode == Mode::Euclidean ? build_euclidean(b, c, eta, grid, gamma, opt)
                                 : build_riemannian(b, c, eta, grid, gamma, opt);
}

GapSummary gap_experiment(const Barrier& b, const Vec& c, double eta, Mode mode, const std::vector<double>& gammas,
                          const GapOptions& opt) {
  const auto [z, A] = potential_minimizer(b, c, eta);
  const double vz = b.value(z) + eta * c.dot(z) - opt.op.potential_shift;
  const int n = b.dim;
  GapSummary out;
  out.rows.resize(gammas.size());
  parallel_for(static_cast<int>(gammas.size()), opt.workers, [&](int i) {
    GapRow& row = out.rows[static_cast<std::size_t>(i)];
    const double gamma = gammas[static_cast<std::size_t>(i)];
    row.gamma = gamma;
    const HarmonicReference ref = harmonic_reference(mode == Mode::Euclidean ? A : Mat::Identity(n, n), gamma,
                                                     opt.op.kinetic_scale);
    row.lambda0_ref = ref.lambda0 + gamma * gamma * vz;
    row.gap_ref = ref.gap;
    row.bound = 0.5 * ref.gap;
    try {
      const Grid grid = policy_grid(b, z, A, gamma, mode, opt.policy);
      row.nodes = grid.size();
      const DiscreteOperator op = build_operator(mode, b, c, eta, grid, gamma, opt.op);
      SpectrumResult s = lowest_eigenpairs(op, 2, opt.tol);
      s.degeneracy_tol = opt.degeneracy_rel * std::max(1.0, std::abs(s.eigenvalues(0)));
      row.lambda0 = s.eigenvalues(0);
      row.lambda1 = s.eigenvalues(1);
      row.iterations = s.iterations;
      row.gap = spectral_gap(s);
      row.bound_satisfied = row.gap >= row.bound;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.bound_satisfied = false;
    }
  });
  std::vector<std::size_t> order(out.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b2) { return out.rows[a].gamma < out.rows[b2].gamma; });
  out.gamma_threshold_observed = kInf;
  for (std::size_t k = order.size(); k-- > 0;) {
    if (!out.rows[order[k]].bound_satisfied) break;
    out.gamma_threshold_observed = out.rows[order[k]].gamma;
  }
  out.min_margin = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : out.rows) {
    if (r.gamma < out.gamma_threshold_observed) continue;
    const double m = r.gap / r.bound - 1.0;
    if (std::isnan(out.min_margin) || m < out.min_margin) out.min_margin = m;
  }
  return out;
}

}  // namespace sclab
