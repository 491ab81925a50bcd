#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "sclab/anneal.hpp"
#include "sclab/quadrature.hpp"

using namespace sclab;
using cd = std::complex<double>;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

CVec random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(nd(rng), nd(rng));
  return v.normalized();
}

SpMat random_symmetric(int n, std::mt19937_64& rng, double density) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::bernoulli_distribution keep(density);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, u(rng));
    for (int j = i + 1; j < n; ++j)
      if (keep(rng)) {
        const double v = 0.3 * u(rng);
        t.emplace_back(i, j, v);
        t.emplace_back(j, i, v);
      }
  }
  SpMat H(n, n);
  H.setFromTriplets(t.begin(), t.end());
  return H;
}

// exp(-t (H - lambda)^2) v by dense eigendecomposition.
CVec dense_projector(const SpMat& H, double t, double lambda, const CVec& v) {
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  const Vec f = (-t * (es.eigenvalues().array() - lambda).square()).exp();
  const CMat Q = es.eigenvectors().cast<cd>();
  return Q * (f.cast<cd>().asDiagonal() * (Q.adjoint() * v));
}

}  // namespace

TEST_CASE("pi3 rotation") {
  std::mt19937_64 rng(1);
  const CVec target = random_state(16, rng);
  const cd omega = std::polar(1.0, M_PI / 3);
  CHECK((pi3_rotation(target, target) - omega * target).norm() <= 1e-15);
  CVec perp = random_state(16, rng);
  perp -= target * target.dot(perp);
  perp.normalize();
  CHECK((pi3_rotation(perp, target) - perp).norm() <= 1e-15);
  for (int k = 0; k < 20; ++k) {
    const CVec s = random_state(16, rng);
    CHECK((pi3_rotation(pi3_rotation(s, target, +1), target, -1) - s).norm() <= 1e-12);
    CHECK(pi3_rotation(s, target).norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
  CVec s = random_state(16, rng);
  for (int k = 0; k < 10000; ++k) s = pi3_rotation(s, target, k % 3 ? 1 : -1);
  CHECK(std::abs(s.norm() - 1.0) <= 1e-12);

  const QuantumState qs(CVec(3 * random_state(16, rng)));
  CHECK(qs.norm() == doctest::Approx(1.0).epsilon(1e-15));
  const QuantumState qt(target);
  CHECK(pi3_rotation(qs, qt).norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pi3 recursion") {
  std::mt19937_64 rng(2);
  const CVec a = random_state(32, rng);
  CVec b = a + 1.2 * random_state(32, rng);
  b.normalize();
  const double p = std::norm(b.dot(a));
  for (int d = 0; d <= 3; ++d) {
    const CVec u = pi3_recursion(a, a, b, d);
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // Fixed-point law: 1 - |<b, U_d a>|^2 = (1 - p)^{3^d}.
    CHECK(1 - std::norm(b.dot(u)) == doctest::Approx(std::pow(1 - p, std::pow(3, d))).epsilon(1e-9).scale(1e-12));
    CHECK((pi3_recursion(u, a, b, d, true) - a).norm() <= 1e-11);
  }
  CHECK(pi3_rotations_per_step(0) == 0);
  CHECK(pi3_rotations_per_step(1) == 2);
  CHECK(pi3_rotations_per_step(3) == 26);
  CHECK(pi3_depth(0.05, 1047, 0.99939) == 1);
  CHECK(pi3_depth(0.5, 1, 1.0) == 0);
  const int d = pi3_depth(0.01, 100, 0.8);
  CHECK(100 * std::pow(1 - 0.64, std::pow(3, d) / 2) <= 0.01);
  CHECK(100 * std::pow(1 - 0.64, std::pow(3, d - 1) / 2) > 0.01);
}

TEST_CASE("scalar Hubbard-Stratonovich identity") {
  const Quadrature q = gauss_hermite(60);
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (double x = -6; x <= 6; x += 0.05) {
    cd s = 0;
    for (int k = 0; k < q.nodes.size(); ++k) s += q.weights(k) * std::exp(cd(0, -x * q.nodes(k)));
    CHECK(std::abs(s - std::exp(-x * x / 2)) <= 1e-10);
  }
  const Quadrature tq = truncate_nodes(q, 8);
  CHECK(tq.nodes.cwiseAbs().maxCoeff() <= 8);
  CHECK(tq.nodes.size() < q.nodes.size());
}

TEST_CASE("krylov exponential matches dense") {
  std::mt19937_64 rng(3);
  const SpMat H = random_symmetric(80, rng, 0.1);
  const CVec v = random_state(80, rng);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  const CMat Q = es.eigenvectors().cast<cd>();
  for (double tau : {0.1, 2.0, 25.0}) {
    const CVec ph = (es.eigenvalues().array() - 0.3).unaryExpr([&](double l) { return std::exp(cd(0, -tau * l)); });
    const CVec want = Q * ph.asDiagonal() * (Q.adjoint() * v);
    CHECK((expm_krylov(H, 0.3, tau, v) - want).norm() <= 1e-9);
  }
}

TEST_CASE("projector on a diagonal operator") {
  SpMat H(2, 2);
  H.insert(1, 1) = 1.0;
  ProjectorConfig cfg;
  CVec s(2);
  s << cd(0.6, 0), cd(0, 0.8);
  const CVec out = hs_projector_apply(H, cfg, s);
  CHECK(std::abs(out(0) - s(0)) <= 1e-12);
  CHECK(std::abs(out(1) - s(1) * std::exp(-1.0)) <= 1e-12);
}

TEST_CASE("projector matches the dense oracle") {
  std::mt19937_64 rng(4);
  SpMat H = random_symmetric(64, rng, 0.08);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  H *= 2.0 / es.eigenvalues().cwiseAbs().maxCoeff();
  ProjectorConfig cfg;
  cfg.lambda0_estimate = 0.05;
  ProjectorReport rep;
  const CVec v = random_state(64, rng);
  const CVec out = hs_projector_apply(H, cfg, v, &rep);
  CHECK((out - dense_projector(H, 1.0, 0.05, v)).norm() <= 1e-6);
  CHECK(rep.drift <= 1e-6);
  CHECK(rep.nodes_used > 0);

  // Positive semidefinite as an operator.
  for (int k = 0; k < 10; ++k) {
    const CVec u = random_state(64, rng);
    const cd q = u.dot(hs_projector_apply(H, cfg, u));
    CHECK(q.real() >= 0.0);
    CHECK(std::abs(q.imag()) <= 1e-10);
  }

  // An under-resolved range trips the node-doubling check.
  ProjectorConfig coarse = cfg;
  coarse.quad_nodes = 10;
  CHECK_THROWS_AS(hs_projector_apply(SpMat(6.0 * H), coarse, v), NumericalError);
}

TEST_CASE("projector at large t keeps the ground component") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  // Isolated ground level so that sqrt(2t) |H - lambda0| stays within the quadrature's range.
  SpMat H = random_symmetric(40, rng, 0.1) * 0.1;
  for (int i = 0; i < 40; ++i) H.coeffRef(i, i) += i == 0 ? -1.0 : 1.4 + 0.4 * u(rng);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  const double lam0 = es.eigenvalues()(0), gap = es.eigenvalues()(1) - lam0;
  const CVec psi0 = es.eigenvectors().col(0).cast<cd>();
  const CVec v = random_state(40, rng);
  ProjectorConfig cfg;
  cfg.lambda0_estimate = lam0;
  cfg.t = projector_time(gap, 1e-3);
  const CVec out = hs_projector_apply(H, cfg, v);
  const CVec kept = psi0 * psi0.dot(v);
  CHECK((out - kept).norm() <= std::exp(-cfg.t * gap * gap) + 1e-6);
  CHECK(cfg.t * gap * gap == doctest::Approx(std::log(1e3)));
}

TEST_CASE("sub-normalization from an energy estimate offset") {
  std::mt19937_64 rng(6);
  SpMat H = random_symmetric(48, rng, 0.1);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  H *= 1.5 / es.eigenvalues().cwiseAbs().maxCoeff();
  es.compute(Mat(H));
  const CVec psi0 = es.eigenvectors().col(0).cast<cd>();
  for (double e0 : {0.0, 0.03, 0.1, 0.3}) {
    ProjectorConfig cfg;
    cfg.t = 2.0;
    cfg.lambda0_estimate = es.eigenvalues()(0) + e0;
    const double amp = std::abs(psi0.dot(hs_projector_apply(H, cfg, psi0)));
    CHECK(std::abs(amp - std::exp(-cfg.t * e0 * e0)) <= 1e-8);
  }
}

TEST_CASE("two-register emulation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 32;
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, i == 0 ? -1.0 : 1.4 + 0.4 * u(rng));
  for (int i = 0; i + 1 < n; ++i) {
    const double v = 0.05 * u(rng);
    t.emplace_back(i, i + 1, v);
    t.emplace_back(i + 1, i, v);
  }
  SpMat H(n, n);
  H.setFromTriplets(t.begin(), t.end());
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(H)};
  const CVec psi0 = es.eigenvectors().col(0).cast<cd>();
  const double gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  ProjectorConfig cfg;
  cfg.t = 2.5;
  cfg.lambda0_estimate = es.eigenvalues()(0);

  const EmulationReport eig = two_register_emulation(H, cfg, psi0, psi0, +1);
  CHECK((eig.output - std::polar(1.0, M_PI / 3) * psi0).norm() <= 1e-8);
  CHECK(eig.ancilla_restoration == doctest::Approx(1.0).epsilon(1e-8));

  for (int sign : {+1, -1}) {
    const CVec s = random_state(n, rng);
    const EmulationReport r = two_register_emulation(H, cfg, s, psi0, sign);
    CHECK((r.reference - pi3_rotation(s, psi0, sign)).norm() <= 1e-14);
    CHECK(r.trace_distance <= 2 * std::exp(-cfg.t * gap * gap) + 1e-6);
    CHECK(r.joint_distance <= 2 * std::exp(-cfg.t * gap * gap) + 1e-6);
  }
}

TEST_CASE("interpolation between grids") {
  const Grid from(Vec::Constant(2, -1), Vec::Constant(2, 1), {21, 21});
  const Grid to(Vec::Constant(2, -0.9), Vec::Constant(2, 0.8), {13, 17});
  Vec f(from.size());
  for (long i = 0; i < from.size(); ++i) {
    const Vec x = from.node(i);
    f(i) = 1 + 2 * x(0) - x(1) + 0.5 * x(0) * x(1);
  }
  const Vec g = interpolate_nodes(from, f, to);
  for (long i = 0; i < to.size(); ++i) {
    const Vec x = to.node(i);
    CHECK(g(i) == doctest::Approx(1 + 2 * x(0) - x(1) + 0.5 * x(0) * x(1)).epsilon(1e-12));
  }
  // Zero Dirichlet ring outside the source box.
  const Grid wide(Vec::Constant(2, -3), Vec::Constant(2, 3), {5, 5});
  const Vec w = interpolate_nodes(from, f, wide);
  CHECK(w(wide.linear_index({0, 0})) == 0.0);
}

TEST_CASE("quantum central path") {
  const Barrier iv = interval_barrier(-1, 1);
  const EtaSchedule single = eta_schedule(iv, v1(1), 200, 0.5, 0.1, Mode::Riemannian, std::nullopt, 4.0);
  const PathStates one = quantum_central_path(iv, v1(1), 200, single, Mode::Riemannian);
  CHECK(one.completed == 1);
  CHECK(one.overlaps.empty());

  EtaSchedule s = eta_schedule(iv, v1(1), 200, 0.05, 0.1, Mode::Riemannian);
  s.etas.resize(11);
  s.chis.resize(11);
  const PathStates ps = quantum_central_path(iv, v1(1), 200, s, Mode::Riemannian);
  CHECK(ps.completed == 11);
  REQUIRE(ps.overlaps.size() == 10);
  for (double o : ps.overlaps) CHECK(o >= 0.5);
  CHECK(ps.w_star == doctest::Approx(*std::min_element(ps.overlaps.begin(), ps.overlaps.end())));
  for (const CVec& st : ps.states) CHECK(st.norm() == doctest::Approx(1.0).epsilon(1e-10));

  EtaSchedule fine = eta_schedule(iv, v1(1), 200, 0.05, 0.01, Mode::Riemannian);
  fine.etas.resize(11);
  fine.chis.resize(11);
  PathOptions po;
  po.keep_states = false;
  const PathStates pf = quantum_central_path(iv, v1(1), 200, fine, Mode::Riemannian, po);
  CHECK(pf.w_star >= 0.9);
  CHECK(pf.states.empty());
}

TEST_CASE("annealing on a one-step path") {
  // Halfline: theta = 1, so eps = 0.99 and a large ratio finish in one step.
  AnnealOptions ao;
  ao.kappa = 1.0;
  ao.depth_override = 3;
  ao.argmin = v1(0);
  const AnnealTrace tr = run_annealing(halfline_barrier(), v1(1), 10, 0.99, Mode::Riemannian, ao);
  CHECK(tr.schedule.steps() == 1);
  CHECK(tr.final_fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.rotations_used == pi3_rotations_per_step(3));
}

TEST_CASE("annealing fidelity degrades with coarser schedules") {
  const Barrier iv = interval_barrier(-1, 1);
  double prev = 2.0;
  for (double kappa : {0.25, 0.5, 1.0}) {
    AnnealOptions ao;
    ao.kappa = kappa;
    ao.depth_override = 1;
    ao.argmin = v1(-1);
    const AnnealTrace tr = run_annealing(iv, v1(1), 20, 0.5, Mode::Riemannian, ao);
    CHECK(tr.final_fidelity <= prev + 1e-12);
    prev = tr.final_fidelity;
  }
}

TEST_CASE("annealing trace bookkeeping") {
  const Barrier iv = interval_barrier(-1, 1);
  AnnealOptions ao;
  ao.argmin = v1(-1);
  const AnnealTrace tr = run_annealing(iv, v1(1), 50, 0.2, Mode::Riemannian, ao);
  CHECK(static_cast<int>(tr.pairwise_overlaps.size()) == tr.schedule.steps());
  CHECK(static_cast<int>(tr.per_step_errors.size()) == tr.schedule.steps());
  CHECK(tr.rotations_used == tr.schedule.steps() * pi3_rotations_per_step(tr.depth));
  CHECK(tr.depth == pi3_depth(0.2, tr.schedule.steps(), tr.w_star));
  CHECK(tr.final_fidelity >= 0.8);
  CHECK(tr.position_ok);
  CHECK(tr.mode == "ideal");
  CHECK_FALSE(tr.surrogates.empty());
}

TEST_CASE("emulated annealing on a short path") {
  const Barrier iv = interval_barrier(-1, 1);
  AnnealOptions ao;
  ao.run_mode = AnnealMode::Emulated;
  ao.kappa = 1.0;
  ao.argmin = v1(-1);
  ao.emulated_points = 30;
  ao.projector.check_resolution = false;
  ao.projector.quad_nodes = 100;
  const AnnealTrace tr = run_annealing(iv, v1(1), 20, 0.5, Mode::Riemannian, ao);
  CHECK(tr.mode == "emulated");
  CHECK(tr.final_fidelity >= 0.5);
  CHECK(tr.depth >= 1);
}

TEST_CASE("ideal annealing meets the fidelity target on a short path") {
  AnnealOptions ao;
  ao.argmin = v1(-1);
  const AnnealTrace tr = run_annealing(interval_barrier(-1, 1), v1(1), 20, 0.5, Mode::Riemannian, ao);
  CHECK(tr.final_fidelity >= 0.5);
  CHECK(tr.position_ok);
}
