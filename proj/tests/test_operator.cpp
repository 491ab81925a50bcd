#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sclab/spectra.hpp"

using namespace sclab;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// f = 0 on R^n; only the value evaluator is used by the Euclidean assembly.
Barrier zero_potential(int n) {
  Barrier b = quadratic_potential(Mat::Identity(n, n), Vec::Zero(n));
  b.value = [](const Vec&) { return 0.0; };
  return b;
}

Vec lowest_dense(const SpMat& S, int k) { return oracle::dense_eigenvalues(S).head(k); }

}  // namespace

TEST_CASE("euclidean stencil with zero potential") {
  const Grid g(v1(0), v1(4), {3});
  const double h = g.spacing(0);
  CHECK(h == 1.0);
  const DiscreteOperator op = build_euclidean(zero_potential(1), v1(0), 0, g, 7.0);
  Mat want = Mat::Zero(3, 3);
  want << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  want *= 0.5 / (h * h);
  CHECK((Mat(op.matrix) - want).cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.kind == OperatorKind::Euclidean);
  CHECK_FALSE(op.weight.has_value());
}

TEST_CASE("constant potential shifts the spectrum exactly") {
  const Grid g(v2(-1, -1), v2(1, 1), {9, 11});
  const Barrier zero = zero_potential(2);
  const Barrier k = shifted(zero, 0.3);
  const double gamma = 4;
  const Vec a = lowest_dense(build_euclidean(zero, v2(0, 0), 0, g, gamma).matrix, 5);
  const Vec b = lowest_dense(build_euclidean(k, v2(0, 0), 0, g, gamma).matrix, 5);
  CHECK(((b - a).array() - gamma * gamma * 0.3).abs().maxCoeff() < 1e-10);
}

TEST_CASE("operators are exactly symmetric") {
  const Barrier box = box_barrier(v2(-1, -1), v2(1, 1));
  const Grid g(v2(-0.8, -0.7), v2(0.6, 0.8), {17, 15});
  CHECK(symmetry_defect(build_euclidean(box, v2(0.2, 0.1), 2, g, 30).matrix) <= 1e-12);
  CHECK(symmetry_defect(build_riemannian(box, v2(0.2, 0.1), 2, g, 30).matrix) <= 1e-12);
  Mat A(2, 2);
  A << 2, 0.7, 0.7, 1;
  Mat T(2, 2);
  T << 1, 0.4, -0.3, 1;
  const Barrier skew = affine_pullback(box, T, v2(0, 0));
  const Grid gs(v2(-0.4, -0.4), v2(0.4, 0.4), {14, 14});
  CHECK(symmetry_defect(build_riemannian(skew, v2(0, 0), 1, gs, 10).matrix) <= 1e-12);
  CHECK(symmetry_defect(build_harmonic(A, v2(0, 0), g, 10).matrix) <= 1e-12);
}

TEST_CASE("flat metric gives the euclidean matrix") {
  const Barrier q = quadratic_potential(Mat::Identity(2, 2), v2(0.1, -0.2));
  const Grid g(v2(-1, -1.5), v2(1.2, 1), {13, 11});
  const DiscreteOperator e = build_euclidean(q, v2(0.5, 0), 1.5, g, 6);
  const DiscreteOperator r = build_riemannian(q, v2(0.5, 0), 1.5, g, 6);
  const double scale = Mat(e.matrix).cwiseAbs().maxCoeff();
  CHECK((Mat(e.matrix) - Mat(r.matrix)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  REQUIRE(r.weight.has_value());
  CHECK((r.weight->array() - 1.0).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("constant metric matches the flat operator in transformed coordinates") {
  // g = 4 on x corresponds to xi = 2 x with a flat metric.
  const double gamma = 5;
  const Barrier q = quadratic_potential(Mat::Constant(1, 1, 4.0), v1(0));
  const DiscreteOperator r = build_riemannian(q, v1(0), 0, Grid(v1(-2), v1(2), {301}), gamma);
  const Barrier flat = quadratic_potential(Mat::Identity(1, 1), v1(0));
  const DiscreteOperator e = build_euclidean(flat, v1(0), 0, Grid(v1(-4), v1(4), {301}), gamma);
  const Vec a = lowest_dense(r.matrix, 4), b = lowest_dense(e.matrix, 4);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * b.cwiseAbs().maxCoeff());
  CHECK(a(0) == doctest::Approx(gamma / 2).epsilon(1e-3));
}

TEST_CASE("interval barrier ground energies") {
  const Barrier iv = interval_barrier(-1, 1);
  const DiscreteOperator e = build_euclidean(iv, v1(0), 0, Grid(v1(-0.9), v1(0.9), {2000}), 100);
  const double want = 50 * std::sqrt(2.0);
  CHECK(std::abs(lowest_eigenpairs(e, 2).eigenvalues(0) / want - 1) <= 0.05);

  const Grid gr = policy_grid(iv, v1(0), 2 * Mat::Identity(1, 1), 200, Mode::Riemannian);
  const DiscreteOperator r = build_riemannian(iv, v1(0), 0, gr, 200);
  CHECK(std::abs(lowest_eigenpairs(r, 2).eigenvalues(0) / 100 - 1) <= 0.05);
}

TEST_CASE("harmonic reference values") {
  const Grid g(v1(-8), v1(8), {512});
  const SpectrumResult s = lowest_eigenpairs(build_harmonic(Mat::Identity(1, 1), v1(0), g, 2.0), 2);
  CHECK(std::abs(s.eigenvalues(0) - 1.0) <= 1e-3);
  CHECK(std::abs(s.eigenvalues(1) - 3.0) <= 5e-3);

  const SpectrumResult t = lowest_eigenpairs(build_harmonic(Mat::Identity(1, 1), v1(1.3), Grid(v1(-6.7), v1(9.3), {512}), 2.0), 2);
  CHECK((t.eigenvalues - s.eigenvalues).cwiseAbs().maxCoeff() <= 1e-9);

  Mat A = Mat::Zero(2, 2);
  A.diagonal() << 1, 4;
  const HarmonicReference ref = harmonic_reference(A, 10);
  CHECK(ref.lambda0 == doctest::Approx(15));
  CHECK(ref.lambda1 == doctest::Approx(25));
  CHECK(ref.gap == doctest::Approx(10));
}

TEST_CASE("harmonic discretization converges at second order") {
  const double gamma = 2;
  std::vector<double> err;
  for (int n : {63, 127, 255}) {
    const SpectrumResult s = lowest_eigenpairs(build_harmonic(Mat::Identity(1, 1), v1(0), Grid(v1(-8), v1(8), {n}), gamma), 2);
    err.push_back(std::abs(s.eigenvalues(1) - 3.0));
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("non-SPD metric is rejected") {
  Barrier bad = quadratic_potential(Mat::Identity(1, 1), v1(0));
  bad.hessian = [](const Vec& x) { return Mat::Constant(1, 1, x(0) > 0.5 ? -1.0 : 1.0); };
  CHECK_THROWS_AS(build_riemannian(bad, v1(0), 0, Grid(v1(-1), v1(1), {20}), 3), NumericalError);
  CHECK_THROWS_AS(build_euclidean(interval_barrier(-1, 1), v1(0), 0, Grid(v1(-1), v1(0.5), {20}), 3), DomainError);
}

TEST_CASE("gaussian ground state") {
  Mat A(2, 2);
  A << 2, 0.3, 0.3, 1;
  const Grid g(v2(-2, -2), v2(2, 2), {81, 81});
  const Vec psi = gaussian_ground_state(A, v2(0, 0), 6, g);
  CHECK(psi.squaredNorm() * g.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));
  const DiscreteOperator op = build_harmonic(A, v2(0, 0), g, 6);
  const SpectrumResult s = lowest_eigenpairs(op, 1);
  CHECK(std::abs(s.ground_state.dot(op.to_frame(psi))) >= 0.999);

  const Vec w = Vec::Constant(g.size(), 2.0);
  const Vec pw = gaussian_ground_state(A, v2(0, 0), 6, g, w);
  CHECK((pw.array().square() * w.array()).sum() * g.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));

  // Radial symmetry with A = I: swapping grid axes permutes the node values.
  const Grid ga(v2(-2, -1.5), v2(2, 1.5), {21, 15});
  const Grid gb(v2(-1.5, -2), v2(1.5, 2), {15, 21});
  const Vec pa = gaussian_ground_state(Mat::Identity(2, 2), v2(0, 0), 3, ga);
  const Vec pb = gaussian_ground_state(Mat::Identity(2, 2), v2(0, 0), 3, gb);
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 15; ++j) CHECK(pa(ga.linear_index({i, j})) == doctest::Approx(pb(gb.linear_index({j, i}))));
}

TEST_CASE("bump functions") {
  const double gamma = 50;
  const double rin = std::pow(gamma, -0.4);
  CHECK(bump_j(0, gamma) == 1.0);
  CHECK(bump_j(0.999 * rin, gamma) == 1.0);
  CHECK(bump_j(2 * rin, gamma) == 0.0);
  CHECK(bump_j(3 * rin, gamma) == 0.0);
  CHECK(bump_jbar(3 * rin, gamma) == 1.0);
  for (double t = 0; t < 3 * rin; t += rin / 97)
    CHECK(bump_j(t, gamma) * bump_j(t, gamma) + bump_jbar(t, gamma) * bump_jbar(t, gamma) ==
          doctest::Approx(1.0).epsilon(1e-14));

  // Finite-difference derivative on a fine grid.
  const int n = 200000;
  double worst = 0;
  for (int k = 0; k < n; ++k) {
    const double t0 = rin + rin * k / n, t1 = rin + rin * (k + 1) / n;
    worst = std::max(worst, std::abs(bump_j(t1, gamma) - bump_j(t0, gamma)) / (t1 - t0));
    worst = std::max(worst, std::abs(bump_jbar(t1, gamma) - bump_jbar(t0, gamma)) / (t1 - t0));
    const double tm = 0.5 * (t0 + t1);
    CHECK(bump_j_prime(tm, gamma) == doctest::Approx((bump_j(t1, gamma) - bump_j(t0, gamma)) / (t1 - t0)).epsilon(1e-4).scale(1));
  }
  CHECK(worst <= 5 * std::pow(gamma, 0.4) * 1.05);

  CHECK(bump_a(0) == 0.0);
  CHECK(bump_a(1) == doctest::Approx(std::exp(-1.0)));
  CHECK(bump_b(0.5) == doctest::Approx(0.5));
  CHECK(bump_b(0) == 0.0);
  CHECK(bump_b(1) == 1.0);
}

TEST_CASE("bump pair on a grid") {
  Mat A(2, 2);
  A << 3, 1, 1, 2;
  const double gamma = 40;
  const Grid g(v2(-1, -1), v2(1, 1), {61, 61});
  const BumpPair bp = bump_pair(v2(0.1, 0), A, gamma, g);
  CHECK(bp.radius_inner == doctest::Approx(std::pow(gamma, -0.4)));
  CHECK(bp.radius_outer == doctest::Approx(2 * std::pow(gamma, -0.4)));
  for (long i = 0; i < g.size(); ++i) {
    const Vec d = g.node(i) - bp.z;
    CHECK(bp.r(i) == doctest::Approx(std::sqrt(d.dot(A * d))));
    CHECK(std::abs(bp.J(i) * bp.J(i) + bp.Jbar(i) * bp.Jbar(i) - 1) <= 1e-12);
    if (bp.r(i) <= bp.radius_inner) CHECK(bp.J(i) == 1.0);
    if (bp.r(i) >= bp.radius_outer) CHECK(bp.J(i) == 0.0);
  }
  const Mat G = bp.grad_J(g);
  const long i = g.linear_index({38, 32});
  const double h = 1e-7;
  auto Jat = [&](const Vec& x) {
    const Vec d = x - bp.z;
    return bump_j(std::sqrt(d.dot(A * d)), gamma);
  };
  for (int a = 0; a < 2; ++a) {
    Vec e = Vec::Zero(2);
    e(a) = h;
    CHECK(G(a, i) == doctest::Approx((Jat(g.node(i) + e) - Jat(g.node(i) - e)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("log helper threshold") {
  const double y = std::exp(std::exp(1.0));
  const LogHelperResult r = log_helper_threshold(y, 1);
  CHECK(r.x0 >= y * std::log(r.x0) - 1e-9);
  for (double x = r.x0; x < 1e3 * r.x0; x *= 1.01) CHECK(x >= y * std::log(x) - 1e-9);
  CHECK(r.x0 <= r.bound);
  CHECK(r.c >= std::log(r.c) + 2 - 1e-9);
  CHECK(log_helper_threshold(100, 1).x0 <= log_helper_threshold(1000, 1).x0);
  const LogHelperResult r2 = log_helper_threshold(50, 2);
  CHECK(r2.x0 >= 50 * std::pow(std::log(r2.x0), 2) - 1e-9);
  CHECK_THROWS_AS(log_helper_threshold(10, 1), PreconditionError);
  CHECK_THROWS_AS(log_helper_threshold(100, 0.5), PreconditionError);
}

TEST_CASE("potential positivity after shifting") {
  const Barrier iv = interval_barrier(-1, 1);
  const auto [z, A] = potential_minimizer(iv, v1(1), 2);
  const Barrier pot = with_linear_objective(iv, v1(1), 2);
  OperatorOptions o;
  o.potential_shift = pot.value(z);
  const Grid g = policy_grid(iv, z, A, 50, Mode::Euclidean);
  const DiscreteOperator op = build_euclidean(iv, v1(1), 2, g, 50, o);
  CHECK(op.potential.minCoeff() >= 0.0);
  CHECK(lowest_eigenpairs(op, 1).eigenvalues(0) >= 0.0);
}

TEST_CASE("sparse dump format") {
  const DiscreteOperator op = build_harmonic(Mat::Identity(1, 1), v1(0), Grid(v1(-1), v1(1), {4}), 1);
  std::ostringstream os;
  dump_operator(os, op);
  std::istringstream is(os.str());
  long rows, cols, nnz;
  is >> rows >> cols >> nnz;
  CHECK(rows == 4);
  CHECK(cols == 4);
  CHECK(nnz == 10);
  long i, j;
  double v;
  int count = 0;
  Mat M = Mat::Zero(4, 4);
  while (is >> i >> j >> v) {
    M(i, j) = v;
    ++count;
  }
  CHECK(count == nnz);
  CHECK((M - Mat(op.matrix)).norm() == 0.0);
}
