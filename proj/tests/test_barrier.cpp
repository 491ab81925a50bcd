#include <doctest.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sclab/barrier.hpp"

using namespace sclab;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Barrier triangle() {
  Mat A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Vec b(3);
  b << 0, 0, 1;
  return polytope_barrier(A, b);
}

std::vector<Barrier> builtins() {
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  return {interval_barrier(-1, 1), box_barrier(v2(-1, -2), v2(3, 1)), polytope_barrier(A, Vec::Ones(4)), triangle(),
          halfline_barrier()};
}

Vec interior_sample(const Barrier& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (!b.bounds) return v1(0.05 + 5 * u(rng));
  for (;;) {
    Vec x(b.dim);
    for (int i = 0; i < b.dim; ++i) x(i) = b.bounds->first(i) + (b.bounds->second(i) - b.bounds->first(i)) * u(rng);
    if (b.domain_test(x) && b.slack(x) > 1e-3) return x;
  }
}

}  // namespace

TEST_CASE("local_norm examples") {
  const Barrier h = halfline_barrier();
  CHECK(local_norm(h, v1(2), v1(1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(local_norm(h, v1(2), v1(0)) == 0.0);
  const Barrier box = box_barrier(v2(-1, -1), v2(1, 1));
  CHECK(local_norm(box, v2(0, 0), v2(1, 0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const Mat fd = oracle::fd_hessian(box.value, v2(0, 0));
  CHECK((fd - 2 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(local_norm(h, v1(-1), v1(1)), DomainError);
}

TEST_CASE("local_norm is absolutely homogeneous") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (const Barrier& b : builtins()) {
    const Vec x = interior_sample(b, rng);
    Vec v(b.dim);
    for (int i = 0; i < b.dim; ++i) v(i) = nd(rng);
    for (double a : {-3.5, 0.0, 0.25, 7.0})
      CHECK(local_norm(b, x, a * v) == doctest::Approx(std::abs(a) * local_norm(b, x, v)).epsilon(1e-13));
  }
}

TEST_CASE("dikin_contains examples") {
  const Barrier h = halfline_barrier();
  CHECK(dikin_contains(h, v1(2), v1(3)));
  CHECK(dikin_contains(h, v1(2), v1(2)));
  CHECK_FALSE(dikin_contains(h, v1(2), v1(4.5)));
}

TEST_CASE("Dikin ball lies inside the domain") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (const Barrier& b : builtins()) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vec x = interior_sample(b, rng);
      Vec d(b.dim);
      for (int i = 0; i < b.dim; ++i) d(i) = nd(rng);
      const Vec y = x + 0.999 * d / local_norm(b, x, d) * std::pow(std::abs(nd(rng)) / 3.0, 0.2);
      if (dikin_contains(b, x, y)) CHECK(b.domain_test(y));
    }
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  std::mt19937_64 rng(13);
  for (const Barrier& b : builtins()) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = interior_sample(b, rng);
      const Vec g = b.gradient(x);
      const Vec gfd = oracle::fd_gradient(b.value, x, 1e-6 * std::max(1.0, x.norm()));
      CHECK((g - gfd).norm() <= 1e-5 * std::max(1.0, g.norm()));
      const Mat H = b.hessian(x);
      Mat Hfd(b.dim, b.dim);
      const double h = 1e-6 * std::max(1.0, x.norm());
      for (int j = 0; j < b.dim; ++j) {
        Vec e = Vec::Zero(b.dim);
        e(j) = h;
        Hfd.col(j) = (b.gradient(x + e) - b.gradient(x - e)) / (2 * h);
      }
      CHECK((H - Hfd).norm() <= 1e-5 * std::max(1.0, H.norm()));
      CHECK((H - H.transpose()).norm() == 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("self-concordance examples") {
  const Barrier h = halfline_barrier();
  std::vector<SamplePair> ps;
  for (double x : {0.5, 1.0, 2.0}) ps.push_back({v1(x), v1(1)});
  const SelfConcordanceReport r = check_self_concordance(h, ps);
  CHECK(r.max_ratio == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.passed);

  const Barrier q = quadratic_potential(Mat::Identity(2, 2), v2(0, 0));
  const SelfConcordanceReport rq = check_self_concordance(q, {{v2(0.3, -1), v2(1, 2)}, {v2(4, 4), v2(0, 1)}});
  CHECK(rq.max_ratio < 1e-6);

  const Barrier quartic = quartic_counterexample();
  const SelfConcordanceReport rb = check_self_concordance(quartic, {{v1(0.01), v1(1)}});
  CHECK(rb.max_ratio > 1.0);
  CHECK_FALSE(rb.passed);
}

TEST_CASE("built-in barriers are self-concordant on random samples") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (const Barrier& b : builtins()) {
    std::vector<SamplePair> ps;
    for (int k = 0; k < 300; ++k) {
      Vec u(b.dim);
      for (int i = 0; i < b.dim; ++i) u(i) = nd(rng);
      ps.push_back({interior_sample(b, rng), u});
    }
    CHECK(check_self_concordance(b, ps).max_ratio <= 1.0 + 1e-3);
  }
}

TEST_CASE("Hessian stability examples") {
  const Barrier h = halfline_barrier();
  const HessianStabilityReport r = check_hessian_stability(h, v1(2), v1(3), {v1(1)});
  REQUIRE(r.ratios.size() == 1);
  CHECK(r.ratios[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(r.lower == doctest::Approx(0.5));
  CHECK(r.upper == doctest::Approx(2.0));
  CHECK(r.passed);

  const HessianStabilityReport same = check_hessian_stability(h, v1(2), v1(2), {v1(1)});
  CHECK(same.ratios[0] == doctest::Approx(1.0));

  const Barrier iv = interval_barrier(-1, 1);
  const HessianStabilityReport ri = check_hessian_stability(iv, v1(0), v1(0.2 / std::sqrt(2.0)), {v1(1)});
  CHECK(ri.r == doctest::Approx(0.2));
  CHECK(ri.ratios[0] >= 0.8);
  CHECK(ri.ratios[0] <= 1.25);
  CHECK(ri.passed);

  CHECK_THROWS_AS(check_hessian_stability(h, v1(2), v1(4.5), {v1(1)}), PreconditionError);
}

TEST_CASE("barrier parameter estimate") {
  const Barrier iv = interval_barrier(-1, 1);
  std::vector<Vec> xs;
  for (int k = 0; k <= 1980; ++k) xs.push_back(v1(-0.99 + k * 0.001));
  // g^2 / H = 4x^2 / (2 (1 + x^2)) increases towards the ends of the sample range.
  const double want = 2 * 0.99 * 0.99 / (1 + 0.99 * 0.99);
  CHECK(barrier_parameter_estimate(iv, xs) == doctest::Approx(want).epsilon(1e-12));
  CHECK(barrier_parameter_estimate(iv, xs) <= iv.theta);
  CHECK(barrier_parameter_estimate(iv, {v1(0)}) == 0.0);

  for (const Barrier& b : builtins()) {
    if (!b.bounds) continue;
    const std::vector<Vec> s = sobol_interior_samples(b, 10000);
    CHECK(s.size() == 10000);
    CHECK(barrier_parameter_estimate(b, s) <= b.theta + 1e-6);
  }
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  CHECK(polytope_barrier(A, Vec::Ones(4)).theta == 4.0);
}

TEST_CASE("linear objective leaves the Hessian unchanged") {
  std::mt19937_64 rng(19);
  for (const Barrier& b : builtins()) {
    const Barrier p = with_linear_objective(b, Vec::Constant(b.dim, 0.7), 3.0);
    for (int k = 0; k < 5; ++k) {
      const Vec x = interior_sample(b, rng);
      CHECK((p.hessian(x) - b.hessian(x)).norm() == 0.0);
      CHECK(p.value(x) == doctest::Approx(b.value(x) + 3.0 * 0.7 * x.sum()));
    }
  }
}

TEST_CASE("affine pullback transforms derivatives") {
  Mat T(2, 2);
  T << 2, 1, 0, 0.5;
  const Vec s = v2(0.1, -0.2);
  const Barrier b = box_barrier(v2(-1, -1), v2(1, 1));
  const Barrier p = affine_pullback(b, T, s);
  const Vec x = v2(0.05, 0.3);
  CHECK(p.value(x) == doctest::Approx(b.value(T * x + s)));
  CHECK((p.hessian(x) - T.transpose() * b.hessian(T * x + s) * T).norm() < 1e-12);
  CHECK((p.gradient(x) - oracle::fd_gradient(p.value, x, 1e-6)).norm() < 1e-6);
}

TEST_CASE("barrier config parsing") {
  const Barrier tri = barrier_from_config(YAML::Load("{kind: polytope, A: [[-1,0],[0,-1],[1,1]], b: [0,0,1]}"));
  CHECK(tri.dim == 2);
  CHECK(tri.theta == 3.0);
  CHECK(tri.domain_test(v2(0.2, 0.2)));
  CHECK_FALSE(tri.domain_test(v2(0.6, 0.6)));
  const Barrier iv = barrier_from_config(YAML::Load("{kind: interval, lo: -2, hi: 3}"));
  CHECK(iv.domain_test(v1(2.5)));
  CHECK_THROWS_AS(barrier_from_config(YAML::Load("{kind: simplex}")), ConfigError);
  CHECK_THROWS_AS(barrier_from_config(YAML::Load("{lo: 1}")), ConfigError);
  CHECK_THROWS_AS(barrier_from_config(YAML::Load("{kind: polytope, A: [[1,0],[1]], b: [1,1]}")), ConfigError);
  CHECK_THROWS_AS(barrier_from_config(YAML::Load("{kind: interval, lo: 1, hi: 0}")), ConfigError);
}
