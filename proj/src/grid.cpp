#include "sclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sclab/centralpath.hpp"

namespace sclab {

Grid::Grid(const Vec& lo_, const Vec& hi_, std::vector<int> npts_) : dim(static_cast<int>(lo_.size())), lo(lo_), hi(hi_), npts(std::move(npts_)) {
  if (dim < 1 || dim > 3) throw PreconditionError("grid: dimension must be 1, 2 or 3");
  if (hi.size() != dim || static_cast<int>(npts.size()) != dim) throw PreconditionError("grid: shape mismatch");
  for (int a = 0; a < dim; ++a) {
    if (!(lo(a) < hi(a))) throw PreconditionError("grid: need lo < hi on every axis");
    if (npts[static_cast<std::size_t>(a)] < 1) throw PreconditionError("grid: need at least one node per axis");
  }
}

Vec Grid::spacings() const {
  Vec h(dim);
  for (int a = 0; a < dim; ++a) h(a) = spacing(a);
  return h;
}

long Grid::size() const {
  long n = 1;
  for (int k : npts) n *= k;
  return n;
}

double Grid::cell_volume() const { return spacings().prod(); }

std::vector<int> Grid::multi_index(long index) const {
  std::vector<int> k(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    k[static_cast<std::size_t>(a)] = static_cast<int>(index % npts[static_cast<std::size_t>(a)]);
    index /= npts[static_cast<std::size_t>(a)];
  }
  return k;
}

long Grid::linear_index(const std::vector<int>& k) const {
  long idx = 0;
  for (int a = dim - 1; a >= 0; --a) idx = idx * npts[static_cast<std::size_t>(a)] + k[static_cast<std::size_t>(a)];
  return idx;
}

Vec Grid::node(long index) const {
  const auto k = multi_index(index);
  Vec x(dim);
  for (int a = 0; a < dim; ++a) x(a) = lo(a) + (k[static_cast<std::size_t>(a)] + 1) * spacing(a);
  return x;
}

Mat Grid::nodes() const {
  Mat X(dim, size());
  for (long i = 0; i < size(); ++i) X.col(i) = node(i);
  return X;
}

namespace {

double box_slack(const Barrier& b, const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(lo.size());
  double worst = kInf;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec c(n);
    for (int a = 0; a < n; ++a) c(a) = (mask >> a & 1) ? hi(a) : lo(a);
    if (!b.domain_test(c)) return -kInf;
    worst = std::min(worst, b.slack(c));
  }
  return worst;
}

}  // namespace

void validate_grid(const Grid& grid, const Barrier& b, double min_slack, long max_nodes) {
  if (grid.dim != b.dim) throw PreconditionError("grid: dimension does not match the barrier");
  const double s = box_slack(b, grid.lo, grid.hi);
  if (!(s >= min_slack)) {
    std::ostringstream os;
    os << "grid: box touches the domain boundary (corner slack " << s << " < " << min_slack << ")";
    throw DomainError(os.str());
  }
  if (grid.size() > max_nodes) {
    std::ostringstream os;
    os << "grid: " << grid.size() << " nodes exceed the cap " << max_nodes;
    throw PreconditionError(os.str());
  }
}

Grid policy_grid(const Barrier& b, const Vec& z, const Mat& A, double gamma, Mode mode, const GridPolicy& policy) {
  const int n = b.dim;
  require_interior(b, z);
  const Mat cov = harmonic_covariance(A, gamma, mode);
  const Mat Ainv = A.inverse();
  const double rin = std::pow(gamma, -0.4);
  Vec sigma(n), half(n);
  for (int a = 0; a < n; ++a) {
    sigma(a) = std::sqrt(cov(a, a));
    half(a) = policy.box_scale *
              std::max(policy.sigma_multiple * sigma(a), policy.dikin_multiple * rin * std::sqrt(Ainv(a, a)));
  }

  // Uniform shrink until the box fits, then push each side back out on its own.
  auto ok = [&](const Vec& lo, const Vec& hi) { return box_slack(b, lo, hi) >= policy.slack; };
  double t_lo = 0.0, t_hi = 1.0;
  if (!ok(z - half, z + half)) {
    for (int it = 0; it < 60; ++it) {
      const double t = 0.5 * (t_lo + t_hi);
      (ok(z - t * half, z + t * half) ? t_lo : t_hi) = t;
    }
  } else {
    t_lo = 1.0;
  }
  if (t_lo <= 0.0) throw DomainError("grid policy: no box around the center fits the domain");
  Vec lo = z - t_lo * half, hi = z + t_lo * half;
  for (int a = 0; a < n; ++a) {
    for (int side = 0; side < 2; ++side) {
      double s_lo = t_lo, s_hi = 1.0;
      auto trial = [&](double s) {
        Vec l = lo, h = hi;
        (side == 0 ? l(a) : h(a)) = side == 0 ? z(a) - s * half(a) : z(a) + s * half(a);
        return std::make_pair(l, h);
      };
      auto [l1, h1] = trial(1.0);
      if (ok(l1, h1)) {
        s_lo = 1.0;
      } else {
        for (int it = 0; it < 60; ++it) {
          const double s = 0.5 * (s_lo + s_hi);
          auto [l, h] = trial(s);
          (ok(l, h) ? s_lo : s_hi) = s;
        }
      }
      auto [l, h] = trial(s_lo);
      lo = l;
      hi = h;
    }
  }

  std::vector<int> npts(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const double h = sigma(a) / policy.points_per_sigma;
    int k = static_cast<int>(std::ceil((hi(a) - lo(a)) / h)) - 1;
    npts[static_cast<std::size_t>(a)] = std::clamp(k, policy.min_points, policy.max_points_per_axis);
  }
  long total = 1;
  for (int k : npts) total *= k;
  if (total > policy.max_nodes) {
    const double f = std::pow(static_cast<double>(policy.max_nodes) / static_cast<double>(total), 1.0 / n);
    for (auto& k : npts) k = std::max(policy.min_points, static_cast<int>(std::floor(k * f)));
  }
  Grid g(lo, hi, npts);
  validate_grid(g, b, policy.slack, policy.max_nodes);
  return g;
}

}  // namespace sclab
