#include "sclab/operator.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace sclab {

const char* kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::Euclidean: return "euclidean";
    case OperatorKind::Riemannian: return "riemannian";
    case OperatorKind::Harmonic: return "harmonic";
  }
  return "?";
}

Vec DiscreteOperator::measure() const {
  const double dv = grid.cell_volume();
  if (weight) return *weight * dv;
  return Vec::Constant(size(), dv);
}

Vec DiscreteOperator::to_frame(const Vec& psi) const { return psi.cwiseProduct(measure().cwiseSqrt()); }

Vec DiscreteOperator::from_frame(const Vec& u) const { return u.cwiseQuotient(measure().cwiseSqrt()); }

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Vec potential_values(const Barrier& b, const Vec& c, double eta, const Grid& grid, double gamma,
                     const OperatorOptions& opt) {
  const long N = grid.size();
  Vec pot(N);
  const double g2 = gamma * gamma;
  for (long i = 0; i < N; ++i) {
    const Vec x = grid.node(i);
    const double v = b.value(x) + eta * c.dot(x) - opt.potential_shift;
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "operator: non-finite potential at node " << i;
      throw NumericalError(os.str());
    }
    pot(i) = g2 * v;
  }
  return pot;
}

SpMat euclidean_stencil(const Grid& grid, double scale, const Vec& pot) {
  const long N = grid.size();
  const int d = grid.dim;
  const Vec h = grid.spacings();
  double diag = 0.0;
  for (int a = 0; a < d; ++a) diag += 2.0 / (h(a) * h(a));
  Triplets t;
  t.reserve(static_cast<std::size_t>(N) * (2 * d + 1));
  long stride = 1;
  std::vector<long> strides(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    strides[static_cast<std::size_t>(a)] = stride;
    stride *= grid.npts[static_cast<std::size_t>(a)];
  }
  for (long i = 0; i < N; ++i) {
    const auto k = grid.multi_index(i);
    t.emplace_back(i, i, scale * diag + pot(i));
    for (int a = 0; a < d; ++a) {
      const double off = -scale / (h(a) * h(a));
      const auto sa = static_cast<std::size_t>(a);
      if (k[sa] > 0) t.emplace_back(i, i - strides[sa], off);
      if (k[sa] + 1 < grid.npts[sa]) t.emplace_back(i, i + strides[sa], off);
    }
  }
  SpMat S(N, N);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

void check_grid_barrier(const Barrier& b, const Vec& c, const Grid& grid) {
  if (c.size() != b.dim) throw PreconditionError("operator: objective dimension mismatch");
  validate_grid(grid, b, 1e-6, 50'000'000);
}

}  // namespace

DiscreteOperator build_euclidean(const Barrier& b, const Vec& c, double eta, const Grid& grid, double gamma,
                                 const OperatorOptions& opt) {
  check_grid_barrier(b, c, grid);
  DiscreteOperator op;
  op.grid = grid;
  op.gamma = gamma;
  op.kind = OperatorKind::Euclidean;
  op.kinetic_scale = opt.kinetic_scale;
  op.potential = potential_values(b, c, eta, grid, gamma, opt);
  op.matrix = euclidean_stencil(grid, opt.kinetic_scale, op.potential);
  return op;
}

DiscreteOperator build_harmonic(const Mat& A, const Vec& z, const Grid& grid, double gamma,
                                const OperatorOptions& opt) {
  Barrier q = quadratic_potential(A, z);
  DiscreteOperator op = build_euclidean(q, Vec::Zero(z.size()), 0.0, grid, gamma, opt);
  op.kind = OperatorKind::Harmonic;
  return op;
}

DiscreteOperator build_riemannian(const Barrier& b, const Vec& c, double eta, const Grid& grid, double gamma,
                                  const OperatorOptions& opt) {
  check_grid_barrier(b, c, grid);
  const int d = grid.dim;
  const Vec h = grid.spacings();
  const double dv = grid.cell_volume();

  // Extended lattice including the Dirichlet ring: ext index k in [0, n+1].
  std::vector<int> ext(static_cast<std::size_t>(d));
  std::vector<long> est(static_cast<std::size_t>(d));
  long ne = 1, ni = 1;
  for (int a = 0; a < d; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    ext[sa] = grid.npts[sa] + 2;
    est[sa] = ne;
    ne *= ext[sa];
    ni *= grid.npts[sa];
  }
  auto ext_multi = [&](long e) {
    std::vector<int> k(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
      k[static_cast<std::size_t>(a)] = static_cast<int>(e % ext[static_cast<std::size_t>(a)]);
      e /= ext[static_cast<std::size_t>(a)];
    }
    return k;
  };
  // Interior linear index of an extended node, -1 on the ring.
  auto interior = [&](const std::vector<int>& k) -> long {
    long idx = 0;
    for (int a = d - 1; a >= 0; --a) {
      const auto sa = static_cast<std::size_t>(a);
      if (k[sa] < 1 || k[sa] > grid.npts[sa]) return -1;
      idx = idx * grid.npts[sa] + (k[sa] - 1);
    }
    return idx;
  };
  auto coord = [&](const std::vector<int>& k) {
    Vec x(d);
    for (int a = 0; a < d; ++a) x(a) = grid.lo(a) + k[static_cast<std::size_t>(a)] * h(a);
    return x;
  };

  // D = g^{-1} sqrt(det g) on the extended lattice; row-major d x d blocks.
  std::vector<double> D(static_cast<std::size_t>(ne * d * d));
  DiscreteOperator op;
  op.weight = Vec(ni);
  op.inv_metric.resize(static_cast<std::size_t>(ni));
  for (long e = 0; e < ne; ++e) {
    const auto k = ext_multi(e);
    const Vec x = coord(k);
    const Mat g = b.hessian(x);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success || !g.allFinite()) {
      std::ostringstream os;
      os << "operator: Hessian not SPD at node (";
      for (int a = 0; a < d; ++a) os << (a ? ", " : "") << x(a);
      os << ")";
      throw NumericalError(os.str());
    }
    const Mat L = llt.matrixL();
    const double sq = L.diagonal().prod();
    const Mat ginv = llt.solve(Mat::Identity(d, d));
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) D[static_cast<std::size_t>((e * d + r) * d + s)] = ginv(r, s) * sq;
    const long i = interior(k);
    if (i >= 0) {
      (*op.weight)(i) = sq;
      op.inv_metric[static_cast<std::size_t>(i)] = ginv;
    }
  }
  auto Dat = [&](long e, int r, int s) { return D[static_cast<std::size_t>((e * d + r) * d + s)]; };

  Triplets t;
  t.reserve(static_cast<std::size_t>(ni) * (d == 1 ? 3 : 9 * d));
  auto add = [&](long i, long j, double v) {
    if (i >= 0 && j >= 0) t.emplace_back(i, j, v);
  };

  for (long e = 0; e < ne; ++e) {
    const auto k = ext_multi(e);
    for (int a = 0; a < d; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      if (k[sa] > grid.npts[sa]) continue;
      bool off_ring = false;
      for (int o = 0; o < d; ++o)
        if (o != a && (k[static_cast<std::size_t>(o)] < 1 || k[static_cast<std::size_t>(o)] > grid.npts[static_cast<std::size_t>(o)]))
          off_ring = true;
      if (off_ring) continue;
      // Face between e and e + e_a.
      auto kq = k;
      kq[sa] += 1;
      const long p = interior(k), q = interior(kq);
      const double w = 0.5 * (Dat(e, a, a) + Dat(e + est[sa], a, a)) * dv / (h(a) * h(a));
      add(p, p, w);
      add(q, q, w);
      add(p, q, -w);
      add(q, p, -w);
    }
    for (int a = 0; a < d; ++a) {
      for (int bb = a + 1; bb < d; ++bb) {
        const auto sa = static_cast<std::size_t>(a), sb = static_cast<std::size_t>(bb);
        if (k[sa] > grid.npts[sa] || k[sb] > grid.npts[sb]) continue;
        bool off_ring = false;
        for (int o = 0; o < d; ++o)
          if (o != a && o != bb &&
              (k[static_cast<std::size_t>(o)] < 1 || k[static_cast<std::size_t>(o)] > grid.npts[static_cast<std::size_t>(o)]))
            off_ring = true;
        if (off_ring) continue;
        // Cell with corners e, e+e_a, e+e_b, e+e_a+e_b.
        const long ce[4] = {e, e + est[sa], e + est[sb], e + est[sa] + est[sb]};
        std::vector<int> kc[4] = {k, k, k, k};
        kc[1][sa] += 1;
        kc[2][sb] += 1;
        kc[3][sa] += 1;
        kc[3][sb] += 1;
        long ci[4];
        for (int m = 0; m < 4; ++m) ci[m] = interior(kc[m]);
        double Dab = 0.0;
        for (int m = 0; m < 4; ++m) Dab += 0.25 * Dat(ce[m], a, bb);
        if (Dab == 0.0) continue;
        const double alpha[4] = {-0.5 / h(a), 0.5 / h(a), -0.5 / h(a), 0.5 / h(a)};
        const double beta[4] = {-0.5 / h(bb), -0.5 / h(bb), 0.5 / h(bb), 0.5 / h(bb)};
        for (int m = 0; m < 4; ++m)
          for (int l = 0; l < 4; ++l) add(ci[m], ci[l], Dab * dv * (alpha[m] * beta[l] + beta[m] * alpha[l]));
      }
    }
  }
  SpMat K(ni, ni);
  K.setFromTriplets(t.begin(), t.end());

  op.grid = grid;
  op.gamma = gamma;
  op.kind = OperatorKind::Riemannian;
  op.kinetic_scale = opt.kinetic_scale;
  op.potential = potential_values(b, c, eta, grid, gamma, opt);
  const Vec s = (*op.weight * dv).cwiseSqrt().cwiseInverse();
  SpMat S = s.asDiagonal() * K * s.asDiagonal();
  S *= opt.kinetic_scale;
  SpMat P(ni, ni);
  P.setIdentity();
  P.diagonal() = op.potential;
  op.matrix = S + P;
  op.matrix.prune(0.0);
  op.matrix.makeCompressed();
  return op;
}

double symmetry_defect(const SpMat& S) {
  const SpMat T = S.transpose();
  const SpMat diff = S - T;
  double scale = 0.0, worst = 0.0;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return scale > 0.0 ? worst / scale : worst;
}

Vec gaussian_ground_state(const Mat& A, const Vec& z, double gamma, const Grid& grid,
                          const std::optional<Vec>& weight) {
  const Mat R = sym_apply(A, [](double l) { return std::sqrt(l); });
  const long N = grid.size();
  Vec psi(N);
  for (long i = 0; i < N; ++i) {
    const Vec dx = grid.node(i) - z;
    psi(i) = std::exp(-0.5 * gamma * dx.dot(R * dx));
  }
  Vec m = Vec::Constant(N, grid.cell_volume());
  if (weight) m = m.cwiseProduct(*weight);
  const double nrm = std::sqrt(psi.cwiseAbs2().dot(m));
  if (!(nrm > 0.0)) throw NumericalError("gaussian ground state vanishes on the grid");
  return psi / nrm;
}

double bump_a(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

double bump_b(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double p = bump_a(x), q = bump_a(1.0 - x);
  return p / (p + q);
}

double bump_c(double s) { return bump_b(2.0 + s) * bump_b(2.0 - s); }

namespace {

double bump_b_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double p = bump_a(x), q = bump_a(1.0 - x);
  const double dp = p / (x * x), dq = q / ((1.0 - x) * (1.0 - x));
  const double den = p + q;
  return (dp * q + p * dq) / (den * den);
}

}  // namespace

double bump_c_prime(double s) {
  return bump_b_prime(2.0 + s) * bump_b(2.0 - s) - bump_b(2.0 + s) * bump_b_prime(2.0 - s);
}

double bump_j(double t, double gamma) {
  return std::sin(0.5 * std::numbers::pi * bump_c(t * std::pow(gamma, 0.4)));
}

double bump_jbar(double t, double gamma) {
  return std::cos(0.5 * std::numbers::pi * bump_c(t * std::pow(gamma, 0.4)));
}

double bump_j_prime(double t, double gamma) {
  const double s = std::pow(gamma, 0.4);
  const double c = bump_c(t * s);
  return std::cos(0.5 * std::numbers::pi * c) * 0.5 * std::numbers::pi * bump_c_prime(t * s) * s;
}

double bump_jbar_prime(double t, double gamma) {
  const double s = std::pow(gamma, 0.4);
  const double c = bump_c(t * s);
  return -std::sin(0.5 * std::numbers::pi * c) * 0.5 * std::numbers::pi * bump_c_prime(t * s) * s;
}

BumpPair bump_pair(const Vec& z, const Mat& A, double gamma, const Grid& grid) {
  BumpPair bp;
  bp.z = z;
  bp.A = A;
  bp.gamma = gamma;
  bp.radius_inner = std::pow(gamma, -0.4);
  bp.radius_outer = 2.0 * bp.radius_inner;
  const long N = grid.size();
  bp.J.resize(N);
  bp.Jbar.resize(N);
  bp.r.resize(N);
  for (long i = 0; i < N; ++i) {
    const Vec dx = grid.node(i) - z;
    const double r = std::sqrt(std::max(0.0, dx.dot(A * dx)));
    bp.r(i) = r;
    bp.J(i) = bump_j(r, gamma);
    bp.Jbar(i) = bump_jbar(r, gamma);
  }
  return bp;
}

Mat BumpPair::grad_J(const Grid& grid, bool bar) const {
  const long N = grid.size();
  Mat G = Mat::Zero(grid.dim, N);
  for (long i = 0; i < N; ++i) {
    if (r(i) == 0.0) continue;
    const Vec dx = grid.node(i) - z;
    const double jp = bar ? bump_jbar_prime(r(i), gamma) : bump_j_prime(r(i), gamma);
    G.col(i) = jp * (A * dx) / r(i);
  }
  return G;
}

LogHelperResult log_helper_threshold(double y, double alpha) {
  if (!(y >= std::exp(std::exp(1.0)) * (1.0 - 1e-15))) throw PreconditionError("log helper: need y >= e^e");
  if (!(alpha >= 1.0)) throw PreconditionError("log helper: need alpha >= 1");
  auto h = [&](double x) { return x - y * std::pow(std::log(x), alpha); };
  // h < 0 at x = y and has a single sign change beyond it.
  double lo = y, hi = 2.0 * y;
  while (h(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0.0 ? lo : hi) = mid;
  }
  const double root = hi;
  const double p = std::pow(10.0, std::floor(std::log10(root)) - 2.0);
  double x0 = std::ceil(root / p - 1e-9) * p;
  if (h(x0) < 0.0) x0 += p;
  for (int k = 0; k <= 4000; ++k) {
    const double x = x0 * std::pow(1000.0, k / 4000.0);
    if (h(x) < -1e-9 * x) throw NumericalError("log helper: scan found x above x0 violating the bound");
  }
  LogHelperResult res;
  res.x0 = x0;
  // Smallest c with c >= (log c + 1 + alpha)^alpha: bisect the largest root from above.
  auto k = [&](double c) { return c - std::pow(std::log(c) + 1.0 + alpha, alpha); };
  double clo = 1.0, chi = 2.0;
  while (k(chi) < 0.0) chi *= 2.0;
  clo = chi / 2.0;
  while (k(clo) > 0.0 && clo > 1.0) {
    chi = clo;
    clo /= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (clo + chi);
    (k(mid) < 0.0 ? clo : chi) = mid;
  }
  res.c = chi;
  res.bound = res.c * y * std::pow(std::log(y), alpha);
  if (res.x0 > res.bound) throw NumericalError("log helper: threshold exceeds c y log^alpha(y)");
  return res;
}

RegionReport inner_region_check(const Barrier& potential, const BumpPair& bump, const Grid& grid) {
  if (bump.radius_outer > 0.5) throw PreconditionError("inner region: need 2 gamma^{-2/5} <= 1/2");
  RegionReport rep;
  rep.bound = 8.0 / 3.0 * std::pow(bump.gamma, 0.8);
  const double vz = potential.value(bump.z);
  const double g2 = bump.gamma * bump.gamma;
  for (long i = 0; i < grid.size(); ++i) {
    if (bump.J(i) <= 0.0) continue;
    const Vec x = grid.node(i);
    const Vec dx = x - bump.z;
    const double q = 0.5 * dx.dot(bump.A * dx);
    const double dev = g2 * std::abs(potential.value(x) - vz - q);
    rep.support_max = std::max(rep.support_max, dev);
    rep.value = std::max(rep.value, bump.J(i) * bump.J(i) * dev);
  }
  rep.passed = rep.value <= rep.bound;
  return rep;
}

namespace {

Mat fd_gradient(const Vec& f, const Grid& grid) {
  const long N = grid.size();
  const int d = grid.dim;
  Mat G(d, N);
  long stride = 1;
  for (int a = 0; a < d; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const double h = grid.spacing(a);
    for (long i = 0; i < N; ++i) {
      const int k = static_cast<int>((i / stride) % grid.npts[sa]);
      if (grid.npts[sa] == 1) {
        G(a, i) = 0.0;
      } else if (k == 0) {
        G(a, i) = (f(i + stride) - f(i)) / h;
      } else if (k + 1 == grid.npts[sa]) {
        G(a, i) = (f(i) - f(i - stride)) / h;
      } else {
        G(a, i) = (f(i + stride) - f(i - stride)) / (2.0 * h);
      }
    }
    stride *= grid.npts[sa];
  }
  return G;
}

}  // namespace

RegionReport boundary_gradient_check(const BumpPair& bump, const Grid& grid) {
  RegionReport rep;
  Eigen::SelfAdjointEigenSolver<Mat> es(bump.A, Eigen::EigenvaluesOnly);
  rep.bound = 13.0 * es.eigenvalues().maxCoeff() * std::pow(bump.gamma, 0.8);
  const Mat gj = fd_gradient(bump.J, grid), gb = fd_gradient(bump.Jbar, grid);
  rep.value = std::max(gj.colwise().squaredNorm().maxCoeff(), gb.colwise().squaredNorm().maxCoeff());
  rep.passed = rep.value <= rep.bound;
  return rep;
}

RegionReport outer_region_check(const DiscreteOperator& op, const BumpPair& bump, int probes, unsigned seed) {
  RegionReport rep;
  rep.bound = 0.25 * std::pow(bump.gamma, 1.2);
  rep.value = kInf;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<long> pick(0, op.size() - 1);
  const long N = op.size();
  for (int p = 0; p < probes; ++p) {
    Vec u(N);
    if (p % 2 == 0) {
      for (long i = 0; i < N; ++i) u(i) = nd(rng);
    } else {
      // Smooth probe: Gaussian bump of bump-radius width at a random node.
      const Vec c = op.grid.node(pick(rng));
      for (long i = 0; i < N; ++i) {
        const Vec dx = op.grid.node(i) - c;
        u(i) = std::exp(-dx.dot(bump.A * dx) / (bump.radius_inner * bump.radius_inner));
      }
      u = op.to_frame(u);
    }
    const Vec v = bump.Jbar.cwiseProduct(u);
    const double nn = v.squaredNorm();
    if (nn == 0.0) continue;
    rep.value = std::min(rep.value, v.dot(op.matrix * v) / nn);
  }
  rep.passed = rep.value >= rep.bound * (1.0 - 1e-9);
  return rep;
}

void dump_operator(std::ostream& os, const DiscreteOperator& op) {
  os << op.matrix.rows() << ' ' << op.matrix.cols() << ' ' << op.matrix.nonZeros() << '\n';
  char buf[64];
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.matrix, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
}

}  // namespace sclab
