#include "sclab/centralpath.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace sclab {

namespace {

Eigen::LLT<Mat> factor(const Mat& H) {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw NumericalError("Hessian is not positive definite");
  return llt;
}

}  // namespace

double newton_decrement(const Barrier& b, const Vec& c, double eta, const Vec& x) {
  require_interior(b, x);
  const Vec g = eta * c + b.gradient(x);
  auto llt = factor(b.hessian(x));
  return std::sqrt(std::max(0.0, g.dot(llt.solve(g))));
}

PathPoint center(const Barrier& b, const Vec& c, double eta, const Vec& x0, double tol, int max_iter) {
  if (!(tol > 0.0 && tol <= 0.1)) throw PreconditionError("center: tol must lie in (0, 0.1]");
  if (c.size() != b.dim) throw PreconditionError("center: objective dimension mismatch");
  require_interior(b, x0);
  Vec x = x0;
  double lam = kInf;
  for (int it = 0; it < max_iter; ++it) {
    const Vec g = eta * c + b.gradient(x);
    const Mat H = b.hessian(x);
    auto llt = factor(H);
    const Vec dx = -llt.solve(g);
    lam = std::sqrt(std::max(0.0, -g.dot(dx)));
    if (lam <= tol) return {eta, x, lam, H, it};
    double step = lam > 0.25 ? 1.0 / (1.0 + lam) : 1.0;
    Vec xn = x + step * dx;
    while (!b.domain_test(xn)) {
      step *= 0.5;
      if (step < 1e-16) throw NumericalError("center: step collapsed at the boundary");
      xn = x + step * dx;
    }
    x = xn;
  }
  throw ConvergenceError("center: iteration cap reached", lam);
}

PathStabilityReport check_path_stability(const Barrier& b, const Vec& c, double eta, double eta_prime,
                                         double delta, const Vec& x0, double constant) {
  const double hi = (1.0 + delta / std::sqrt(b.theta)) * eta;
  if (!(eta <= eta_prime && eta_prime <= hi * (1.0 + 1e-12)))
    throw PreconditionError("path stability: need eta <= eta' <= (1 + delta/sqrt(theta)) eta");
  PathStabilityReport rep{eta, eta_prime, delta, 0.0, constant * delta, false};
  const PathPoint p = center(b, c, eta, x0);
  const PathPoint q = center(b, c, eta_prime, p.x);
  rep.distance = local_norm(b, p.x, q.x - p.x);
  rep.passed = rep.distance <= rep.limit;
  return rep;
}

DualityGapReport duality_gap_check(const Barrier& b, const Vec& c, const PathPoint& p, double val) {
  DualityGapReport rep;
  rep.gap = c.dot(p.x) - val;
  if (p.eta <= 0.0) {
    rep.bound = kInf;
    rep.passed = true;
    return rep;
  }
  rep.bound = b.theta / p.eta;
  const double lam = p.newton_decrement;
  rep.slack = lam < 1.0 ? std::sqrt(b.theta) / p.eta * lam / (1.0 - lam) : kInf;
  rep.passed = rep.gap <= rep.bound + rep.slack + 1e-14 * std::max(1.0, std::abs(val));
  return rep;
}

EtaSchedule eta_schedule(const Barrier& b, const Vec& c, double gamma, double eps, double kappa, Mode mode,
                         const std::optional<Vec>& x0, double eta0, double center_tol) {
  if (!(gamma > 0.0)) throw PreconditionError("eta schedule: gamma must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("eta schedule: eps must lie in (0, 1)");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw PreconditionError("eta schedule: kappa must lie in (0, 1]");
  if (!std::isfinite(b.theta)) throw PreconditionError("eta schedule: barrier parameter must be finite");
  if (mode == Mode::Euclidean && !x0) throw PreconditionError("eta schedule: Euclidean mode needs a start point");

  EtaSchedule s;
  s.mode = mode;
  s.kappa = kappa;
  s.gamma = gamma;
  s.theta = b.theta;
  s.eps = eps;
  s.dim = b.dim;
  const double target = b.theta / eps;
  const double n = b.dim;

  double eta = eta0;
  std::optional<Vec> x = x0;
  while (true) {
    double chi = 1.0;
    if (x) {
      PathPoint p = center(b, c, eta, *x, center_tol);
      x = p.x;
      if (mode == Mode::Euclidean) {
        Eigen::SelfAdjointEigenSolver<Mat> es(p.hessian_at_x, Eigen::EigenvaluesOnly);
        chi = 1.0 / std::sqrt(es.eigenvalues()(0));
      }
      s.centers.push_back(std::move(p));
    }
    s.etas.push_back(eta);
    s.chis.push_back(chi);
    if (eta >= target) break;
    eta *= 1.0 + kappa / std::sqrt((n + 2.0 * gamma * chi) * b.theta);
  }
  return s;
}

double gaussian_tv_bound(const Vec& mu1, const Mat& S1, const Vec& mu2, const Mat& S2) {
  const Eigen::Index n = mu1.size();
  if (mu2.size() != n || S1.rows() != n || S2.rows() != n) throw PreconditionError("tv bound: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es2(S2);
  if (es2.eigenvalues().minCoeff() <= 0.0) throw PreconditionError("tv bound: S2 must be SPD");
  const Mat S2mh = es2.eigenvectors() * es2.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   es2.eigenvectors().transpose();
  const Mat M = S2mh * S1 * S2mh;
  Eigen::SelfAdjointEigenSolver<Mat> esm(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  if (esm.eigenvalues().minCoeff() < 0.5 - 1e-12)
    throw PreconditionError("tv bound: eigenvalues of S2^-1/2 S1 S2^-1/2 must be at least 1/2");
  const Vec dmu = mu2 - mu1;
  const Vec w = S2mh * dmu;
  const double fro = (M - Mat::Identity(n, n)).squaredNorm();
  return 0.5 * std::sqrt(fro + w.squaredNorm());
}

Mat harmonic_covariance(const Mat& g, double gamma, Mode mode) {
  if (mode == Mode::Euclidean) return sym_apply(g, [gamma](double l) { return 1.0 / (2.0 * gamma * std::sqrt(l)); });
  return sym_apply(g, [gamma](double l) { return 1.0 / (2.0 * gamma * l); });
}

double ground_overlap_bound(const Barrier& b, const Vec& x, const Vec& y, double gamma, Mode mode) {
  const double r = local_norm(b, x, y - x);
  if (r >= 0.25) throw PreconditionError("ground overlap bound: need ||y - x||_x < 1/4");
  require_interior(b, y);
  return gaussian_tv_bound(x, harmonic_covariance(b.hessian(x), gamma, mode), y,
                           harmonic_covariance(b.hessian(y), gamma, mode));
}

OverlapBracket hellinger_overlap_bracket(const Vec& u, const Vec& v, double cell_volume) {
  if (u.size() != v.size()) throw PreconditionError("overlap bracket: size mismatch");
  if ((u.array() < 0).any() || (v.array() < 0).any()) throw PreconditionError("overlap bracket: negative density");
  const double su = u.sum() * cell_volume, sv = v.sum() * cell_volume;
  if (std::abs(su - 1.0) > 1e-8 || std::abs(sv - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "overlap bracket: densities not normalized (" << su << ", " << sv << ")";
    throw PreconditionError(os.str());
  }
  OverlapBracket out;
  out.overlap = (u.cwiseProduct(v)).cwiseSqrt().sum() * cell_volume;
  out.tv = std::min(1.0, 0.5 * (u - v).cwiseAbs().sum() * cell_volume);
  out.lower = 1.0 - out.tv;
  out.upper = std::sqrt(std::max(0.0, 1.0 - out.tv * out.tv));
  const double tol = 1e-9;
  if (out.overlap < out.lower - tol || out.overlap > out.upper + tol)
    throw NumericalError("overlap bracket violated");
  return out;
}

void write_path_csv(std::ostream& os, const Vec& c, const EtaSchedule& s, double val) {
  os << "eta";
  for (int i = 0; i < s.dim; ++i) os << ",x" << i;
  os << ",decrement,gap_bound,gap_actual\n";
  os.precision(17);
  for (const auto& p : s.centers) {
    os << p.eta;
    for (int i = 0; i < p.x.size(); ++i) os << ',' << p.x(i);
    os << ',' << p.newton_decrement << ',' << s.theta / p.eta << ',' << c.dot(p.x) - val << '\n';
  }
}

}  // namespace sclab
