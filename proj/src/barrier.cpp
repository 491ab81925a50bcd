#include "sclab/barrier.hpp"

#include <yaml-cpp/yaml.h>

#include <boost/random/sobol.hpp>
#include <cmath>
#include <sstream>

namespace sclab {

namespace {

std::optional<std::pair<Vec, Vec>> polytope_bounds(const Mat& A, const Vec& b, std::optional<Vec>& centroid) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m < n) return std::nullopt;
  // Vertex enumeration over all n-subsets of facets; fine for desk-sized m.
  Vec lo = Vec::Constant(n, kInf);
  Vec hi = Vec::Constant(n, -kInf);
  std::vector<int> idx(n);
  bool any = false;
  Vec vsum = Vec::Zero(n);
  int count = 0;
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat S(n, n);
      Vec r(n);
      for (int i = 0; i < n; ++i) {
        S.row(i) = A.row(idx[i]);
        r(i) = b(idx[i]);
      }
      Eigen::FullPivLU<Mat> lu(S);
      if (!lu.isInvertible()) return;
      Vec v = lu.solve(r);
      if (((A * v - b).array() > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())).any()) return;
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
      vsum += v;
      ++count;
      any = true;
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (!any) return std::nullopt;
  // The vertex centroid is interior only for bounded polytopes with nonempty interior.
  Vec cen = vsum / count;
  if (((A * cen - b).array() < 0).all()) centroid = cen;
  for (int axis = 0; axis < n; ++axis) {
    for (double sgn : {1.0, -1.0}) {
      // A feasible point past the vertex hull means the domain is unbounded.
      Vec probe = 0.5 * (lo + hi);
      probe(axis) = sgn > 0 ? hi(axis) + 1.0 + (hi - lo).norm() : lo(axis) - 1.0 - (hi - lo).norm();
      if (((A * probe - b).array() < 0).all()) {
        centroid.reset();
        return std::nullopt;
      }
    }
  }
  return std::make_pair(lo, hi);
}

}  // namespace

Barrier polytope_barrier(const Mat& A, const Vec& b) {
  if (A.rows() != b.size() || A.rows() == 0) throw PreconditionError("polytope: A rows must match b");
  Barrier out;
  out.dim = static_cast<int>(A.cols());
  out.theta = static_cast<double>(A.rows());
  out.name = "polytope";
  out.slack = [A, b](const Vec& x) { return (b - A * x).minCoeff(); };
  out.domain_test = [A, b](const Vec& x) {
    if (x.size() != A.cols() || !x.allFinite()) return false;
    return ((b - A * x).array() > 0).all();
  };
  out.value = [A, b](const Vec& x) { return -(b - A * x).array().log().sum(); };
  out.gradient = [A, b](const Vec& x) -> Vec {
    Vec s = b - A * x;
    return A.transpose() * s.cwiseInverse();
  };
  out.hessian = [A, b](const Vec& x) -> Mat {
    Vec s = b - A * x;
    Vec w = s.cwiseInverse().cwiseAbs2();
    return A.transpose() * w.asDiagonal() * A;
  };
  out.bounds = polytope_bounds(A, b, out.start);
  return out;
}

Barrier interval_barrier(double lo, double hi) {
  if (!(lo < hi)) throw PreconditionError("interval: need lo < hi");
  Mat A(2, 1);
  A << 1.0, -1.0;
  Vec b(2);
  b << hi, -lo;
  Barrier out = polytope_barrier(A, b);
  out.name = "interval";
  out.bounds = std::make_pair(Vec::Constant(1, lo), Vec::Constant(1, hi));
  return out;
}

Barrier box_barrier(const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n || n == 0) throw PreconditionError("box: lo/hi size mismatch");
  if (((hi - lo).array() <= 0).any()) throw PreconditionError("box: need lo < hi on every axis");
  Mat A = Mat::Zero(2 * n, n);
  Vec b(2 * n);
  for (int i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    b(2 * i) = hi(i);
    A(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lo(i);
  }
  Barrier out = polytope_barrier(A, b);
  out.name = "box";
  out.bounds = std::make_pair(lo, hi);
  return out;
}

Barrier halfline_barrier() {
  Mat A(1, 1);
  A << -1.0;
  Vec b = Vec::Zero(1);
  Barrier out = polytope_barrier(A, b);
  out.name = "halfline";
  out.bounds = std::nullopt;
  out.start = Vec::Ones(1);
  return out;
}

Barrier quadratic_potential(const Mat& Q, const Vec& z) {
  if (Q.rows() != Q.cols() || Q.rows() != z.size()) throw PreconditionError("quadratic: shape mismatch");
  Eigen::LLT<Mat> llt(Q);
  if (llt.info() != Eigen::Success) throw PreconditionError("quadratic: Q must be SPD");
  Barrier out;
  out.dim = static_cast<int>(z.size());
  out.theta = kInf;
  out.name = "quadratic";
  out.domain_test = [n = z.size()](const Vec& x) { return x.size() == n && x.allFinite(); };
  out.slack = [](const Vec&) { return kInf; };
  out.value = [Q, z](const Vec& x) { return 0.5 * (x - z).dot(Q * (x - z)); };
  out.gradient = [Q, z](const Vec& x) -> Vec { return Q * (x - z); };
  out.hessian = [Q](const Vec&) -> Mat { return Q; };
  out.start = z;
  return out;
}

Barrier quartic_counterexample() {
  Barrier out;
  out.dim = 1;
  out.theta = kInf;
  out.name = "quartic";
  out.domain_test = [](const Vec& x) { return x.size() == 1 && std::abs(x(0)) < 1.0; };
  out.slack = [](const Vec& x) { return 1.0 - std::abs(x(0)); };
  out.value = [](const Vec& x) { return std::pow(x(0), 4); };
  out.gradient = [](const Vec& x) -> Vec { return Vec::Constant(1, 4.0 * std::pow(x(0), 3)); };
  out.hessian = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, 12.0 * x(0) * x(0)); };
  out.bounds = std::make_pair(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  out.start = Vec::Constant(1, 0.5);
  return out;
}

Barrier with_linear_objective(const Barrier& b, const Vec& c, double eta) {
  if (c.size() != b.dim) throw PreconditionError("objective dimension mismatch");
  Barrier out = b;
  out.name = b.name + "+objective";
  out.value = [f = b.value, c, eta](const Vec& x) { return eta * c.dot(x) + f(x); };
  out.gradient = [g = b.gradient, c, eta](const Vec& x) -> Vec { return eta * c + g(x); };
  return out;
}

Barrier affine_pullback(const Barrier& b, const Mat& T, const Vec& s) {
  if (T.rows() != b.dim || T.cols() != b.dim || s.size() != b.dim)
    throw PreconditionError("pullback: T must be square of the barrier dimension");
  Eigen::FullPivLU<Mat> lu(T);
  if (!lu.isInvertible()) throw PreconditionError("pullback: T must be invertible");
  Barrier out = b;
  out.name = b.name + "+affine";
  out.value = [f = b.value, T, s](const Vec& x) { return f(T * x + s); };
  out.gradient = [g = b.gradient, T, s](const Vec& x) -> Vec { return T.transpose() * g(T * x + s); };
  out.hessian = [h = b.hessian, T, s](const Vec& x) -> Mat { return T.transpose() * h(T * x + s) * T; };
  out.domain_test = [d = b.domain_test, T, s](const Vec& x) { return x.size() == T.cols() && d(T * x + s); };
  out.slack = [sl = b.slack, T, s](const Vec& x) { return sl(T * x + s); };
  if (b.bounds) {
    const int n = b.dim;
    Mat Tinv = lu.inverse();
    Vec lo = Vec::Constant(n, kInf), hi = Vec::Constant(n, -kInf);
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vec corner(n);
      for (int i = 0; i < n; ++i) corner(i) = (mask >> i & 1) ? b.bounds->second(i) : b.bounds->first(i);
      Vec p = Tinv * (corner - s);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    out.bounds = std::make_pair(lo, hi);
  }
  if (b.start) out.start = lu.solve(*b.start - s);
  return out;
}

Barrier shifted(const Barrier& b, double constant) {
  Barrier out = b;
  out.value = [f = b.value, constant](const Vec& x) { return f(x) + constant; };
  return out;
}

Vec interior_point(const Barrier& b) {
  if (b.start && b.domain_test(*b.start)) return *b.start;
  if (b.bounds) {
    Vec mid = 0.5 * (b.bounds->first + b.bounds->second);
    if (b.domain_test(mid)) return mid;
  }
  throw PreconditionError(b.name + ": no known interior point; supply one");
}

void require_interior(const Barrier& b, const Vec& x) {
  if (x.size() != b.dim || !b.domain_test(x)) {
    std::ostringstream os;
    os << b.name << ": point outside the domain";
    throw DomainError(os.str());
  }
}

double local_norm(const Barrier& b, const Vec& x, const Vec& v) {
  require_interior(b, x);
  const double q = v.dot(b.hessian(x) * v);
  return std::sqrt(std::max(q, 0.0));
}

bool dikin_contains(const Barrier& b, const Vec& x, const Vec& y) {
  return local_norm(b, x, y - x) < 1.0;
}

LocalGeometry local_geometry(const Barrier& b, const Vec& x, double radius) {
  require_interior(b, x);
  return {x, b.hessian(x), radius};
}

SelfConcordanceReport check_self_concordance(const Barrier& b, const std::vector<SamplePair>& samples,
                                             double fd_tolerance) {
  SelfConcordanceReport rep;
  rep.fd_tolerance = fd_tolerance;
  for (const auto& s : samples) {
    require_interior(b, s.x);
    if (s.u.norm() == 0.0) throw PreconditionError("self-concordance: direction must be nonzero");
    const double d2 = s.u.dot(b.hessian(s.x) * s.u);
    double h = 1e-4 * std::max(1.0, s.x.norm());
    const double un = std::sqrt(std::max(d2, 0.0));
    if (un > 0.0) h = std::min(h, 1e-3 / un);
    auto phi2 = [&](double t) { return s.u.dot(b.hessian(s.x + t * s.u) * s.u); };
    bool ok = false;
    double d3 = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      const Vec xp = s.x + h * s.u, xm = s.x - h * s.u;
      if (b.domain_test(xp) && b.domain_test(xm) && b.slack(xp) >= 1e-12 && b.slack(xm) >= 1e-12) {
        d3 = (phi2(h) - phi2(-h)) / (2.0 * h);
        ok = std::isfinite(d3);
        if (ok) break;
      }
      h *= 0.5;
      if (h < 1e-14) break;
    }
    if (!ok) {
      ++rep.unverifiable;
      continue;
    }
    ++rep.checked;
    double ratio;
    if (d2 <= 0.0)
      ratio = std::abs(d3) > 0.0 ? kInf : 0.0;
    else
      ratio = std::abs(d3) / (2.0 * std::pow(d2, 1.5));
    if (rep.worst_x.size() == 0 || ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_x = s.x;
      rep.worst_u = s.u;
    }
  }
  rep.passed = rep.checked > 0 && rep.unverifiable == 0 && rep.max_ratio <= 1.0 + fd_tolerance;
  return rep;
}

HessianStabilityReport check_hessian_stability(const Barrier& b, const Vec& x, const Vec& y,
                                               const std::vector<Vec>& probes) {
  HessianStabilityReport rep;
  rep.r = local_norm(b, x, y - x);
  if (rep.r >= 1.0) throw PreconditionError("hessian stability: need ||y - x||_x < 1");
  require_interior(b, y);
  rep.lower = 1.0 - rep.r;
  rep.upper = 1.0 / (1.0 - rep.r);
  rep.worst_margin = kInf;
  const Mat Hx = b.hessian(x), Hy = b.hessian(y);
  for (const auto& v : probes) {
    const double nx = std::sqrt(v.dot(Hx * v));
    if (nx == 0.0) continue;
    const double ratio = std::sqrt(v.dot(Hy * v)) / nx;
    rep.ratios.push_back(ratio);
    rep.worst_margin = std::min({rep.worst_margin, ratio - rep.lower, rep.upper - ratio});
  }
  const double tol = 1e-12 * std::max(1.0, rep.upper);
  rep.passed = !rep.ratios.empty() && rep.worst_margin >= -tol;
  return rep;
}

double barrier_parameter_estimate(const Barrier& b, const std::vector<Vec>& samples) {
  double best = 0.0;
  for (const auto& x : samples) {
    require_interior(b, x);
    const Mat H = b.hessian(x);
    const Vec g = b.gradient(x);
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
      std::ostringstream os;
      os << "barrier parameter: singular Hessian (rcond " << (llt.info() == Eigen::Success ? llt.rcond() : 0.0)
         << ")";
      throw NumericalError(os.str());
    }
    best = std::max(best, g.dot(llt.solve(g)));
  }
  return best;
}

std::vector<Vec> sobol_interior_samples(const Barrier& b, const Vec& lo, const Vec& hi, int count,
                                        double min_slack) {
  const int n = b.dim;
  boost::random::sobol eng(static_cast<std::size_t>(n));
  eng.discard(static_cast<std::uintmax_t>(n));  // skip the origin point
  const double scale = 1.0 / (static_cast<double>(eng.max()) + 1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  const long max_draws = 1000L * std::max(count, 1);
  for (long draws = 0; static_cast<int>(out.size()) < count; ++draws) {
    if (draws == max_draws)
      throw PreconditionError(b.name + ": sampling box barely intersects the domain");
    Vec x(n);
    for (int k = 0; k < n; ++k) x(k) = lo(k) + (hi(k) - lo(k)) * (static_cast<double>(eng()) * scale);
    if (b.domain_test(x) && b.slack(x) >= min_slack) out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vec> sobol_interior_samples(const Barrier& b, int count, double min_slack) {
  if (!b.bounds) throw PreconditionError(b.name + ": unbounded domain needs an explicit sampling box");
  return sobol_interior_samples(b, b.bounds->first, b.bounds->second, count, min_slack);
}

namespace {

Vec node_vec(const YAML::Node& n, const std::string& field) {
  if (!n || !n.IsSequence()) throw ConfigError("barrier." + field + ": expected a list of numbers");
  Vec v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<Eigen::Index>(i)) = n[i].as<double>();
  return v;
}

Mat node_mat(const YAML::Node& n, const std::string& field) {
  if (!n || !n.IsSequence() || n.size() == 0) throw ConfigError("barrier." + field + ": expected a list of rows");
  const std::size_t rows = n.size(), cols = n[0].size();
  Mat M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!n[i].IsSequence() || n[i].size() != cols)
      throw ConfigError("barrier." + field + ": ragged matrix row " + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = n[i][j].as<double>();
  }
  return M;
}

}  // namespace

Barrier barrier_from_config(const YAML::Node& node) {
  if (!node || !node.IsMap()) throw ConfigError("barrier: expected a mapping");
  if (!node["kind"]) throw ConfigError("barrier.kind: missing");
  const std::string kind = node["kind"].as<std::string>();
  Barrier b;
  try {
    if (kind == "interval") {
      b = interval_barrier(node["lo"] ? node["lo"].as<double>() : -1.0, node["hi"] ? node["hi"].as<double>() : 1.0);
    } else if (kind == "box") {
      b = box_barrier(node_vec(node["lo"], "lo"), node_vec(node["hi"], "hi"));
    } else if (kind == "polytope") {
      b = polytope_barrier(node_mat(node["A"], "A"), node_vec(node["b"], "b"));
    } else if (kind == "halfline") {
      b = halfline_barrier();
    } else if (kind == "quadratic") {
      b = quadratic_potential(node_mat(node["Q"], "Q"), node_vec(node["z"], "z"));
    } else if (kind == "quartic") {
      b = quartic_counterexample();
    } else {
      throw ConfigError("barrier.kind: unknown barrier kind '" + kind + "'");
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("barrier: ") + e.what());
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("barrier: ") + e.what());
  }
  if (node["transform"]) {
    Mat T = node_mat(node["transform"], "transform");
    Vec s = node["offset"] ? node_vec(node["offset"], "offset") : Vec::Zero(b.dim);
    try {
      b = affine_pullback(b, T, s);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("barrier.transform: ") + e.what());
    }
  }
  return b;
}

}  // namespace sclab
