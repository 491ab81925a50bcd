#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>

#include "sclab/errors.hpp"

namespace sclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Mode { Euclidean, Riemannian };

inline const char* mode_name(Mode m) { return m == Mode::Euclidean ? "euclidean" : "riemannian"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "euclidean") return Mode::Euclidean;
  if (s == "riemannian") return Mode::Riemannian;
  throw ConfigError("mode: expected 'euclidean' or 'riemannian', got '" + s + "'");
}

// Symmetric matrix function via eigendecomposition: V diag(fn(lambda)) V^T.
template <class F>
Mat sym_apply(const Mat& A, F fn) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  Vec d = es.eigenvalues().unaryExpr(fn);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace sclab
