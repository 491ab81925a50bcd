#pragma once

#include "sclab/common.hpp"

namespace sclab {

// Nodes and weights with sum_k w_k f(z_k) ~ E f(Z), Z ~ N(0, 1).
struct Quadrature {
  Vec nodes;
  Vec weights;
};

// Golub-Welsch for the probabilists' Hermite recurrence (off-diagonal sqrt(k)).
Quadrature gauss_hermite(int count);

// Drops nodes with |z| > zmax.
Quadrature truncate_nodes(const Quadrature& q, double zmax);

}  // namespace sclab
