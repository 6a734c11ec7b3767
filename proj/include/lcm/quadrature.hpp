#pragma once

#include <vector>

#include "lcm/model.hpp"

namespace lcm {

struct QuadratureNode {
  double value = 0.0;
  double weight = 0.0;
};

// Physicists' Gauss-Hermite rule: integral of exp(-x^2) f(x) ~ sum w_i f(x_i).
// Nodes ascending.
std::vector<QuadratureNode> gauss_hermite(int n);

// Probability-weighted standard-normal shocks z_i = sqrt(2) x_i, weights w_i / sqrt(pi).
std::vector<QuadratureNode> standard_normal_rule(int n);

// Wage nodes of a (clamped) log-normal wage distribution. Weights sum to one.
// A degenerate distribution yields a single node.
std::vector<QuadratureNode> wage_quadrature(const WageDistribution& dist, int nodes);

// Same as above but writes into a caller buffer using a precomputed
// standard-normal rule; returns the number of nodes written.
int wage_quadrature(const WageDistribution& dist, const std::vector<QuadratureNode>& rule,
                    QuadratureNode* out);

}  // namespace lcm
