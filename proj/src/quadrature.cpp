#include "lcm/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace lcm {

std::vector<QuadratureNode> gauss_hermite(int n) {
  if (n < 1) throw ModelError("gauss_hermite: need at least one node");
  // Newton iteration on orthonormal Hermite polynomials with the usual
  // asymptotic starting guesses for the largest roots.
  constexpr double kEps = 1e-15;
  constexpr int kMaxIter = 200;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    int it = 0;
    for (; it < kMaxIter; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= kEps * std::max(1.0, std::abs(z))) break;
    }
    if (it == kMaxIter) throw ModelError("gauss_hermite: Newton iteration did not converge");
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  if (n % 2 == 1) x[m - 1] = 0.0;
  std::vector<QuadratureNode> out(n);
  // roots were produced largest first
  for (int i = 0; i < n; ++i) out[i] = {x[n - 1 - i], w[n - 1 - i]};
  return out;
}

std::vector<QuadratureNode> standard_normal_rule(int n) {
  auto rule = gauss_hermite(n);
  double total = 0.0;
  for (auto& q : rule) {
    q.value *= std::numbers::sqrt2;
    q.weight /= std::sqrt(std::numbers::pi);
    total += q.weight;
  }
  for (auto& q : rule) q.weight /= total;
  return rule;
}

int wage_quadrature(const WageDistribution& dist, const std::vector<QuadratureNode>& rule,
                    QuadratureNode* out) {
  if (dist.degenerate() || rule.size() == 1) {
    out[0] = {dist.at_shock(0.0), 1.0};
    return 1;
  }
  double total = 0.0;
  for (const auto& q : rule) total += q.weight;
  const int n = static_cast<int>(rule.size());
  for (int i = 0; i < n; ++i) out[i] = {dist.at_shock(rule[i].value), rule[i].weight / total};
  return n;
}

std::vector<QuadratureNode> wage_quadrature(const WageDistribution& dist, int nodes) {
  const auto rule = standard_normal_rule(nodes);
  std::vector<QuadratureNode> out(rule.size());
  out.resize(wage_quadrature(dist, rule, out.data()));
  return out;
}

}  // namespace lcm
