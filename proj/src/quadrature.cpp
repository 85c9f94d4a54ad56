// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace metamat
{

Rule1D GaussLegendre(int n, double lo, double hi)
{
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  for (int i = 0; i < (n + 1) / 2; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; iter++)
    {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; l++)
      {
        const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n; l++)
    {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

}  // namespace metamat
