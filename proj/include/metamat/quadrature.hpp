// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_QUADRATURE_HPP
#define METAMAT_QUADRATURE_HPP

#include <vector>

namespace metamat
{

struct Rule1D
{
  std::vector<double> nodes, weights;
};

// n-point Gauss-Legendre rule on [lo, hi].
Rule1D GaussLegendre(int n, double lo = -1.0, double hi = 1.0);

}  // namespace metamat

#endif  // METAMAT_QUADRATURE_HPP
