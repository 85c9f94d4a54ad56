// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_FARFIELD_HPP
#define METAMAT_FARFIELD_HPP

#include <functional>
#include <string>
#include <vector>
#include "metamat/types.hpp"

namespace metamat
{

using AmplitudeFn = std::function<cplx(const Vec3 &beta)>;
// A(beta, alpha) for an arbitrary incident direction; runs a full solve per call.
using ScatteringFn = std::function<cplx(const Vec3 &beta, const Vec3 &alpha)>;

inline constexpr double residual_floor = 1e-30;

// Nodes on S^2 with positive weights summing to 4 pi. Spherical harmonics of degree
// <= exact_degree are integrated exactly (up to rounding).
struct DirectionQuadrature
{
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  int exact_degree = 0;
  std::string name;

  std::size_t Size() const { return nodes.size(); }
};

// Icosahedron (level 0, 12 nodes), refined once (42) or twice (162). Weights are the
// minimum-norm correction of 4 pi / N that makes every harmonic up to the highest feasible
// degree integrate exactly.
DirectionQuadrature IcosahedralQuadrature(int level);
// Gauss-Legendre in cos(theta) times uniform phi; exact to degree min(2 n_theta - 1, n_phi - 1).
DirectionQuadrature ProductQuadrature(int n_theta, int n_phi);
// "ico12", "ico42", "ico162" or "gl<ntheta>x<nphi>".
DirectionQuadrature QuadratureByName(const std::string &name);

// Real orthonormal spherical harmonic Y_lm at a unit vector, -l <= m <= l.
double RealSphericalHarmonic(int l, int m, const Vec3 &x);

// sum_i w_i f(x_i).
double Integrate(const DirectionQuadrature &quad, const std::function<double(const Vec3 &)> &f);

// closed surface integral of |A|^2.
double TotalCrossSection(const AmplitudeFn &A, const DirectionQuadrature &quad);

// |Im A(alpha) - k sigma / 4 pi| / max(k sigma / 4 pi, floor). Positive for absorbers.
double OpticalTheoremResidual(const AmplitudeFn &A, const Vec3 &alpha, double k,
                              const DirectionQuadrature &quad);
// Signed Im A(alpha) - k sigma / 4 pi = k sigma_abs / 4 pi.
double OpticalTheoremDefect(const AmplitudeFn &A, const Vec3 &alpha, double k,
                            const DirectionQuadrature &quad);

// |A(beta, alpha) - A(-alpha, -beta)| / max(|A(beta, alpha)|, floor).
double ReciprocityResidual(const ScatteringFn &solve, const Vec3 &alpha, const Vec3 &beta);

}  // namespace metamat

#endif  // METAMAT_FARFIELD_HPP
