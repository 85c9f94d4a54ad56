// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_DISCRETE_SOLVER_HPP
#define METAMAT_DISCRETE_SOLVER_HPP

#include <functional>
#include <string>
#include "metamat/krylov.hpp"
#include "metamat/recipe.hpp"

namespace metamat
{

using IncidentField = std::function<cplx(const Vec3 &)>;

// Free-space Helmholtz kernel e^{ik|x-y|} / (4 pi |x-y|). Throws DomainError for x == y.
cplx Green(const Vec3 &x, const Vec3 &y, double k);

enum class DiscreteMethod
{
  Auto,
  Direct,
  Iterative
};

struct DiscreteOptions
{
  DiscreteMethod method = DiscreteMethod::Auto;
  std::size_t direct_limit = 2000;  // Auto switches to GMRES above this M
  double direct_tol = 1e-10;
  double iterative_tol = 1e-8;
  int restart = 50;
  int max_iters = 2000;
};

struct DiscreteSolution
{
  CVector u;        // effective field at the particle centers
  CVector charges;  // Q_m = -4 pi h_m a^(2-kappa) u_m
  std::string method;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

// Solves u_j + 4 pi sum_{m != j} g(x_j, x_m) h_m a^(2-kappa) u_m = u0(x_j).
DiscreteSolution SolveEffectiveFields(const ParticleSystem &ps, const WaveContext &ctx,
                                      const IncidentField &incident,
                                      const DiscreteOptions &opts = {});
// Plane-wave incident from ctx.
DiscreteSolution SolveEffectiveFields(const ParticleSystem &ps, const WaveContext &ctx,
                                      const DiscreteOptions &opts = {});

// Applies the system matrix; rows are summed serially so results do not depend on the
// worker count.
void ApplyFoldyLax(const ParticleSystem &ps, double k, std::span<const cplx> in,
                   std::span<cplx> out);

// u_M(x) = u0(x) + sum_m g(x, x_m) Q_m; x must lie outside every particle.
cplx FieldAt(const DiscreteSolution &sol, const ParticleSystem &ps, double k,
             const Vec3 &x, const IncidentField &incident);

// A_1(beta) = (1 / 4 pi) sum_m e^{-ik beta.x_m} Q_m.
cplx AmplitudeDiscrete(const DiscreteSolution &sol, const ParticleSystem &ps, double k,
                       const Vec3 &beta);

}  // namespace metamat

#endif  // METAMAT_DISCRETE_SOLVER_HPP
