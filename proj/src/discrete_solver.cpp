// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/discrete_solver.hpp"

#include <cmath>
#include <Eigen/LU>
#include <fmt/format.h>

namespace metamat
{

cplx Green(const Vec3 &x, const Vec3 &y, double k)
{
  const double r = (x - y).norm();
  if (r == 0.0)
  {
    throw DomainError("Green's function is singular at x = y");
  }
  return std::exp(I * (k * r)) / (4.0 * pi * r);
}

namespace
{

CVector Strengths(const ParticleSystem &ps)
{
  const double w = std::pow(ps.a, 2.0 - ps.kappa);
  CVector s(ps.M());
  for (std::size_t m = 0; m < ps.M(); m++)
  {
    s[m] = ps.h_values[m] * w;
  }
  return s;
}

void CheckDisjoint(const ParticleSystem &ps)
{
  if (ps.M() > 1 && MinPairDistance(ps.centers) < 2.0 * ps.a)
  {
    throw DomainError("particles overlap: minimum center distance below 2a");
  }
}

}  // namespace

void ApplyFoldyLax(const ParticleSystem &ps, double k, std::span<const cplx> in,
                   std::span<cplx> out)
{
  const CVector s = Strengths(ps);
  const long n = static_cast<long>(ps.M());
  CVector sx(n);
  for (long m = 0; m < n; m++)
  {
    sx[m] = s[m] * in[m];
  }
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; j++)
  {
    const Vec3 &xj = ps.centers[j];
    cplx acc = 0.0;
    for (long m = 0; m < n; m++)
    {
      if (m == j || sx[m] == 0.0)
      {
        continue;
      }
      const double r = (xj - ps.centers[m]).norm();
      acc += std::polar(1.0 / r, k * r) * sx[m];
    }
    out[j] = in[j] + acc;
  }
}

DiscreteSolution SolveEffectiveFields(const ParticleSystem &ps, const WaveContext &ctx,
                                      const IncidentField &incident,
                                      const DiscreteOptions &opts)
{
  CheckDisjoint(ps);
  const std::size_t n = ps.M();
  CVector rhs(n);
  for (std::size_t j = 0; j < n; j++)
  {
    rhs[j] = incident(ps.centers[j]);
  }
  LinearOperator apply = [&](std::span<const cplx> in, std::span<cplx> out)
  { ApplyFoldyLax(ps, ctx.k, in, out); };

  DiscreteSolution sol;
  const bool direct = opts.method == DiscreteMethod::Direct ||
                      (opts.method == DiscreteMethod::Auto && n <= opts.direct_limit);
  if (n == 0)
  {
    sol.method = "empty";
  }
  else if (direct)
  {
    sol.method = "direct-lu";
    const CVector s = Strengths(ps);
    Eigen::MatrixXcd A(n, n);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(n); j++)
    {
      for (std::size_t m = 0; m < n; m++)
      {
        if (m == static_cast<std::size_t>(j))
        {
          A(j, m) = 1.0;
          continue;
        }
        const double r = (ps.centers[j] - ps.centers[m]).norm();
        A(j, m) = std::polar(1.0 / r, ctx.k * r) * s[m];
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const Eigen::Map<const Eigen::VectorXcd> b(rhs.data(), n);
    Eigen::VectorXcd x = lu.solve(b);
    // One step of iterative refinement.
    const Eigen::VectorXcd r = b - A * x;
    x += lu.solve(r);
    sol.u.assign(x.data(), x.data() + n);
    sol.residual = RelativeResidual(apply, sol.u, rhs);
    sol.iterations = 1;
    if (!std::isfinite(sol.residual) || sol.residual > opts.direct_tol)
    {
      throw NumericalError(fmt::format("dense solve residual {:.3e} exceeds {:.1e}; system "
                                       "is singular or ill-conditioned",
                                       sol.residual, opts.direct_tol),
                           {sol.residual});
    }
  }
  else
  {
    sol.method = "gmres";
    KrylovOptions kopts{opts.iterative_tol, opts.restart, opts.max_iters};
    auto res = Gmres(apply, rhs, kopts);
    sol.u = std::move(res.x);
    sol.iterations = res.iterations;
    sol.residual = res.residual;
    sol.history = std::move(res.history);
  }

  const double w = std::pow(ps.a, 2.0 - ps.kappa);
  sol.charges.resize(n);
  for (std::size_t m = 0; m < n; m++)
  {
    sol.charges[m] = -4.0 * pi * ps.h_values[m] * w * sol.u[m];
  }
  return sol;
}

DiscreteSolution SolveEffectiveFields(const ParticleSystem &ps, const WaveContext &ctx,
                                      const DiscreteOptions &opts)
{
  return SolveEffectiveFields(
      ps, ctx, [&ctx](const Vec3 &x) { return ctx.incident(x); }, opts);
}

cplx FieldAt(const DiscreteSolution &sol, const ParticleSystem &ps, double k,
             const Vec3 &x, const IncidentField &incident)
{
  cplx v = incident(x);
  for (std::size_t m = 0; m < ps.M(); m++)
  {
    if ((x - ps.centers[m]).norm() < ps.a)
    {
      throw DomainError(fmt::format("point lies inside particle {}", m));
    }
    v += Green(x, ps.centers[m], k) * sol.charges[m];
  }
  return v;
}

cplx AmplitudeDiscrete(const DiscreteSolution &sol, const ParticleSystem &ps, double k,
                       const Vec3 &beta)
{
  cplx acc = 0.0;
  for (std::size_t m = 0; m < ps.M(); m++)
  {
    acc += std::exp(-I * (k * beta.dot(ps.centers[m]))) * sol.charges[m];
  }
  return acc / (4.0 * pi);
}

}  // namespace metamat
