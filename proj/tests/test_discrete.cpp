// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include "metamat/discrete_solver.hpp"

using namespace metamat;

namespace
{

ParticleSystem Pair(double a, double kappa, cplx h1, cplx h2, const Vec3 &x1, const Vec3 &x2)
{
  ParticleSystem ps;
  ps.a = a;
  ps.kappa = kappa;
  ps.centers = {x1, x2};
  ps.h_values = {h1, h2};
  ps.zeta_values = {h1 / std::pow(a, kappa), h2 / std::pow(a, kappa)};
  return ps;
}

}  // namespace

TEST_CASE("Green's function")
{
  const double r = 0.7, k = 2.0;
  const cplx g = Green(Vec3::Zero(), Vec3(0, r, 0), k);
  CHECK(std::abs(g - std::exp(cplx(0, k * r)) / (4.0 * pi * r)) < 1e-16);
  CHECK_THROWS_AS(Green(Vec3::Ones(), Vec3::Ones(), k), DomainError);
}

TEST_CASE("two particles match Cramer's rule")
{
  const double a = 0.01, kappa = 0.5, k = 1.5;
  const Vec3 x1(0, 0, 0), x2(0.3, 0.1, -0.2);
  const cplx h1(-2.0, 0.5), h2(1.0, -0.7);
  const ParticleSystem ps = Pair(a, kappa, h1, h2, x1, x2);
  const WaveContext ctx(k, Vec3(0, 0.6, 0.8));

  const double r = (x1 - x2).norm();
  const cplx e = std::exp(cplx(0, k * r)) / r;
  const double s = std::pow(a, 2.0 - kappa);
  // u1 + e s h2 u2 = f1, e s h1 u1 + u2 = f2
  const cplx f1 = ctx.incident(x1), f2 = ctx.incident(x2);
  const cplx b12 = e * s * h2, b21 = e * s * h1;
  const cplx det = 1.0 - b12 * b21;
  const cplx u1 = (f1 - b12 * f2) / det, u2 = (f2 - b21 * f1) / det;

  const auto sol = SolveEffectiveFields(ps, ctx);
  CHECK(sol.method == "direct-lu");
  CHECK(std::abs(sol.u[0] - u1) < 1e-15);
  CHECK(std::abs(sol.u[1] - u2) < 1e-15);
  CHECK(std::abs(sol.charges[0] + 4.0 * pi * h1 * s * u1) < 1e-15);

  const Vec3 beta(1, 0, 0);
  const cplx A = -(h1 * s * u1 * std::exp(cplx(0, -k * beta.dot(x1))) +
                   h2 * s * u2 * std::exp(cplx(0, -k * beta.dot(x2))));
  CHECK(std::abs(AmplitudeDiscrete(sol, ps, k, beta) - A) < 1e-15);
}

TEST_CASE("direct and iterative solves agree")
{
  ParticleSystem ps;
  ps.a = 0.004;
  ps.kappa = 0.5;
  for (int i = 0; i < 6; i++)
    for (int j = 0; j < 6; j++)
      for (int l = 0; l < 6; l++)
      {
        ps.centers.push_back(0.15 * Vec3(i, j, l) + 0.02 * Vec3(std::sin(i + j), std::cos(l), 0));
        ps.h_values.push_back(cplx(-3.0 + 0.1 * i, -0.5 * j));
        ps.zeta_values.push_back(ps.h_values.back() / std::sqrt(ps.a));
      }
  const WaveContext ctx(2.0, Vec3::UnitX());
  DiscreteOptions direct, iterative;
  direct.method = DiscreteMethod::Direct;
  iterative.method = DiscreteMethod::Iterative;
  iterative.iterative_tol = 1e-12;
  const auto d = SolveEffectiveFields(ps, ctx, direct);
  const auto g = SolveEffectiveFields(ps, ctx, iterative);
  CHECK(g.method == "gmres");
  double err = 0.0, scale = 0.0;
  for (std::size_t m = 0; m < ps.M(); m++)
  {
    err = std::max(err, std::abs(d.u[m] - g.u[m]));
    scale = std::max(scale, std::abs(d.u[m]));
  }
  CHECK(err / scale < 1e-10);
}

TEST_CASE("zero impedance leaves the incident field")
{
  ParticleSystem ps = Pair(0.01, 0.5, 0.0, 0.0, Vec3::Zero(), Vec3(0.2, 0, 0));
  const WaveContext ctx(1.0, Vec3::UnitZ());
  const auto sol = SolveEffectiveFields(ps, ctx);
  CHECK(sol.u[0] == ctx.incident(ps.centers[0]));
  CHECK(sol.u[1] == ctx.incident(ps.centers[1]));
  CHECK(AmplitudeDiscrete(sol, ps, 1.0, Vec3::UnitX()) == cplx(0.0));
}

TEST_CASE("empty systems and invalid geometry")
{
  ParticleSystem empty;
  empty.a = 0.01;
  empty.kappa = 0.5;
  const WaveContext ctx(1.0, Vec3::UnitZ());
  const auto sol = SolveEffectiveFields(empty, ctx);
  CHECK(sol.u.empty());
  CHECK(AmplitudeDiscrete(sol, empty, 1.0, Vec3::UnitX()) == cplx(0.0));

  const ParticleSystem overlap = Pair(0.1, 0.5, 1.0, 1.0, Vec3::Zero(), Vec3(0.15, 0, 0));
  CHECK_THROWS_AS(SolveEffectiveFields(overlap, ctx), DomainError);

  const ParticleSystem ok = Pair(0.01, 0.5, 1.0, 1.0, Vec3::Zero(), Vec3(0.5, 0, 0));
  const auto s = SolveEffectiveFields(ok, ctx);
  CHECK_THROWS_AS(FieldAt(s, ok, ctx.k, Vec3(0.005, 0, 0), [&](const Vec3 &y) { return ctx.incident(y); }), DomainError);
}

TEST_CASE("field outside the particles is incident plus point sources")
{
  const ParticleSystem ps = Pair(0.01, 0.5, cplx(-1, 0.2), cplx(2, 0), Vec3::Zero(),
                                 Vec3(0, 0.4, 0));
  const WaveContext ctx(1.0, Vec3::UnitZ());
  const auto sol = SolveEffectiveFields(ps, ctx);
  const Vec3 x(0.3, 0.3, 0.3);
  cplx expect = ctx.incident(x);
  for (std::size_t m = 0; m < 2; m++)
  {
    expect += Green(x, ps.centers[m], 1.0) * sol.charges[m];
  }
  CHECK(std::abs(FieldAt(sol, ps, ctx.k, x, [&](const Vec3 &y) { return ctx.incident(y); }) - expect) < 1e-15);
}
