// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "metamat/continuum_solver.hpp"

using namespace metamat;
using boost::math::quadrature::gauss_kronrod;

namespace
{

const BoxDomain kCube(Vec3::Constant(-1.0), Vec3::Constant(1.0));

cplx RadialIntegral(const std::function<cplx(double)> &f, double lo, double hi)
{
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double r) { return f(r).real(); }, lo, hi, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double r) { return f(r).imag(); }, lo, hi, 15, 1e-14);
  return {re, im};
}

// Plain O(n^2) evaluation of u - G*(V u) written straight from the definition.
CVector BruteForce(const LSProblem &prob, std::span<const cplx> u)
{
  const auto &g = prob.grid;
  const double R = std::cbrt(3.0 / (4.0 * pi)) * g.h;
  const cplx self = RadialIntegral([&](double r) { return r * std::exp(cplx(0, prob.k * r)); },
                                   0.0, R);
  CVector out(g.Size());
  for (std::size_t i = 0; i < g.Size(); i++)
  {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < g.Size(); j++)
    {
      const double r = (g.Center(i) - g.Center(j)).norm();
      const cplx w = i == j ? self
                            : g.VoxelVolume() * std::exp(cplx(0, prob.k * r)) / (4.0 * pi * r);
      acc += w * prob.V[j] * u[j];
    }
    out[i] = u[i] - acc;
  }
  return out;
}

double RelMax(std::span<const cplx> a, std::span<const cplx> b)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

}  // namespace

TEST_CASE("self-voxel weight equals the ball integral of g")
{
  for (double kR : {0.1, 0.5, 2.0})
  {
    const double k = 1.3;
    const double R = kR / k;
    const double h = R / std::cbrt(3.0 / (4.0 * pi));
    const cplx quad = RadialIntegral([&](double r) { return r * std::exp(cplx(0, k * r)); }, 0.0, R);
    CHECK(std::abs(SelfVoxelWeight(k, h) - quad) / std::abs(quad) < 1e-10);
  }
  CHECK_THROWS_AS(SelfVoxelWeight(0.0, 0.1), ConfigError);
}

TEST_CASE("FFT matvec equals brute-force summation")
{
  const BoxDomain box(Vec3::Zero(), Vec3(1.0, 0.75, 0.5));
  const VoxelGrid grid = MakeGrid(box, 8);
  CHECK(grid.n == std::array<int, 3>{8, 6, 4});
  LSProblem prob{grid, 3.0, CVector(grid.Size()), CVector(grid.Size())};
  for (std::size_t i = 0; i < grid.Size(); i++)
  {
    prob.V[i] = cplx(std::cos(0.37 * i), 0.2 * std::sin(1.9 * i));
    prob.u0[i] = cplx(1.0 / (1.0 + i % 7), std::sin(0.11 * i * i));
  }
  CHECK(RelMax(LsMatvec(prob.u0, prob), BruteForce(prob, prob.u0)) < 1e-12);

  LsOptions faulty;
  faulty.self_weight_scale = 1.01;
  CHECK(RelMax(LsMatvec(prob.u0, prob, faulty), BruteForce(prob, prob.u0)) > 1e-6);
}

TEST_CASE("zero potential returns the incident field untouched")
{
  const auto prob = ScalarProblem(FieldSpec::Constant(0.0), MakeGrid(kCube, 12),
                                  WaveContext(1.0, Vec3::UnitY()));
  const auto sol = SolveLs(prob);
  CHECK(sol.iterations == 0);
  CHECK(sol.psi == prob.u0);
  CHECK(AmplitudeContinuum(sol, prob, Vec3::UnitX()) == cplx(0.0));
}

TEST_CASE("weak ball scatters like its Born approximation")
{
  const double p = 0.005, k = 1.0, R = 1.0;
  const auto prob = ScalarProblem(FieldSpec::BallStep(Vec3::Zero(), R, p, 0.0),
                                  MakeGrid(kCube, 40), WaveContext(k, Vec3::UnitZ()));
  const auto sol = SolveLs(prob);
  for (const Vec3 &beta : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0.6, -0.8)})
  {
    const double q = k * (Vec3::UnitZ() - beta).norm();
    // -(p / 4 pi) int_ball e^{i q.y} dy in spherical shells.
    const cplx born = RadialIntegral(
        [&](double r) { return -p * r * r * (q == 0.0 ? 1.0 : std::sin(q * r) / (q * r)); }, 0.0,
        R);
    CHECK(std::abs(AmplitudeContinuum(sol, prob, beta) - born) / std::abs(born) < 0.03);
  }
}

TEST_CASE("solution satisfies the Helmholtz equation")
{
  // (Laplacian + k^2) psi = -V psi; the 7-point residual shrinks with the voxel size.
  const auto bump = FieldSpec::RadialBump(Vec3::Zero(), 0.8, -0.6, 3);
  std::vector<double> residuals;
  for (int n : {16, 32})
  {
    const auto prob = ScalarProblem(bump, MakeGrid(kCube, n), WaveContext(1.5, Vec3::UnitX()));
    LsOptions opts;
    opts.tol = 1e-12;
    const auto sol = SolveLs(prob, opts);
    const auto &g = prob.grid;
    double num = 0.0, den = 0.0;
    for (int i = 1; i < n - 1; i++)
      for (int j = 1; j < n - 1; j++)
        for (int l = 1; l < n - 1; l++)
        {
          const auto at = [&](int a, int b, int c) { return sol.psi[g.Index(a, b, c)]; };
          const cplx lap = (at(i + 1, j, l) + at(i - 1, j, l) + at(i, j + 1, l) +
                            at(i, j - 1, l) + at(i, j, l + 1) + at(i, j, l - 1) -
                            6.0 * at(i, j, l)) /
                           (g.h * g.h);
          const std::size_t c = g.Index(i, j, l);
          num += std::norm(lap + prob.k * prob.k * sol.psi[c] + prob.V[c] * sol.psi[c]);
          den += std::norm(prob.V[c] * sol.psi[c]);
        }
    residuals.push_back(std::sqrt(num / den));
  }
  CHECK(residuals[1] < residuals[0]);
  CHECK(residuals[1] < 0.1);
}

TEST_CASE("amplitude converges under grid refinement")
{
  const auto bump = FieldSpec::RadialBump(Vec3(0.1, 0, 0), 0.7, cplx(-0.8, -0.1), 2);
  const WaveContext ctx(1.0, Vec3::UnitZ());
  const Vec3 beta = Vec3(1, 1, 0).normalized();
  auto amplitude = [&](int n)
  {
    const auto prob = ScalarProblem(bump, MakeGrid(kCube, n), ctx);
    LsOptions opts;
    opts.tol = 1e-11;
    return AmplitudeContinuum(SolveLs(prob, opts), prob, beta);
  };
  const cplx ref = amplitude(64);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {8, 16, 32})
  {
    const double err = std::abs(amplitude(n) - ref);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("electromagnetic solve is three scalar solves with potential +C")
{
  const auto C = FieldSpec::RadialBump(Vec3::Zero(), 0.9, cplx(0.4, 0.02), 2);
  const VoxelGrid grid = MakeGrid(kCube, 10);
  const WaveContext ctx(1.0, Vec3::UnitZ());
  const Eigen::Vector3cd pol(1.0, cplx(0, 1), 0.0);
  const auto em = EmEffectiveSolve(C, grid, ctx, pol);
  for (int c = 0; c < 3; c++)
  {
    LSProblem prob{grid, ctx.k, BuildPotentialEm(C, grid), PlaneWaveOnGrid(grid, ctx, pol[c])};
    for (std::size_t i = 0; i < grid.Size(); i++)
    {
      CHECK(prob.V[i] == C.Eval(grid.Center(i)));
    }
    CHECK(SolveLs(prob).psi == em[c].psi);
  }
  CHECK_THROWS_AS(EmEffectiveSolve(C, grid, ctx, Eigen::Vector3cd(0, 0, 1)), ConfigError);
}

TEST_CASE("small-particle limit of the electromagnetic coefficient")
{
  const double moment = gauss_kronrod<double, 31>::integrate(
      [](double s) { return s * s * (1 - s) * (1 - s); }, 0.0, 1.0);
  CHECK(std::abs(ProfileMoment() - moment) < 1e-12);
  CHECK(std::abs(EmCLimit(30.0, 0.5) - 1.0) < 1e-8);
  CHECK(std::abs(EmCLimit(cplx(15.0, -45.0), 0.3) - cplx(0.5, -1.5)) < 1e-8);
  CHECK_THROWS_AS(EmCLimit(30.0, 1.2), ConfigError);
}
