// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/continuum_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fftw3.h>
#include <fmt/format.h>
#include "metamat/quadrature.hpp"

namespace metamat
{

Vec3 VoxelGrid::Center(std::size_t idx) const
{
  const int k = static_cast<int>(idx % n[2]);
  const int j = static_cast<int>((idx / n[2]) % n[1]);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(n[1]) * n[2]));
  return Center(i, j, k);
}

VoxelGrid MakeGrid(const BoxDomain &box, int n)
{
  if (n < 1)
  {
    throw ConfigError("grid size must be positive");
  }
  const Vec3 ext = box.Extent();
  const double h = ext.maxCoeff() / n;
  VoxelGrid grid{{}, h, box.lower};
  for (int d = 0; d < 3; d++)
  {
    grid.n[d] = std::max(1, static_cast<int>(std::ceil(ext[d] / h - 1e-9)));
  }
  return grid;
}

CVector BuildPotentialScalar(const FieldSpec &p, const VoxelGrid &grid)
{
  CVector V(grid.Size());
  for (std::size_t i = 0; i < V.size(); i++)
  {
    V[i] = -p.Eval(grid.Center(i));
  }
  return V;
}

CVector BuildPotentialEm(const FieldSpec &C, const VoxelGrid &grid)
{
  CVector V(grid.Size());
  for (std::size_t i = 0; i < V.size(); i++)
  {
    V[i] = C.Eval(grid.Center(i));
  }
  return V;
}

CVector PlaneWaveOnGrid(const VoxelGrid &grid, const WaveContext &ctx, cplx amplitude)
{
  CVector u(grid.Size());
  for (std::size_t i = 0; i < u.size(); i++)
  {
    u[i] = amplitude * ctx.incident(grid.Center(i));
  }
  return u;
}

LSProblem ScalarProblem(const FieldSpec &p, const VoxelGrid &grid, const WaveContext &ctx)
{
  return {grid, ctx.k, BuildPotentialScalar(p, grid), PlaneWaveOnGrid(grid, ctx)};
}

cplx SelfVoxelWeight(double k, double h)
{
  if (!(k > 0.0))
  {
    throw ConfigError("k = 0 (static limit) is not supported by the volume solver");
  }
  const double R = std::cbrt(3.0 / (4.0 * pi)) * h;
  const cplx ikr = I * (k * R);
  return (std::exp(ikr) * (1.0 - ikr) - 1.0) / (k * k);
}

struct LsOperator::Impl
{
  std::array<int, 3> padded;
  std::size_t total;
  fftw_complex *kernel_hat = nullptr;
  fftw_complex *buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl()
  {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(kernel_hat);
    fftw_free(buffer);
  }
};

LsOperator::LsOperator(const VoxelGrid &grid, double k, CVector V, const LsOptions &opts)
  : grid_(grid), V_(std::move(V)), impl_(std::make_unique<Impl>())
{
  if (V_.size() != grid.Size())
  {
    throw ConfigError("potential does not conform to the grid");
  }
  const cplx self = SelfVoxelWeight(k, grid.h) * opts.self_weight_scale;
  auto &im = *impl_;
  for (int d = 0; d < 3; d++)
  {
    im.padded[d] = 2 * grid.n[d];
  }
  im.total = static_cast<std::size_t>(im.padded[0]) * im.padded[1] * im.padded[2];
  im.kernel_hat = fftw_alloc_complex(im.total);
  im.buffer = fftw_alloc_complex(im.total);
  im.forward = fftw_plan_dft_3d(im.padded[0], im.padded[1], im.padded[2], im.buffer,
                                im.buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  im.backward = fftw_plan_dft_3d(im.padded[0], im.padded[1], im.padded[2], im.buffer,
                                 im.buffer, FFTW_BACKWARD, FFTW_ESTIMATE);

  // Circulant embedding: offset o in (-n, n) sits at index o mod 2n; index n stays zero.
  auto *kern = reinterpret_cast<cplx *>(im.kernel_hat);
  const double vol = grid.VoxelVolume();
  const auto &P = im.padded;
#pragma omp parallel for schedule(static)
  for (int a = 0; a < P[0]; a++)
  {
    const int oa = a < grid.n[0] ? a : a - P[0];
    for (int b = 0; b < P[1]; b++)
    {
      const int ob = b < grid.n[1] ? b : b - P[1];
      for (int c = 0; c < P[2]; c++)
      {
        const int oc = c < grid.n[2] ? c : c - P[2];
        const std::size_t idx = (static_cast<std::size_t>(a) * P[1] + b) * P[2] + c;
        if (a == grid.n[0] || b == grid.n[1] || c == grid.n[2])
        {
          kern[idx] = 0.0;
        }
        else if (oa == 0 && ob == 0 && oc == 0)
        {
          kern[idx] = self;
        }
        else
        {
          const double r = grid.h * std::sqrt(double(oa) * oa + double(ob) * ob + double(oc) * oc);
          kern[idx] = std::polar(vol / (4.0 * pi * r), k * r);
        }
      }
    }
  }
  fftw_execute_dft(im.forward, im.kernel_hat, im.kernel_hat);
  const double scale = 1.0 / static_cast<double>(im.total);
  for (std::size_t i = 0; i < im.total; i++)
  {
    kern[i] *= scale;
  }
}

LsOperator::~LsOperator() = default;

void LsOperator::Convolve(std::span<const cplx> w, std::span<cplx> out) const
{
  auto &im = *impl_;
  const auto &P = im.padded;
  const auto &n = grid_.n;
  auto *buf = reinterpret_cast<cplx *>(im.buffer);
  const auto *kern = reinterpret_cast<const cplx *>(im.kernel_hat);
  std::fill(buf, buf + im.total, cplx(0.0));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n[0]; i++)
  {
    for (int j = 0; j < n[1]; j++)
    {
      for (int k = 0; k < n[2]; k++)
      {
        buf[(static_cast<std::size_t>(i) * P[1] + j) * P[2] + k] = w[grid_.Index(i, j, k)];
      }
    }
  }
  fftw_execute(im.forward);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(im.total); i++)
  {
    buf[i] *= kern[i];
  }
  fftw_execute(im.backward);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n[0]; i++)
  {
    for (int j = 0; j < n[1]; j++)
    {
      for (int k = 0; k < n[2]; k++)
      {
        out[grid_.Index(i, j, k)] = buf[(static_cast<std::size_t>(i) * P[1] + j) * P[2] + k];
      }
    }
  }
}

void LsOperator::Apply(std::span<const cplx> in, std::span<cplx> out) const
{
  CVector w(in.size());
  for (std::size_t i = 0; i < in.size(); i++)
  {
    w[i] = V_[i] * in[i];
  }
  Convolve(w, out);
  for (std::size_t i = 0; i < in.size(); i++)
  {
    out[i] = in[i] - out[i];
  }
}

CVector LsMatvec(std::span<const cplx> u, const LSProblem &problem, const LsOptions &opts)
{
  LsOperator op(problem.grid, problem.k, problem.V, opts);
  CVector out(u.size());
  op.Apply(u, out);
  return out;
}

ContinuumSolution SolveLs(const LSProblem &problem, const LsOptions &opts)
{
  if (problem.u0.size() != problem.grid.Size())
  {
    throw ConfigError("incident field does not conform to the grid");
  }
  ContinuumSolution sol;
  const bool zero_potential =
      std::all_of(problem.V.begin(), problem.V.end(), [](cplx v) { return v == 0.0; });
  if (zero_potential)
  {
    sol.psi = problem.u0;
    return sol;
  }
  LsOperator op(problem.grid, problem.k, problem.V, opts);
  LinearOperator apply = [&op](std::span<const cplx> in, std::span<cplx> out)
  { op.Apply(in, out); };
  auto res = Gmres(apply, problem.u0, {opts.tol, opts.restart, opts.max_iters});
  sol.psi = std::move(res.x);
  sol.residual = res.residual;
  sol.iterations = res.iterations;
  sol.history = std::move(res.history);
  return sol;
}

cplx AmplitudeContinuum(const ContinuumSolution &sol, const LSProblem &problem,
                        const Vec3 &beta)
{
  cplx acc = 0.0;
  for (std::size_t i = 0; i < problem.V.size(); i++)
  {
    if (problem.V[i] == 0.0)
    {
      continue;
    }
    const Vec3 y = problem.grid.Center(i);
    acc += std::exp(-I * (problem.k * beta.dot(y))) * problem.V[i] * sol.psi[i];
  }
  return acc * problem.grid.VoxelVolume() / (4.0 * pi);
}

LSProblem EmComponentProblem(const FieldSpec &C, const VoxelGrid &grid, const WaveContext &ctx,
                             cplx polarization_component)
{
  return {grid, ctx.k, BuildPotentialEm(C, grid),
          PlaneWaveOnGrid(grid, ctx, polarization_component)};
}

std::array<ContinuumSolution, 3> EmEffectiveSolve(const FieldSpec &C, const VoxelGrid &grid,
                                                  const WaveContext &ctx,
                                                  const Eigen::Vector3cd &polarization,
                                                  const LsOptions &opts)
{
  if (std::abs(polarization.dot(ctx.alpha.cast<cplx>())) > 1e-12 * polarization.norm())
  {
    throw ConfigError("polarization must be orthogonal to the incident direction");
  }
  std::array<ContinuumSolution, 3> out;
  for (int c = 0; c < 3; c++)
  {
    out[c] = SolveLs(EmComponentProblem(C, grid, ctx, polarization[c]), opts);
  }
  return out;
}

double ProfileMoment()
{
  const auto rule = GaussLegendre(8, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); i++)
  {
    const double x = rule.nodes[i];
    s += rule.weights[i] * x * x * (1.0 - x) * (1.0 - x);
  }
  return s;
}

cplx EmCLimit(cplx gamma, double kappa, int levels)
{
  if (!(kappa > 0.0 && kappa < 1.0))
  {
    throw ConfigError(fmt::format("kappa must lie in (0, 1), got {}", kappa));
  }
  levels = std::max(levels, 1);
  std::vector<cplx> table;
  for (int j = 0; j < levels; j++)
  {
    const double a = 0.1 / std::pow(2.0, j);
    const auto rule = GaussLegendre(8, 0.0, a);
    cplx integral = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); q++)
    {
      const double r = rule.nodes[q];
      const double s = 1.0 - r / a;
      const cplx p = gamma / (4.0 * pi * std::pow(a, kappa)) * s * s;
      integral += rule.weights[q] * 4.0 * pi * r * r * p;
    }
    table.push_back(std::pow(a, kappa - 3.0) * integral);
  }
  // Richardson extrapolation in a -> 0 with halving steps, assuming an error series in a.
  for (int level = 1; level < levels; level++)
  {
    const double factor = std::pow(2.0, level);
    for (int j = levels - 1; j >= level; j--)
    {
      table[j] = (factor * table[j] - table[j - 1]) / (factor - 1.0);
    }
  }
  return table.back();
}

}  // namespace metamat
