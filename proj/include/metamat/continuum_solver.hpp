// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_CONTINUUM_SOLVER_HPP
#define METAMAT_CONTINUUM_SOLVER_HPP

#include <array>
#include <memory>
#include "metamat/fields.hpp"
#include "metamat/krylov.hpp"

namespace metamat
{

// Cubic voxels of edge h; voxel (i, j, k) is centered at origin + (i + 1/2, j + 1/2, k + 1/2) h.
// Linear index is z fastest.
struct VoxelGrid
{
  std::array<int, 3> n;
  double h;
  Vec3 origin;

  std::size_t Size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  double VoxelVolume() const { return h * h * h; }
  Vec3 Center(int i, int j, int k) const
  {
    return origin + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  Vec3 Center(std::size_t idx) const;
  std::size_t Index(int i, int j, int k) const
  {
    return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k;
  }
  // Voxel edge is at most a wavelength / 8.
  bool SamplingOk(double k) const { return h <= 2.0 * pi / (8.0 * k); }
};

// Grid with n voxels along the longest edge of the box, covering it entirely.
VoxelGrid MakeGrid(const BoxDomain &box, int n);

// psi = u0 + G*(V psi): V = -p for the scalar equation, V = +C for the EM one.
struct LSProblem
{
  VoxelGrid grid;
  double k;
  CVector V;
  CVector u0;
};

struct ContinuumSolution
{
  CVector psi;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

// V = -p at the voxel centers.
CVector BuildPotentialScalar(const FieldSpec &p, const VoxelGrid &grid);
// V = +C at the voxel centers.
CVector BuildPotentialEm(const FieldSpec &C, const VoxelGrid &grid);
CVector PlaneWaveOnGrid(const VoxelGrid &grid, const WaveContext &ctx, cplx amplitude = 1.0);

LSProblem ScalarProblem(const FieldSpec &p, const VoxelGrid &grid, const WaveContext &ctx);

// Integral of g(0, y) over the ball of the voxel's volume: (e^{ikR}(1 - ikR) - 1) / k^2.
cplx SelfVoxelWeight(double k, double h);

struct LsOptions
{
  double tol = 1e-8;
  int restart = 50;
  int max_iters = 1000;
  // Multiplies the self-voxel weight; anything but 1 is a deliberate fault.
  double self_weight_scale = 1.0;
};

// FFT-accelerated u -> u - G*(V u) on a zero-padded 2n grid.
class LsOperator
{
public:
  LsOperator(const VoxelGrid &grid, double k, CVector V, const LsOptions &opts = {});
  ~LsOperator();
  LsOperator(const LsOperator &) = delete;
  LsOperator &operator=(const LsOperator &) = delete;

  void Apply(std::span<const cplx> in, std::span<cplx> out) const;
  // G*(w) without the identity and the potential.
  void Convolve(std::span<const cplx> w, std::span<cplx> out) const;

  const VoxelGrid &Grid() const { return grid_; }

private:
  struct Impl;
  VoxelGrid grid_;
  CVector V_;
  std::unique_ptr<Impl> impl_;
};

CVector LsMatvec(std::span<const cplx> u, const LSProblem &problem, const LsOptions &opts = {});

ContinuumSolution SolveLs(const LSProblem &problem, const LsOptions &opts = {});

// A(beta) = (1 / 4 pi) sum_voxels e^{-ik beta.y} V(y) psi(y) h^3.
cplx AmplitudeContinuum(const ContinuumSolution &sol, const LSProblem &problem,
                        const Vec3 &beta);

// Each Cartesian component of E_e = E0 + int g C E_e solved as its own scalar problem with
// incident polarization[c] e^{ik alpha.x}.
std::array<ContinuumSolution, 3> EmEffectiveSolve(const FieldSpec &C, const VoxelGrid &grid,
                                                  const WaveContext &ctx,
                                                  const Eigen::Vector3cd &polarization,
                                                  const LsOptions &opts = {});
LSProblem EmComponentProblem(const FieldSpec &C, const VoxelGrid &grid, const WaveContext &ctx,
                             cplx polarization_component);

// lim a^(kappa-3) int_{|x|<=a} gamma / (4 pi a^kappa) (1 - |x|/a)^2 dx, by Gauss-Legendre
// radial quadrature at `levels` radii a = 0.1 / 2^j followed by Richardson extrapolation.
cplx EmCLimit(cplx gamma, double kappa, int levels = 4);
// Gauss-Legendre value of int_0^1 s^2 (1 - s)^2 ds.
double ProfileMoment();

}  // namespace metamat

#endif  // METAMAT_CONTINUUM_SOLVER_HPP
