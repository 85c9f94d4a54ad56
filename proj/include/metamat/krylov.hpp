// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_KRYLOV_HPP
#define METAMAT_KRYLOV_HPP

#include <functional>
#include <span>
#include <vector>
#include "metamat/types.hpp"

namespace metamat
{

using LinearOperator = std::function<void(std::span<const cplx> in, std::span<cplx> out)>;

struct KrylovOptions
{
  double tol = 1e-8;
  int restart = 50;
  int max_iters = 2000;
};

struct KrylovResult
{
  CVector x;
  int iterations = 0;
  double residual = 0.0;         // true relative residual at exit
  std::vector<double> history;  // relative residual estimate per iteration
};

// Restarted GMRES with Givens rotations. Starts from x0 (or from rhs when x0 is empty).
// Throws NumericalError carrying the residual history if tol is not met in max_iters.
KrylovResult Gmres(const LinearOperator &apply, std::span<const cplx> rhs,
                   const KrylovOptions &opts, std::span<const cplx> x0 = {});

double Norm2(std::span<const cplx> v);
double RelativeResidual(const LinearOperator &apply, std::span<const cplx> x,
                        std::span<const cplx> rhs);

}  // namespace metamat

#endif  // METAMAT_KRYLOV_HPP
