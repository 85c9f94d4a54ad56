// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/krylov.hpp"

#include <cmath>
#include <fmt/format.h>

namespace metamat
{

double Norm2(std::span<const cplx> v)
{
  double s = 0.0;
  for (const auto &z : v)
  {
    s += std::norm(z);
  }
  return std::sqrt(s);
}

namespace
{

cplx Dot(std::span<const cplx> a, std::span<const cplx> b)
{
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

}  // namespace

double RelativeResidual(const LinearOperator &apply, std::span<const cplx> x,
                        std::span<const cplx> rhs)
{
  CVector ax(x.size());
  apply(x, ax);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    r += std::norm(rhs[i] - ax[i]);
  }
  const double b = Norm2(rhs);
  return b > 0.0 ? std::sqrt(r) / b : std::sqrt(r);
}

KrylovResult Gmres(const LinearOperator &apply, std::span<const cplx> rhs,
                   const KrylovOptions &opts, std::span<const cplx> x0)
{
  const std::size_t n = rhs.size();
  KrylovResult res;
  res.x.assign(x0.empty() ? rhs.begin() : x0.begin(), x0.empty() ? rhs.end() : x0.end());
  const double bnorm = Norm2(rhs);
  if (bnorm == 0.0)
  {
    std::fill(res.x.begin(), res.x.end(), cplx(0.0));
    return res;
  }

  const int m = std::max(1, opts.restart);
  std::vector<CVector> basis(m + 1, CVector(n));
  std::vector<CVector> hess(m + 1, CVector(m, 0.0));  // hess[i][j]
  CVector cs(m), sn(m), g(m + 1);
  CVector r(n), w(n);

  auto true_residual = [&]()
  {
    apply(res.x, w);
    for (std::size_t i = 0; i < n; i++)
    {
      r[i] = rhs[i] - w[i];
    }
    return Norm2(r);
  };

  double rnorm = true_residual();
  res.residual = rnorm / bnorm;
  while (res.residual > opts.tol)
  {
    if (res.iterations >= opts.max_iters)
    {
      throw NumericalError(fmt::format("GMRES did not reach tolerance {:.3e} in {} iterations "
                                       "(relative residual {:.3e})",
                                       opts.tol, res.iterations, res.residual),
                           res.history);
    }
    for (std::size_t i = 0; i < n; i++)
    {
      basis[0][i] = r[i] / rnorm;
    }
    std::fill(g.begin(), g.end(), cplx(0.0));
    g[0] = rnorm;
    int j = 0;
    for (; j < m && res.iterations < opts.max_iters; j++)
    {
      apply(basis[j], w);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; i++)
      {
        const cplx hij = Dot(basis[i], w);
        hess[i][j] = hij;
        for (std::size_t q = 0; q < n; q++)
        {
          w[q] -= hij * basis[i][q];
        }
      }
      const double hnext = Norm2(w);
      hess[j + 1][j] = hnext;
      if (hnext > 0.0)
      {
        for (std::size_t q = 0; q < n; q++)
        {
          basis[j + 1][q] = w[q] / hnext;
        }
      }
      for (int i = 0; i < j; i++)
      {
        const cplx t = std::conj(cs[i]) * hess[i][j] + std::conj(sn[i]) * hess[i + 1][j];
        hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
        hess[i][j] = t;
      }
      const cplx a = hess[j][j], b = hess[j + 1][j];
      const double denom = std::sqrt(std::norm(a) + std::norm(b));
      if (denom == 0.0)
      {
        throw NumericalError("GMRES breakdown: singular Hessenberg column", res.history);
      }
      cs[j] = a / denom;
      sn[j] = b / denom;
      hess[j][j] = std::conj(cs[j]) * a + std::conj(sn[j]) * b;
      hess[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      res.iterations++;
      const double est = std::abs(g[j + 1]) / bnorm;
      res.history.push_back(est);
      if (est <= opts.tol || hnext == 0.0)
      {
        j++;
        break;
      }
    }
    // Back substitution on the j x j triangle.
    CVector y(j);
    for (int i = j - 1; i >= 0; i--)
    {
      cplx s = g[i];
      for (int q = i + 1; q < j; q++)
      {
        s -= hess[i][q] * y[q];
      }
      if (hess[i][i] == 0.0)
      {
        throw NumericalError("GMRES breakdown: singular triangular factor", res.history);
      }
      y[i] = s / hess[i][i];
    }
    for (int i = 0; i < j; i++)
    {
      for (std::size_t q = 0; q < n; q++)
      {
        res.x[q] += y[i] * basis[i][q];
      }
    }
    const double previous = res.residual;
    rnorm = true_residual();
    res.residual = rnorm / bnorm;
    if (res.residual > opts.tol && res.residual >= previous)
    {
      throw NumericalError(fmt::format("GMRES stagnated at relative residual {:.3e}",
                                       res.residual),
                           res.history);
    }
  }
  return res;
}

}  // namespace metamat
