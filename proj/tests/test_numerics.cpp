// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <Eigen/Dense>
#include "metamat/krylov.hpp"
#include "metamat/quadrature.hpp"

using namespace metamat;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1")
{
  const auto rule = GaussLegendre(6, 0.0, 2.0);
  double s = 0.0, w = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); i++)
  {
    s += rule.weights[i] * std::pow(rule.nodes[i], 11);
    w += rule.weights[i];
  }
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
  CHECK(w == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("GMRES matches a dense solve, including restarts")
{
  const int n = 60;
  Eigen::MatrixXcd A(n, n);
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      A(i, j) = cplx(std::sin(0.3 * i + 0.7 * j), std::cos(1.1 * i - 0.4 * j)) / (2.0 * n);
    }
    A(i, i) += cplx(1.0, 0.2);
  }
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; i++)
  {
    b[i] = cplx(std::cos(0.5 * i), 1.0 / (i + 1.0));
  }
  const Eigen::VectorXcd ref = A.partialPivLu().solve(b);
  const LinearOperator op = [&](std::span<const cplx> in, std::span<cplx> out)
  {
    Eigen::Map<Eigen::VectorXcd>(out.data(), n) =
        A * Eigen::Map<const Eigen::VectorXcd>(in.data(), n);
  };
  KrylovOptions opts;
  opts.tol = 1e-12;
  opts.restart = 2;
  const auto res = Gmres(op, {b.data(), static_cast<std::size_t>(n)}, opts);
  CHECK(res.residual <= 1e-12);
  CHECK(res.iterations > 2);
  double err = 0.0;
  for (int i = 0; i < n; i++)
  {
    err = std::max(err, std::abs(res.x[i] - ref[i]));
  }
  CHECK(err < 1e-10);
  CHECK(res.history.size() >= 2);
}

TEST_CASE("GMRES reports failure with the residual history")
{
  const LinearOperator rotate = [](std::span<const cplx> in, std::span<cplx> out)
  {
    // Cyclic shift: GMRES makes no progress until the Krylov space is complete.
    for (std::size_t i = 0; i < in.size(); i++)
    {
      out[(i + 1) % in.size()] = in[i];
    }
  };
  CVector b(40, 0.0);
  b[0] = 1.0;
  KrylovOptions opts;
  opts.restart = 10;
  opts.max_iters = 30;
  try
  {
    Gmres(rotate, b, opts, CVector(40, 0.0));
    FAIL("expected a numerical error");
  }
  catch (const NumericalError &e)
  {
    CHECK_FALSE(e.residual_history.empty());
  }
}
