// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/farfield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <regex>
#include <Eigen/Dense>
#include <fmt/format.h>
#include "metamat/quadrature.hpp"

namespace metamat
{

double RealSphericalHarmonic(int l, int m, const Vec3 &x)
{
  const double theta = std::acos(std::clamp(x.z(), -1.0, 1.0));
  const double phi = std::atan2(x.y(), x.x());
  const int am = std::abs(m);
  const double base = std::sph_legendre(l, am, theta);
  if (m == 0)
  {
    return base;
  }
  return std::sqrt(2.0) * base * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

namespace
{

using Face = std::array<int, 3>;

void Icosahedron(std::vector<Vec3> &verts, std::vector<Face> &faces)
{
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  verts = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
           {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
           {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto &v : verts)
  {
    v.normalize();
  }
  faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
}

void Subdivide(std::vector<Vec3> &verts, std::vector<Face> &faces)
{
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b)
  {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end())
    {
      return it->second;
    }
    verts.push_back((verts[a] + verts[b]).normalized());
    const int idx = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, idx);
    return idx;
  };
  std::vector<Face> next;
  next.reserve(faces.size() * 4);
  for (const auto &f : faces)
  {
    const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
    next.push_back({f[0], ab, ca});
    next.push_back({f[1], bc, ab});
    next.push_back({f[2], ca, bc});
    next.push_back({ab, bc, ca});
  }
  faces = std::move(next);
}

// Max |sum_i w_i Y_lm(x_i) - sqrt(4 pi) delta_l0| over l <= degree.
double MomentError(const std::vector<Vec3> &nodes, const std::vector<double> &w, int degree)
{
  double worst = 0.0;
  for (int l = 0; l <= degree; l++)
  {
    for (int m = -l; m <= l; m++)
    {
      double s = 0.0;
      for (std::size_t i = 0; i < nodes.size(); i++)
      {
        s += w[i] * RealSphericalHarmonic(l, m, nodes[i]);
      }
      const double target = l == 0 ? std::sqrt(4.0 * pi) : 0.0;
      worst = std::max(worst, std::abs(s - target));
    }
  }
  return worst;
}

std::vector<double> FitWeights(const std::vector<Vec3> &nodes, int degree)
{
  const int rows = (degree + 1) * (degree + 1);
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd A(rows, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  int r = 0;
  for (int l = 0; l <= degree; l++)
  {
    for (int m = -l; m <= l; m++, r++)
    {
      for (int i = 0; i < n; i++)
      {
        A(r, i) = RealSphericalHarmonic(l, m, nodes[i]);
      }
    }
  }
  b(0) = std::sqrt(4.0 * pi);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(n, 4.0 * pi / n);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::VectorXd w = w0 + cod.solve(b - A * w0);
  return {w.data(), w.data() + n};
}

}  // namespace

DirectionQuadrature IcosahedralQuadrature(int level)
{
  if (level < 0 || level > 2)
  {
    throw ConfigError("icosahedral quadrature levels are 0, 1 and 2");
  }
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  Icosahedron(verts, faces);
  for (int i = 0; i < level; i++)
  {
    Subdivide(verts, faces);
  }
  DirectionQuadrature q;
  q.nodes = verts;
  q.name = fmt::format("ico{}", verts.size());
  // Highest degree tried per level; the fit falls back until it is exact and positive.
  constexpr std::array<int, 3> target{5, 9, 15};
  for (int degree = target[level]; degree >= 0; degree--)
  {
    auto w = FitWeights(verts, degree);
    const bool positive = std::all_of(w.begin(), w.end(), [](double x) { return x > 0.0; });
    if (positive && MomentError(verts, w, degree) < 1e-12)
    {
      q.weights = std::move(w);
      q.exact_degree = degree;
      break;
    }
  }
  // Pin the total to 4 pi exactly (the fit leaves rounding-level drift).
  double sum = 0.0;
  for (double w : q.weights)
  {
    sum += w;
  }
  for (double &w : q.weights)
  {
    w *= 4.0 * pi / sum;
  }
  return q;
}

DirectionQuadrature ProductQuadrature(int n_theta, int n_phi)
{
  if (n_theta < 1 || n_phi < 1)
  {
    throw ConfigError("product quadrature needs positive node counts");
  }
  const auto gl = GaussLegendre(n_theta);
  DirectionQuadrature q;
  q.name = fmt::format("gl{}x{}", n_theta, n_phi);
  for (int i = 0; i < n_theta; i++)
  {
    const double ct = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; j++)
    {
      const double ph = 2.0 * pi * j / n_phi;
      q.nodes.emplace_back(st * std::cos(ph), st * std::sin(ph), ct);
      q.weights.push_back(gl.weights[i] * 2.0 * pi / n_phi);
    }
  }
  q.exact_degree = std::min(2 * n_theta - 1, n_phi - 1);
  return q;
}

DirectionQuadrature QuadratureByName(const std::string &name)
{
  if (name == "ico12")
  {
    return IcosahedralQuadrature(0);
  }
  if (name == "ico42")
  {
    return IcosahedralQuadrature(1);
  }
  if (name == "ico162")
  {
    return IcosahedralQuadrature(2);
  }
  static const std::regex product(R"(gl(\d+)x(\d+))");
  std::smatch match;
  if (std::regex_match(name, match, product))
  {
    return ProductQuadrature(std::stoi(match[1]), std::stoi(match[2]));
  }
  throw ConfigError(fmt::format("unknown direction set \"{}\"", name));
}

double Integrate(const DirectionQuadrature &quad, const std::function<double(const Vec3 &)> &f)
{
  double s = 0.0;
  for (std::size_t i = 0; i < quad.Size(); i++)
  {
    s += quad.weights[i] * f(quad.nodes[i]);
  }
  return s;
}

double TotalCrossSection(const AmplitudeFn &A, const DirectionQuadrature &quad)
{
  return Integrate(quad, [&A](const Vec3 &b) { return std::norm(A(b)); });
}

double OpticalTheoremDefect(const AmplitudeFn &A, const Vec3 &alpha, double k,
                            const DirectionQuadrature &quad)
{
  return A(alpha).imag() - k * TotalCrossSection(A, quad) / (4.0 * pi);
}

double OpticalTheoremResidual(const AmplitudeFn &A, const Vec3 &alpha, double k,
                              const DirectionQuadrature &quad)
{
  const double sigma = TotalCrossSection(A, quad);
  const double scale = std::max(k * sigma / (4.0 * pi), residual_floor);
  return std::abs(A(alpha).imag() - k * sigma / (4.0 * pi)) / scale;
}

double ReciprocityResidual(const ScatteringFn &solve, const Vec3 &alpha, const Vec3 &beta)
{
  const cplx forward = solve(beta, alpha);
  const cplx reverse = solve(-alpha, -beta);
  return std::abs(forward - reverse) / std::max(std::abs(forward), residual_floor);
}

}  // namespace metamat
