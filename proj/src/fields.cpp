// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>

namespace metamat
{

WaveContext::WaveContext(double k_, const Vec3 &alpha_) : k(k_), alpha(alpha_)
{
  if (!(k > 0.0))
  {
    throw ConfigError(fmt::format("wavenumber must be positive, got {}", k));
  }
  if (std::abs(alpha.norm() - 1.0) > 1e-12)
  {
    throw ConfigError("incident direction must be a unit vector");
  }
}

BoxDomain::BoxDomain(const Vec3 &lower_, const Vec3 &upper_) : lower(lower_), upper(upper_)
{
  if (!((upper.array() > lower.array()).all()))
  {
    throw ConfigError("box upper corner must exceed lower corner componentwise");
  }
}

bool BoxDomain::Contains(const Vec3 &x) const
{
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

double BoxDomain::DistanceToBoundary(const Vec3 &x) const
{
  return std::min((x - lower).minCoeff(), (upper - x).minCoeff());
}

std::vector<Vec3> LatticePoints(const BoxDomain &box, int n)
{
  std::vector<Vec3> pts;
  if (n < 2)
  {
    pts.push_back(0.5 * (box.lower + box.upper));
    return pts;
  }
  pts.reserve(static_cast<std::size_t>(n) * n * n);
  const Vec3 step = box.Extent() / (n - 1);
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      for (int k = 0; k < n; k++)
      {
        pts.push_back(box.lower + Vec3(i * step.x(), j * step.y(), k * step.z()));
      }
    }
  }
  return pts;
}

namespace
{

struct Evaluator
{
  const Vec3 &x;

  cplx operator()(const field::Constant &f) const { return f.value; }

  cplx operator()(const field::BallStep &f) const
  {
    return (x - f.center).norm() <= f.radius ? f.inside : f.outside;
  }

  cplx operator()(const field::RadialBump &f) const
  {
    const double r = (x - f.center).norm();
    if (r >= f.radius)
    {
      return 0.0;
    }
    return f.amplitude * std::pow(1.0 - r / f.radius, f.exponent);
  }

  cplx operator()(const field::GridSampled &f) const
  {
    const Vec3 s = (x - f.origin) / f.voxel;
    std::array<std::size_t, 3> i0;
    std::array<double, 3> t;
    for (int d = 0; d < 3; d++)
    {
      const auto n = f.dims[d];
      if (n == 1)
      {
        if (std::abs(s[d]) > 0.5)
        {
          return 0.0;
        }
        i0[d] = 0;
        t[d] = 0.0;
        continue;
      }
      if (s[d] < 0.0 || s[d] > static_cast<double>(n - 1))
      {
        return 0.0;
      }
      const auto base = std::min(static_cast<std::size_t>(s[d]), n - 2);
      i0[d] = base;
      t[d] = s[d] - static_cast<double>(base);
    }
    const auto &a = *f.data;
    auto at = [&](std::size_t i, std::size_t j, std::size_t k)
    { return a[(i * f.dims[1] + j) * f.dims[2] + k]; };
    const std::size_t di = f.dims[0] > 1, dj = f.dims[1] > 1, dk = f.dims[2] > 1;
    cplx v = 0.0;
    for (std::size_t ci = 0; ci <= di; ci++)
    {
      const double wi = ci ? t[0] : 1.0 - t[0];
      for (std::size_t cj = 0; cj <= dj; cj++)
      {
        const double wj = cj ? t[1] : 1.0 - t[1];
        for (std::size_t ck = 0; ck <= dk; ck++)
        {
          const double wk = ck ? t[2] : 1.0 - t[2];
          v += (wi * wj * wk) * at(i0[0] + ci, i0[1] + cj, i0[2] + ck);
        }
      }
    }
    return v;
  }

  cplx operator()(const field::Sum &f) const
  {
    cplx v = 0.0;
    for (const auto &term : f.terms)
    {
      v += term.Eval(x);
    }
    return v;
  }

  cplx operator()(const field::Scale &f) const { return f.factor * f.inner.front().Eval(x); }

  cplx operator()(const field::Quotient &f) const
  {
    const cplx num = f.parts[0].Eval(x);
    if (num == 0.0)
    {
      return 0.0;
    }
    return num / (4.0 * pi * f.parts[1].Eval(x));
  }
};

}  // namespace

FieldSpec::FieldSpec() : FieldSpec(field::Constant{0.0}) {}

FieldSpec::FieldSpec(field::Node node)
  : node_(std::make_shared<const field::Node>(std::move(node)))
{
}

FieldSpec FieldSpec::Constant(cplx value)
{
  return FieldSpec(field::Constant{value});
}

FieldSpec FieldSpec::BallStep(const Vec3 &center, double radius, cplx inside, cplx outside)
{
  if (!(radius > 0.0))
  {
    throw ConfigError("ball_step radius must be positive");
  }
  return FieldSpec(field::BallStep{center, radius, inside, outside});
}

FieldSpec FieldSpec::RadialBump(const Vec3 &center, double radius, cplx amplitude,
                                int exponent)
{
  if (!(radius > 0.0) || exponent < 0)
  {
    throw ConfigError("radial_bump needs radius > 0 and exponent >= 0");
  }
  return FieldSpec(field::RadialBump{center, radius, amplitude, exponent});
}

FieldSpec FieldSpec::Grid(const Vec3 &origin, double voxel, std::array<std::size_t, 3> dims,
                          CVector data, std::string sidecar)
{
  if (!(voxel > 0.0))
  {
    throw ConfigError("grid voxel size must be positive");
  }
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
  {
    throw ConfigError("grid dimensions must be positive");
  }
  if (data.size() != dims[0] * dims[1] * dims[2])
  {
    throw ConfigError(fmt::format("grid data has {} values, dimensions {}x{}x{} need {}",
                                  data.size(), dims[0], dims[1], dims[2],
                                  dims[0] * dims[1] * dims[2]));
  }
  return FieldSpec(field::GridSampled{origin, voxel, dims,
                                      std::make_shared<const CVector>(std::move(data)),
                                      std::move(sidecar)});
}

FieldSpec FieldSpec::Sum(std::vector<FieldSpec> terms)
{
  return FieldSpec(field::Sum{std::move(terms)});
}

FieldSpec FieldSpec::Scale(cplx factor, const FieldSpec &inner)
{
  return FieldSpec(field::Scale{factor, {inner}});
}

FieldSpec FieldSpec::Quotient(const FieldSpec &num, const FieldSpec &den)
{
  return FieldSpec(field::Quotient{{num, den}});
}

cplx FieldSpec::Eval(const Vec3 &x) const
{
  return std::visit(Evaluator{x}, *node_);
}

FieldSpec ComputeContrast(const FieldSpec &n0sq, const FieldSpec &nsq, double k)
{
  return FieldSpec::Scale(k * k, FieldSpec::Sum({n0sq, FieldSpec::Scale(-1.0, nsq)}));
}

FieldSpec FactorDesign(const FieldSpec &p, const FieldSpec &N, const BoxDomain &box,
                       int lattice)
{
  for (const auto &x : LatticePoints(box, lattice))
  {
    const cplx pv = p.Eval(x);
    const cplx nv = N.Eval(x);
    if (pv != 0.0 && !(nv.real() > 0.0 && nv.imag() == 0.0))
    {
      throw DesignError(fmt::format(
          "density vanishes where contrast required: N = ({}, {}) at ({}, {}, {})", nv.real(),
          nv.imag(), x.x(), x.y(), x.z()));
    }
  }
  return FieldSpec::Quotient(p, N);
}

double FactorizationResidual(const FieldSpec &p, const FieldSpec &N, const FieldSpec &h,
                             const BoxDomain &box, int lattice)
{
  double worst = 0.0;
  for (const auto &x : LatticePoints(box, lattice))
  {
    const cplx pv = p.Eval(x);
    const cplx rec = 4.0 * pi * h.Eval(x) * N.Eval(x);
    const double scale = std::max(std::abs(pv), std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(rec - pv) / scale);
  }
  return worst;
}

std::vector<PassivityViolation> ValidatePassivity(const FieldSpec &nsq, const FieldSpec &h,
                                                  const FieldSpec &n0sq,
                                                  std::span<const Vec3> samples)
{
  std::vector<PassivityViolation> out;
  for (const auto &x : samples)
  {
    if (const double v = n0sq.Eval(x).imag(); v < 0.0)
    {
      out.push_back({x, "gain background", v});
    }
    if (const double v = nsq.Eval(x).imag(); v < 0.0)
    {
      out.push_back({x, "gain medium", v});
    }
    if (const double v = h.Eval(x).imag(); v > 0.0)
    {
      out.push_back({x, "active impedance", v});
    }
  }
  return out;
}

}  // namespace metamat
