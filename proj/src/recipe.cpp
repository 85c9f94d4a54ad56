// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/recipe.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <fmt/format.h>
#include "metamat/io.hpp"

namespace metamat
{

RecipeParams::RecipeParams(double a_, double kappa_, double cube_side_coeff_,
                           double spacing_coeff_)
  : a(a_), kappa(kappa_), cube_side_coeff(cube_side_coeff_), spacing_coeff(spacing_coeff_)
{
  if (!(a > 0.0))
  {
    throw ConfigError(fmt::format("particle radius a must be positive, got {}", a));
  }
  if (!(kappa > 0.0 && kappa < 1.0))
  {
    throw ConfigError(fmt::format("kappa must lie in (0, 1), got {}", kappa));
  }
  if (!(cube_side_coeff > 0.0) || !(spacing_coeff > 0.0))
  {
    throw ConfigError("cube_side_coeff and spacing_coeff must be positive");
  }
  if (!(Spacing() > 2.0 * a))
  {
    throw ConfigError(fmt::format("spacing d = {} does not exceed 2a = {}; particles overlap",
                                  Spacing(), 2.0 * a));
  }
}

double RecipeParams::NominalCubeSide() const
{
  return cube_side_coeff * std::pow(a, (2.0 - kappa) / 6.0);
}

double RecipeParams::Spacing() const
{
  return spacing_coeff * std::pow(a, (2.0 - kappa) / 3.0);
}

double RecipeParams::CountScale() const
{
  return std::pow(a, kappa - 2.0);
}

int Partition::CubeIndexOf(const Vec3 &x) const
{
  std::array<int, 3> idx;
  for (int d = 0; d < 3; d++)
  {
    const int i = static_cast<int>(std::floor((x[d] - box.lower[d]) / side));
    idx[d] = std::clamp(i, 0, counts[d] - 1);
  }
  return (idx[0] * counts[1] + idx[1]) * counts[2] + idx[2];
}

Partition PartitionDomain(const BoxDomain &box, const RecipeParams &params)
{
  const double b = params.NominalCubeSide();
  const double lmin = box.MinEdge();
  if (b >= lmin)
  {
    throw DesignError(fmt::format(
        "radius too large for domain: cube side {} is not below the shortest box edge {}", b,
        lmin));
  }
  // Choose the cube count on the shortest edge whose side is geometrically closest to b;
  // this keeps the snapped side within [b/sqrt2, b*sqrt2].
  const double ratio = lmin / b;
  const double lo = std::max(1.0, std::floor(ratio));
  const double hi = lo + 1.0;
  const double n = (std::log(ratio / lo) <= std::log(hi / ratio)) ? lo : hi;
  const double side = lmin / n;

  Partition part{box, side, {}, {}};
  const Vec3 extent = box.Extent();
  for (int d = 0; d < 3; d++)
  {
    part.counts[d] = static_cast<int>(std::ceil(extent[d] / side - 1e-9));
  }
  part.cubes.reserve(static_cast<std::size_t>(part.counts[0]) * part.counts[1] *
                     part.counts[2]);
  for (int i = 0; i < part.counts[0]; i++)
  {
    for (int j = 0; j < part.counts[1]; j++)
    {
      for (int k = 0; k < part.counts[2]; k++)
      {
        part.cubes.push_back({box.lower + side * Vec3(i, j, k), side});
      }
    }
  }
  return part;
}

double ExpectedCount(const Cube &cube, const BoxDomain &box, const FieldSpec &N,
                     const RecipeParams &params)
{
  constexpr int sub = 4;
  const Vec3 lo = cube.lower.cwiseMax(box.lower);
  const Vec3 hi = (cube.lower + Vec3::Constant(cube.side)).cwiseMin(box.upper);
  const Vec3 ext = (hi - lo).cwiseMax(0.0);
  if (ext.prod() <= 0.0)
  {
    return 0.0;
  }
  const Vec3 h = ext / sub;
  double integral = 0.0;
  for (int i = 0; i < sub; i++)
  {
    for (int j = 0; j < sub; j++)
    {
      for (int k = 0; k < sub; k++)
      {
        const Vec3 x = lo + Vec3((i + 0.5) * h.x(), (j + 0.5) * h.y(), (k + 0.5) * h.z());
        const cplx v = N.Eval(x);
        if (v.real() < 0.0 || v.imag() != 0.0)
        {
          throw DesignError(fmt::format("density N must be real and nonnegative; N = ({}, {}) "
                                        "at ({}, {}, {})",
                                        v.real(), v.imag(), x.x(), x.y(), x.z()));
        }
        integral += v.real();
      }
    }
  }
  integral *= h.prod();
  return params.CountScale() * integral;
}

long TargetCount(const Cube &cube, const BoxDomain &box, const FieldSpec &N,
                 const RecipeParams &params)
{
  const double expected = ExpectedCount(cube, box, N, params);
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double rounded = std::nearbyint(expected);
  std::fesetround(saved);
  return static_cast<long>(rounded);
}

double PredictedTotal(const Partition &part, const FieldSpec &N, const RecipeParams &params)
{
  double total = 0.0;
  for (const auto &cube : part.cubes)
  {
    total += ExpectedCount(cube, part.box, N, params);
  }
  return total;
}

namespace
{

// Interleaves the low 21 bits of each index.
std::uint64_t Morton(long i, long j, long k)
{
  std::uint64_t code = 0;
  for (int bit = 0; bit < 21; bit++)
  {
    code |= ((static_cast<std::uint64_t>(i) >> bit) & 1U) << (3 * bit + 2);
    code |= ((static_cast<std::uint64_t>(j) >> bit) & 1U) << (3 * bit + 1);
    code |= ((static_cast<std::uint64_t>(k) >> bit) & 1U) << (3 * bit);
  }
  return code;
}

}  // namespace

Placement PlaceParticles(const Partition &part, const FieldSpec &N, const RecipeParams &params)
{
  const double d = params.Spacing();
  const BoxDomain &box = part.box;
  std::array<long, 3> sites{};
  for (int ax = 0; ax < 3; ax++)
  {
    sites[ax] = static_cast<long>(std::floor(box.Extent()[ax] / d - 0.5)) + 1;
  }
  auto site = [&](const std::array<long, 3> &s)
  {
    return Vec3(box.lower.x() + (s[0] + 0.5) * d, box.lower.y() + (s[1] + 0.5) * d,
                box.lower.z() + (s[2] + 0.5) * d);
  };
  auto eligible = [&](const Vec3 &x)
  {
    return box.Contains(x) && box.DistanceToBoundary(x) >= params.a && N.Eval(x).real() > 0.0;
  };

  struct Candidate
  {
    double key;  // Morton code in phase 1, squared distance when borrowing
    std::array<long, 3> idx;
    bool operator<(const Candidate &r) const
    {
      return key != r.key ? key < r.key : idx < r.idx;
    }
  };

  const long P = static_cast<long>(part.cubes.size());
  std::vector<long> target(P, 0);
  std::vector<std::vector<Candidate>> own(P);
  std::string failure;
  long failed_cube = -1;

#pragma omp parallel for schedule(dynamic)
  for (long p = 0; p < P; p++)
  {
    const Cube &cube = part.cubes[p];
    try
    {
      target[p] = TargetCount(cube, box, N, params);
    }
    catch (const DesignError &e)
    {
#pragma omp critical
      if (failed_cube < 0 || p < failed_cube)
      {
        failed_cube = p;
        failure = e.what();
      }
      continue;
    }
    std::array<long, 3> jlo, jhi;
    for (int ax = 0; ax < 3; ax++)
    {
      const double s0 = (cube.lower[ax] - box.lower[ax]) / d - 0.5;
      jlo[ax] = std::max(0L, static_cast<long>(std::floor(s0)) - 1);
      jhi[ax] = std::min(sites[ax] - 1, static_cast<long>(std::ceil(s0 + cube.side / d)) + 1);
    }
    auto &cands = own[p];
    for (long i = jlo[0]; i <= jhi[0]; i++)
    {
      for (long j = jlo[1]; j <= jhi[1]; j++)
      {
        for (long k = jlo[2]; k <= jhi[2]; k++)
        {
          const Vec3 x = site({i, j, k});
          if (part.CubeIndexOf(x) == p && eligible(x))
          {
            cands.push_back({static_cast<double>(Morton(i - jlo[0], j - jlo[1], k - jlo[2])),
                             {i, j, k}});
          }
        }
      }
    }
    std::sort(cands.begin(), cands.end());
    // Thin along the curve by cumulative density so the kept sites spread over the
    // eligible part of the cube; kept sites move to the front, order preserved.
    const long take = std::min<long>(target[p], static_cast<long>(cands.size()));
    if (take > 0 && take < static_cast<long>(cands.size()))
    {
      std::vector<double> cum(cands.size());
      double total = 0.0;
      for (std::size_t m = 0; m < cands.size(); m++)
      {
        total += N.Eval(site(cands[m].idx)).real();
        cum[m] = total;
      }
      // One site per level, strictly increasing, leaving room for the remaining levels.
      std::vector<bool> keep(cands.size(), false);
      const long n = static_cast<long>(cands.size());
      long m = -1;
      for (long t = 0; t < take; t++)
      {
        const double level = (t + 0.5) / take * total;
        long next = m + 1;
        while (next < n - 1 && cum[next] < level)
        {
          next++;
        }
        m = std::min(next, n - take + t);
        keep[m] = true;
      }
      std::stable_partition(cands.begin(), cands.end(),
                            [&](const Candidate &c) { return keep[&c - cands.data()]; });
    }
  }
  if (failed_cube >= 0)
  {
    throw DesignError(failure);
  }

  // Cubes keep their thinned sites; surplus sites form the pool shared by short cubes.
  std::vector<std::vector<std::array<long, 3>>> claimed(P);
  std::vector<std::array<long, 3>> pool;
  std::vector<long> deficit;
  for (long p = 0; p < P; p++)
  {
    const long take = std::min<long>(target[p], static_cast<long>(own[p].size()));
    for (long m = 0; m < static_cast<long>(own[p].size()); m++)
    {
      (m < take ? claimed[p] : pool).push_back(own[p][m].idx);
    }
    if (take < target[p])
    {
      deficit.push_back(p);
    }
  }
  std::sort(pool.begin(), pool.end());
  std::vector<bool> used(pool.size(), false);
  for (long p : deficit)
  {
    const long need = target[p] - static_cast<long>(claimed[p].size());
    const Vec3 center = part.cubes[p].Center();
    std::vector<Candidate> free;
    for (std::size_t s = 0; s < pool.size(); s++)
    {
      if (!used[s])
      {
        free.push_back({(site(pool[s]) - center).squaredNorm(), pool[s]});
      }
    }
    if (static_cast<long>(free.size()) < need)
    {
      throw DesignError(fmt::format("density infeasible at this a, kappa: cube {} needs {} "
                                    "particles, its sublattice holds {} and only {} spare "
                                    "sites remain (a = {}, kappa = {})",
                                    p, target[p], own[p].size(), free.size(), params.a,
                                    params.kappa));
    }
    std::partial_sort(free.begin(), free.begin() + need, free.end());
    for (long m = 0; m < need; m++)
    {
      claimed[p].push_back(free[m].idx);
      used[std::lower_bound(pool.begin(), pool.end(), free[m].idx) - pool.begin()] = true;
    }
  }

  Placement out;
  for (long p = 0; p < P; p++)
  {
    for (const auto &idx : claimed[p])
    {
      out.centers.push_back(site(idx));
      out.owner.push_back(static_cast<int>(p));
    }
  }
  return out;
}

cplx ImpedanceFromH(cplx h, double scale)
{
  auto component = [scale](double target)
  {
    const double guess = target / scale;
    double best = guess;
    double lo = guess, hi = guess;
    for (int step = 0; step < 8; step++)
    {
      if (lo * scale == target)
      {
        return lo;
      }
      if (hi * scale == target)
      {
        return hi;
      }
      lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
      hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    }
    return best;
  };
  return {component(h.real()), component(h.imag())};
}

ParticleSystem AssignImpedance(const Placement &placement, const FieldSpec &h,
                               const Partition &part, const RecipeParams &params)
{
  ParticleSystem ps;
  ps.a = params.a;
  ps.kappa = params.kappa;
  ps.spacing = params.Spacing();
  ps.cube_side = part.side;
  ps.cube_count = part.P();
  ps.centers = placement.centers;
  ps.h_values.reserve(ps.M());
  ps.zeta_values.reserve(ps.M());

  const double scale = std::pow(params.a, params.kappa);
  std::vector<cplx> h_cube(part.cubes.size());
  std::vector<bool> known(part.cubes.size(), false);
  for (const int p : placement.owner)
  {
    if (!known[p])
    {
      h_cube[p] = h.Eval(part.cubes[p].Center());
      known[p] = true;
    }
    ps.h_values.push_back(h_cube[p]);
    ps.zeta_values.push_back(ImpedanceFromH(h_cube[p], scale));
  }
  return ps;
}

Design RunRecipe(const BoxDomain &box, const FieldSpec &N, const FieldSpec &h,
                 const RecipeParams &params)
{
  Partition part = PartitionDomain(box, params);
  const auto placement = PlaceParticles(part, N, params);
  ParticleSystem ps = AssignImpedance(placement, h, part, params);
  return {std::move(part), std::move(ps)};
}

double MinPairDistance(std::span<const Vec3> centers)
{
  double best = std::numeric_limits<double>::infinity();
  const long n = static_cast<long>(centers.size());
#pragma omp parallel for reduction(min : best) schedule(dynamic, 64)
  for (long i = 0; i < n; i++)
  {
    for (long j = i + 1; j < n; j++)
    {
      best = std::min(best, (centers[i] - centers[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

std::string EncodeLayout(const ParticleSystem &ps)
{
  std::string out;
  json header = {{"a", ps.a},
                 {"kappa", ps.kappa},
                 {"d", ps.spacing},
                 {"cube_side", ps.cube_side},
                 {"P", ps.cube_count},
                 {"M", ps.M()}};
  out += header.dump() + "\n";
  for (std::size_t m = 0; m < ps.M(); m++)
  {
    json line = {{"x", VecToJson(ps.centers[m])},
                 {"h", ComplexToJson(ps.h_values[m])},
                 {"zeta", ComplexToJson(ps.zeta_values[m])}};
    out += line.dump() + "\n";
  }
  return out;
}

void WriteLayout(const std::filesystem::path &path, const ParticleSystem &ps)
{
  WriteFileAtomic(path, EncodeLayout(ps));
}

ParticleSystem ReadLayout(const std::filesystem::path &path)
{
  std::istringstream in(ReadFile(path));
  std::string line;
  const std::string where = path.string();
  if (!std::getline(in, line))
  {
    throw ConfigError(where + ": empty layout file");
  }
  ParticleSystem ps;
  std::size_t expected_m = 0;
  try
  {
    const json header = json::parse(line);
    RequireKnownKeys(header, {"a", "kappa", "d", "cube_side", "P", "M"}, where + " header");
    ps.a = header.at("a").get<double>();
    ps.kappa = header.at("kappa").get<double>();
    ps.spacing = header.at("d").get<double>();
    ps.cube_side = header.at("cube_side").get<double>();
    ps.cube_count = header.at("P").get<int>();
    expected_m = header.at("M").get<std::size_t>();
    while (std::getline(in, line))
    {
      if (line.empty())
      {
        continue;
      }
      const json p = json::parse(line);
      RequireKnownKeys(p, {"x", "h", "zeta"}, where + " particle");
      ps.centers.push_back(VecFromJson(p.at("x")));
      ps.h_values.push_back(ComplexFromJson(p.at("h")));
      ps.zeta_values.push_back(ComplexFromJson(p.at("zeta")));
    }
  }
  catch (const json::exception &e)
  {
    throw ConfigError(fmt::format("{}: malformed layout: {}", where, e.what()));
  }
  if (ps.M() != expected_m)
  {
    throw ConfigError(fmt::format("{}: header says M = {} but file has {} particles", where,
                                  expected_m, ps.M()));
  }
  if (!(ps.a > 0.0))
  {
    throw ConfigError(where + ": particle radius must be positive");
  }
  return ps;
}

}  // namespace metamat
