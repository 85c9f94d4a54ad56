// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_RECIPE_HPP
#define METAMAT_RECIPE_HPP

#include <array>
#include <filesystem>
#include <span>
#include <vector>
#include "metamat/fields.hpp"

namespace metamat
{

// Particle radius a, exponent kappa and the free constants of the cube-side and spacing
// laws: b = cube_side_coeff * a^((2-kappa)/6), d = spacing_coeff * a^((2-kappa)/3).
struct RecipeParams
{
  double a;
  double kappa;
  double cube_side_coeff = 1.0;
  double spacing_coeff = 1.0;

  RecipeParams(double a_, double kappa_, double cube_side_coeff_ = 1.0,
               double spacing_coeff_ = 1.0);

  double NominalCubeSide() const;
  double Spacing() const;
  // a^(kappa - 2): particles per unit of integrated N.
  double CountScale() const;
};

struct Cube
{
  Vec3 lower;
  double side = 0.0;

  Vec3 Center() const { return lower + Vec3::Constant(0.5 * side); }
};

struct Partition
{
  BoxDomain box;
  double side = 0.0;
  std::array<int, 3> counts{};
  std::vector<Cube> cubes;  // x-major, z fastest

  int P() const { return static_cast<int>(cubes.size()); }
  // Owning cube of a point of the box (half-open cells, last cell closed).
  int CubeIndexOf(const Vec3 &x) const;
};

struct ParticleSystem
{
  std::vector<Vec3> centers;
  double a = 0.0;
  double kappa = 0.0;
  CVector h_values;
  CVector zeta_values;
  // Design metadata carried into the layout header.
  double spacing = 0.0;
  double cube_side = 0.0;
  int cube_count = 0;

  std::size_t M() const { return centers.size(); }
};

Partition PartitionDomain(const BoxDomain &box, const RecipeParams &params);

// a^(kappa-2) * integral of N over the cube (clipped to the box), midpoint rule on 4^3
// sub-cells. Unrounded.
double ExpectedCount(const Cube &cube, const BoxDomain &box, const FieldSpec &N,
                     const RecipeParams &params);
// ExpectedCount rounded half-to-even. Throws DesignError if N < 0 at a node.
long TargetCount(const Cube &cube, const BoxDomain &box, const FieldSpec &N,
                 const RecipeParams &params);
// Sum of ExpectedCount over the partition.
double PredictedTotal(const Partition &part, const FieldSpec &N, const RecipeParams &params);

// Particle centers and the cube each one was placed for.
struct Placement
{
  std::vector<Vec3> centers;
  std::vector<int> owner;
};

// Sites come from one global lattice of pitch d (so every pair is >= d apart); a site is
// eligible when it is >= a from the box faces and N > 0 there. Each cube first takes its
// own eligible sites, thinned by cumulative N along a Morton curve so they cover the cube.
// Cubes whose sublattice is too small then
// take the nearest unclaimed eligible sites, in cube order. Output is grouped by owner.
Placement PlaceParticles(const Partition &part, const FieldSpec &N, const RecipeParams &params);

// Every particle placed for cube p gets h(y_p) and zeta = h(y_p) / a^kappa.
ParticleSystem AssignImpedance(const Placement &placement, const FieldSpec &h,
                               const Partition &part, const RecipeParams &params);

// zeta with fl(zeta * scale) == h componentwise whenever such a value exists.
cplx ImpedanceFromH(cplx h, double scale);

struct Design
{
  Partition partition;
  ParticleSystem particles;
};

// Partition, placement and impedance assignment in one call.
Design RunRecipe(const BoxDomain &box, const FieldSpec &N, const FieldSpec &h,
                 const RecipeParams &params);

double MinPairDistance(std::span<const Vec3> centers);

// JSON-lines layout: header {a, kappa, d, cube_side, P, M}, then one particle per line.
void WriteLayout(const std::filesystem::path &path, const ParticleSystem &ps);
ParticleSystem ReadLayout(const std::filesystem::path &path);
std::string EncodeLayout(const ParticleSystem &ps);

}  // namespace metamat

#endif  // METAMAT_RECIPE_HPP
