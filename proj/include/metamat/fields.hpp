// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_FIELDS_HPP
#define METAMAT_FIELDS_HPP

#include <array>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>
#include "metamat/types.hpp"

namespace metamat
{

// Axis-aligned box enclosing the design region D.
struct BoxDomain
{
  Vec3 lower, upper;

  BoxDomain() : lower(Vec3::Zero()), upper(Vec3::Ones()) {}
  BoxDomain(const Vec3 &lower_, const Vec3 &upper_);

  Vec3 Extent() const { return upper - lower; }
  double Volume() const { return Extent().prod(); }
  double MinEdge() const { return Extent().minCoeff(); }
  bool Contains(const Vec3 &x) const;
  // Distance from an interior point to the nearest face.
  double DistanceToBoundary(const Vec3 &x) const;
};

// Regular n^3 lattice including the box corners.
std::vector<Vec3> LatticePoints(const BoxDomain &box, int n);

class FieldSpec;

namespace field
{

struct Constant
{
  cplx value;
};

struct BallStep
{
  Vec3 center;
  double radius;
  cplx inside, outside;
};

// amplitude * (1 - |x - c| / radius)^exponent inside the ball, 0 outside.
struct RadialBump
{
  Vec3 center;
  double radius;
  cplx amplitude;
  int exponent;
};

// Samples at origin + (i, j, k) * voxel, stored z-fastest. Trilinear in between,
// zero outside the sampled box.
struct GridSampled
{
  Vec3 origin;
  double voxel;
  std::array<std::size_t, 3> dims;
  std::shared_ptr<const CVector> data;
  std::string sidecar;  // file the samples came from, if any
};

struct Sum
{
  std::vector<FieldSpec> terms;
};

struct Scale
{
  cplx factor;
  std::vector<FieldSpec> inner;  // exactly one entry
};

// num / (4 pi den); zero wherever num vanishes.
struct Quotient
{
  std::vector<FieldSpec> parts;  // {num, den}
};

using Node = std::variant<Constant, BallStep, RadialBump, GridSampled, Sum, Scale, Quotient>;

}  // namespace field

// Immutable complex scalar field on R^3. Copies share the node tree.
class FieldSpec
{
public:
  FieldSpec();  // Constant(0)
  explicit FieldSpec(field::Node node);

  static FieldSpec Constant(cplx value);
  static FieldSpec BallStep(const Vec3 &center, double radius, cplx inside, cplx outside);
  static FieldSpec RadialBump(const Vec3 &center, double radius, cplx amplitude, int exponent);
  static FieldSpec Grid(const Vec3 &origin, double voxel, std::array<std::size_t, 3> dims,
                        CVector data, std::string sidecar = {});
  static FieldSpec Sum(std::vector<FieldSpec> terms);
  static FieldSpec Scale(cplx factor, const FieldSpec &inner);
  static FieldSpec Quotient(const FieldSpec &num, const FieldSpec &den);

  cplx Eval(const Vec3 &x) const;
  const field::Node &Node() const { return *node_; }

private:
  std::shared_ptr<const field::Node> node_;
};

inline cplx EvalField(const FieldSpec &f, const Vec3 &x)
{
  return f.Eval(x);
}

// p(x) = k^2 (n0^2(x) - n^2(x)).
FieldSpec ComputeContrast(const FieldSpec &n0sq, const FieldSpec &nsq, double k);

// h = p / (4 pi N). Throws DesignError if N <= 0 at a lattice point where p != 0.
FieldSpec FactorDesign(const FieldSpec &p, const FieldSpec &N, const BoxDomain &box,
                       int lattice = 17);

// max_x |4 pi h N - p| / max(|p|, tiny) over the lattice.
double FactorizationResidual(const FieldSpec &p, const FieldSpec &N, const FieldSpec &h,
                             const BoxDomain &box, int lattice = 17);

struct PassivityViolation
{
  Vec3 x;
  std::string kind;  // "gain background", "gain medium", "active impedance"
  double imag;
};

// Lists every sample with Im n0^2 < 0, Im n^2 < 0 or Im h > 0.
std::vector<PassivityViolation> ValidatePassivity(const FieldSpec &nsq, const FieldSpec &h,
                                                  const FieldSpec &n0sq,
                                                  std::span<const Vec3> samples);

}  // namespace metamat

#endif  // METAMAT_FIELDS_HPP
