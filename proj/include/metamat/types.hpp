// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_TYPES_HPP
#define METAMAT_TYPES_HPP

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Core>

namespace metamat
{

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVector = std::vector<cplx>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Error categories map onto CLI exit codes: ConfigError -> 2, NumericalError -> 3.
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct DesignError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

struct NumericalError : std::runtime_error
{
  NumericalError(const std::string &what, std::vector<double> history = {})
    : std::runtime_error(what), residual_history(std::move(history))
  {
  }
  std::vector<double> residual_history;
};

// Incident wave e^{ik alpha.x}.
struct WaveContext
{
  double k = 1.0;
  Vec3 alpha = Vec3::UnitZ();

  WaveContext() = default;
  WaveContext(double k_, const Vec3 &alpha_);

  cplx incident(const Vec3 &x) const { return std::exp(I * (k * alpha.dot(x))); }
};

}  // namespace metamat

#endif  // METAMAT_TYPES_HPP
