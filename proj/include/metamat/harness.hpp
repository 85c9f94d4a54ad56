// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_HARNESS_HPP
#define METAMAT_HARNESS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>
#include "metamat/continuum_solver.hpp"
#include "metamat/discrete_solver.hpp"
#include "metamat/farfield.hpp"
#include "metamat/io.hpp"
#include "metamat/recipe.hpp"

namespace metamat
{

// ---------------------------------------------------------------------------------------
// Oracles

// Exact partial-wave amplitude of one ball of radius a at the origin with the Robin
// condition u_N + zeta u = 0, N pointing into the particle (so du/dr = zeta u at r = a).
// Requires ka < 10.
cplx ImpedanceSphereOracle(double a, cplx zeta, double k, const Vec3 &alpha, const Vec3 &beta);
// Same series with u = 0 on the sphere.
cplx SoundSoftSphereAmplitude(double a, double k, const Vec3 &alpha, const Vec3 &beta);

// Born amplitude of a ball of radius R with constant p:
// -p (sin qR - qR cos qR) / q^3, q = k |alpha - beta|, limit -p R^3 / 3 at q = 0.
cplx BornOracle(cplx p, double R, double k, const Vec3 &alpha, const Vec3 &beta);

// O(n^6) reference for LsMatvec. The self weight comes from radial Gauss-Legendre
// quadrature rather than the closed form used by the FFT operator.
CVector DenseLsMatvec(std::span<const cplx> u, const LSProblem &problem);
cplx SelfVoxelWeightQuadrature(double k, double h);

// ---------------------------------------------------------------------------------------
// Scenarios

struct Scenario
{
  BoxDomain domain{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  FieldSpec n0sq = FieldSpec::Constant(1.0);
  FieldSpec nsq = FieldSpec::Constant(1.0);
  FieldSpec N = FieldSpec::Constant(1.0);
  std::optional<FieldSpec> h;  // explicit factor; verified against 4 pi h N = p
  double k = 1.0;
  Vec3 alpha = Vec3::UnitZ();
  double kappa = 0.5;
  std::vector<double> a_sequence;
  double cube_side_coeff = 1.0;
  double spacing_coeff = 1.0;
  int grid = 32;
  std::vector<Vec3> directions;
  std::string directions_name;
  double continuum_tol = 1e-8;
  double discrete_tol = 1e-10;
  std::optional<std::filesystem::path> layout;

  WaveContext Context() const { return {k, alpha}; }
};

// Strict parse: any key outside the schema is a ConfigError.
Scenario ScenarioFromJson(const json &j, const std::filesystem::path &base_dir = {});
Scenario LoadScenario(const std::filesystem::path &path);
json ScenarioSummary(const Scenario &sc);

// Unit-ball target n^2 = 1.05 in vacuum, kappa = 0.5, k = 1, a in {0.04, 0.03, 0.02}.
Scenario CanonicalScenario();

struct DesignResult
{
  FieldSpec p;
  FieldSpec h;
  Design design;
  double predicted_total = 0.0;  // a^(kappa-2) int_D N
  bool no_contrast = false;
  std::vector<PassivityViolation> passivity;
};

// Contrast, factorization and particle layout for one radius.
DesignResult DesignScenario(const Scenario &sc, double a);

// Continuum problem with the free-space contrast k^2 (1 - n^2), i.e. incident plane wave.
LSProblem ContinuumProblem(const Scenario &sc);

// ---------------------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow
{
  double a;
  std::size_t M;
  int P;
  double spacing;
  double cube_side;
  double predicted_M;
  double sup_error;
  double relative_error;
  std::string method;
  int iterations;
  double wall_time;
};

struct ConvergenceReport
{
  json scenario;
  std::vector<Vec3> directions;
  CVector reference;  // continuum A at each direction
  double reference_residual = 0.0;
  int reference_iterations = 0;
  std::vector<ConvergenceRow> rows;
  std::vector<CVector> discrete;  // A_M per row and direction

  bool Monotone() const;
  // log(err_i / err_{i+1}) / log(a_i / a_{i+1}).
  std::vector<double> EmpiricalRates() const;
};

ConvergenceReport RunConvergence(const Scenario &sc);
json ReportToJson(const ConvergenceReport &report);
// Deterministic table (no timing column).
std::string ReportToCsv(const ConvergenceReport &report);

// Columns beta_x, beta_y, beta_z, ReA, ImA.
std::string AmplitudeCsv(const std::vector<Vec3> &directions, const CVector &values);

// ---------------------------------------------------------------------------------------
// Validation suite

struct ValidationConfig
{
  bool fault_self_weight = false;  // perturbs the FFT operator's self-voxel weight
  int born_grid = 48;
  bool include_convergence = true;
};

struct CheckResult
{
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

std::vector<std::string> ValidationCheckNames(const ValidationConfig &config = {});
std::vector<CheckResult> RunValidationSuite(const ValidationConfig &config,
                                            const std::vector<std::string> &only = {});
json ValidationToJson(const std::vector<CheckResult> &results);

}  // namespace metamat

#endif  // METAMAT_HARNESS_HPP
