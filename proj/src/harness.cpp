// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/harness.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <fmt/format.h>
#include "metamat/quadrature.hpp"

namespace metamat
{

// ---------------------------------------------------------------------------------------
// Oracles

namespace
{

struct SphBessel
{
  double j, jp;  // j_l and its derivative
  cplx h, hp;    // h_l^(1) and its derivative
};

SphBessel Radial(int l, double x)
{
  auto j = [](int n, double t) { return std::sph_bessel(n, t); };
  auto y = [](int n, double t) { return std::sph_neumann(n, t); };
  const double jl = j(l, x), yl = y(l, x);
  // z_l' = z_{l-1} - (l+1)/x z_l, and z_0' = -z_1.
  const double jd = l == 0 ? -j(1, x) : j(l - 1, x) - (l + 1.0) / x * jl;
  const double yd = l == 0 ? -y(1, x) : y(l - 1, x) - (l + 1.0) / x * yl;
  return {jl, jd, cplx(jl, yl), cplx(jd, yd)};
}

template <typename Coefficient>
cplx PartialWaveSum(double a, double k, const Vec3 &alpha, const Vec3 &beta, Coefficient coeff)
{
  const double ka = k * a;
  if (!(ka > 0.0) || ka >= 10.0)
  {
    throw ConfigError(fmt::format("partial-wave series needs 0 < ka < 10, got {}", ka));
  }
  const double mu = std::clamp(alpha.dot(beta), -1.0, 1.0);
  cplx sum = 0.0;
  int small = 0;
  for (int l = 0; l <= 200; l++)
  {
    const cplx c = coeff(l, Radial(l, ka));
    const cplx term = (2.0 * l + 1.0) * c * std::legendre(l, mu);
    if (!std::isfinite(term.real()) || !std::isfinite(term.imag()))
    {
      throw NumericalError(fmt::format("partial-wave series diverged at l = {}", l));
    }
    sum += term;
    // Legendre zeros can make single terms vanish; require two consecutive small ones.
    const double mag = std::abs((2.0 * l + 1.0) * c);
    small = (mag < 1e-14 * std::abs(sum) || mag == 0.0) ? small + 1 : 0;
    if (l >= 1 && small >= 2)
    {
      return -I * sum / k;
    }
  }
  throw NumericalError("partial-wave series did not converge within 200 terms");
}

}  // namespace

cplx ImpedanceSphereOracle(double a, cplx zeta, double k, const Vec3 &alpha, const Vec3 &beta)
{
  return PartialWaveSum(a, k, alpha, beta,
                        [&](int, const SphBessel &r)
                        { return -(k * r.jp - zeta * r.j) / (k * r.hp - zeta * r.h); });
}

cplx SoundSoftSphereAmplitude(double a, double k, const Vec3 &alpha, const Vec3 &beta)
{
  return PartialWaveSum(a, k, alpha, beta,
                        [](int, const SphBessel &r) { return -r.j / r.h; });
}

cplx BornOracle(cplx p, double R, double k, const Vec3 &alpha, const Vec3 &beta)
{
  const double q = k * (alpha - beta).norm();
  const double x = q * R;
  if (x < 1e-4)
  {
    return -p * R * R * R / 3.0 * (1.0 - x * x / 10.0);
  }
  return -p * (std::sin(x) - x * std::cos(x)) / (q * q * q);
}

cplx SelfVoxelWeightQuadrature(double k, double h)
{
  // int_{|y| <= R} e^{ik|y|} / (4 pi |y|) dy = int_0^R r e^{ikr} dr
  const double R = std::cbrt(3.0 / (4.0 * pi)) * h;
  const auto rule = GaussLegendre(32, 0.0, R);
  cplx s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); i++)
  {
    const double r = rule.nodes[i];
    s += rule.weights[i] * r * std::exp(I * (k * r));
  }
  return s;
}

CVector DenseLsMatvec(std::span<const cplx> u, const LSProblem &problem)
{
  const auto &grid = problem.grid;
  const std::size_t n = grid.Size();
  const cplx self = SelfVoxelWeightQuadrature(problem.k, grid.h);
  const double vol = grid.VoxelVolume();
  CVector out(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); i++)
  {
    const Vec3 xi = grid.Center(i);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; j++)
    {
      const cplx w = static_cast<std::size_t>(i) == j
                         ? self
                         : vol * std::exp(I * (problem.k * (xi - grid.Center(j)).norm())) /
                               (4.0 * pi * (xi - grid.Center(j)).norm());
      acc += w * problem.V[j] * u[j];
    }
    out[i] = u[i] - acc;
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Scenarios

namespace
{

double Number(const json &j, const char *key)
{
  const auto &v = j.at(key);
  if (!v.is_number())
  {
    throw ConfigError(fmt::format("scenario: \"{}\" must be a number", key));
  }
  return v.get<double>();
}

}  // namespace

Scenario ScenarioFromJson(const json &j, const std::filesystem::path &base_dir)
{
  RequireKnownKeys(j,
                   {"schema_version", "description", "domain", "n0sq", "nsq", "N", "h", "k",
                    "alpha", "kappa", "a", "a_sequence", "cube_side_coeff", "spacing_coeff",
                    "grid", "directions", "continuum_tol", "discrete_tol", "layout"},
                   "scenario");
  if (!j.contains("schema_version") || j["schema_version"] != 1)
  {
    throw ConfigError("scenario: schema_version must be 1");
  }
  Scenario sc;
  if (j.contains("domain"))
  {
    const auto &d = j["domain"];
    RequireKnownKeys(d, {"lower", "upper"}, "scenario.domain");
    sc.domain = BoxDomain(VecFromJson(d.at("lower")), VecFromJson(d.at("upper")));
  }
  if (j.contains("n0sq")) sc.n0sq = FieldFromJson(j["n0sq"], base_dir);
  if (j.contains("nsq")) sc.nsq = FieldFromJson(j["nsq"], base_dir);
  if (j.contains("N")) sc.N = FieldFromJson(j["N"], base_dir);
  if (j.contains("h")) sc.h = FieldFromJson(j["h"], base_dir);
  if (j.contains("k")) sc.k = Number(j, "k");
  if (j.contains("alpha")) sc.alpha = VecFromJson(j["alpha"]);
  if (j.contains("kappa")) sc.kappa = Number(j, "kappa");
  if (j.contains("cube_side_coeff")) sc.cube_side_coeff = Number(j, "cube_side_coeff");
  if (j.contains("spacing_coeff")) sc.spacing_coeff = Number(j, "spacing_coeff");
  if (j.contains("continuum_tol")) sc.continuum_tol = Number(j, "continuum_tol");
  if (j.contains("discrete_tol")) sc.discrete_tol = Number(j, "discrete_tol");
  if (j.contains("grid"))
  {
    if (!j["grid"].is_number_integer() || j["grid"].get<int>() < 1)
    {
      throw ConfigError("scenario: grid must be a positive integer");
    }
    sc.grid = j["grid"].get<int>();
  }
  if (j.contains("a") && j.contains("a_sequence"))
  {
    throw ConfigError("scenario: give either \"a\" or \"a_sequence\", not both");
  }
  if (j.contains("a"))
  {
    sc.a_sequence = {Number(j, "a")};
  }
  if (j.contains("a_sequence"))
  {
    if (!j["a_sequence"].is_array() || j["a_sequence"].empty())
    {
      throw ConfigError("scenario: a_sequence must be a nonempty array");
    }
    for (const auto &v : j["a_sequence"])
    {
      if (!v.is_number())
      {
        throw ConfigError("scenario: a_sequence entries must be numbers");
      }
      sc.a_sequence.push_back(v.get<double>());
    }
  }
  for (std::size_t i = 0; i < sc.a_sequence.size(); i++)
  {
    if (!(sc.a_sequence[i] > 0.0) || (i > 0 && !(sc.a_sequence[i] < sc.a_sequence[i - 1])))
    {
      throw ConfigError("scenario: a_sequence must be positive and strictly decreasing");
    }
    // Validates kappa and the disjointness of the lattice for every a.
    RecipeParams(sc.a_sequence[i], sc.kappa, sc.cube_side_coeff, sc.spacing_coeff);
  }
  if (!(sc.kappa > 0.0 && sc.kappa < 1.0))
  {
    throw ConfigError(fmt::format("scenario: kappa must lie in (0, 1), got {}", sc.kappa));
  }
  WaveContext check(sc.k, sc.alpha);
  sc.directions_name = "ico12";
  if (j.contains("directions"))
  {
    const auto &d = j["directions"];
    if (d.is_string())
    {
      sc.directions_name = d.get<std::string>();
    }
    else if (d.is_array())
    {
      sc.directions_name = "custom";
      for (const auto &v : d)
      {
        const Vec3 b = VecFromJson(v);
        if (std::abs(b.norm() - 1.0) > 1e-12)
        {
          throw ConfigError("scenario: directions must be unit vectors");
        }
        sc.directions.push_back(b);
      }
    }
    else
    {
      throw ConfigError("scenario: directions must be a set name or a list of vectors");
    }
  }
  if (sc.directions.empty())
  {
    sc.directions = QuadratureByName(sc.directions_name).nodes;
  }
  if (j.contains("layout"))
  {
    std::filesystem::path p = j["layout"].get<std::string>();
    sc.layout = p.is_relative() ? base_dir / p : p;
  }
  return sc;
}

Scenario LoadScenario(const std::filesystem::path &path)
{
  json j;
  try
  {
    j = json::parse(ReadFile(path));
  }
  catch (const json::parse_error &e)
  {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  try
  {
    return ScenarioFromJson(j, std::filesystem::absolute(path).parent_path());
  }
  catch (const json::exception &e)
  {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json ScenarioSummary(const Scenario &sc)
{
  json j;
  j["domain"] = {{"lower", VecToJson(sc.domain.lower)}, {"upper", VecToJson(sc.domain.upper)}};
  j["n0sq"] = FieldToJson(sc.n0sq);
  j["nsq"] = FieldToJson(sc.nsq);
  j["N"] = FieldToJson(sc.N);
  if (sc.h)
  {
    j["h"] = FieldToJson(*sc.h);
  }
  j["k"] = sc.k;
  j["alpha"] = VecToJson(sc.alpha);
  j["kappa"] = sc.kappa;
  j["a_sequence"] = sc.a_sequence;
  j["cube_side_coeff"] = sc.cube_side_coeff;
  j["spacing_coeff"] = sc.spacing_coeff;
  j["grid"] = sc.grid;
  j["directions"] = sc.directions_name;
  j["continuum_tol"] = sc.continuum_tol;
  j["discrete_tol"] = sc.discrete_tol;
  return j;
}

Scenario CanonicalScenario()
{
  Scenario sc;
  const double contrast = 0.05;  // n^2 - 1 inside the unit ball
  const double density = 2.0;    // N inside the ball
  sc.domain = BoxDomain(Vec3::Constant(-1.0), Vec3::Constant(1.0));
  sc.n0sq = FieldSpec::Constant(1.0);
  sc.nsq = FieldSpec::BallStep(Vec3::Zero(), 1.0, 1.0 + contrast, 1.0);
  sc.N = FieldSpec::BallStep(Vec3::Zero(), 1.0, density, 0.0);
  // 4 pi h N = p = -k^2 contrast inside; h is constant so that boundary cubes whose center
  // lies outside the ball still carry the interior impedance.
  sc.h = FieldSpec::Constant(-contrast / (4.0 * pi * density));
  sc.k = 1.0;
  sc.alpha = Vec3::UnitZ();
  sc.kappa = 0.5;
  sc.a_sequence = {0.04, 0.03, 0.02};
  sc.cube_side_coeff = 1.0;
  sc.spacing_coeff = 0.5;
  sc.grid = 48;
  sc.directions_name = "ico12";
  sc.directions = IcosahedralQuadrature(0).nodes;
  return sc;
}

DesignResult DesignScenario(const Scenario &sc, double a)
{
  const RecipeParams params(a, sc.kappa, sc.cube_side_coeff, sc.spacing_coeff);
  DesignResult out;
  out.p = ComputeContrast(sc.n0sq, sc.nsq, sc.k);
  const auto samples = LatticePoints(sc.domain, 17);
  out.no_contrast = std::all_of(samples.begin(), samples.end(),
                                [&](const Vec3 &x) { return out.p.Eval(x) == 0.0; });
  if (sc.h)
  {
    const double res = FactorizationResidual(out.p, sc.N, *sc.h, sc.domain);
    if (res > 1e-12)
    {
      throw DesignError(fmt::format("explicit h does not satisfy 4 pi h N = p (relative "
                                    "mismatch {:.3e})",
                                    res));
    }
    out.h = *sc.h;
  }
  else
  {
    out.h = FactorDesign(out.p, sc.N, sc.domain);
  }
  out.passivity = ValidatePassivity(sc.nsq, out.h, sc.n0sq, samples);
  Partition part = PartitionDomain(sc.domain, params);
  out.predicted_total = PredictedTotal(part, sc.N, params);
  if (out.no_contrast)
  {
    ParticleSystem ps = AssignImpedance({}, out.h, part, params);
    out.design = {std::move(part), std::move(ps)};
    return out;
  }
  const auto placement = PlaceParticles(part, sc.N, params);
  ParticleSystem ps = AssignImpedance(placement, out.h, part, params);
  out.design = {std::move(part), std::move(ps)};
  return out;
}

LSProblem ContinuumProblem(const Scenario &sc)
{
  const FieldSpec contrast = ComputeContrast(FieldSpec::Constant(1.0), sc.nsq, sc.k);
  return ScalarProblem(contrast, MakeGrid(sc.domain, sc.grid), sc.Context());
}

// ---------------------------------------------------------------------------------------
// Convergence study

bool ConvergenceReport::Monotone() const
{
  for (std::size_t i = 1; i < rows.size(); i++)
  {
    if (!(rows[i].sup_error < rows[i - 1].sup_error))
    {
      return false;
    }
  }
  return true;
}

std::vector<double> ConvergenceReport::EmpiricalRates() const
{
  std::vector<double> rates;
  for (std::size_t i = 1; i < rows.size(); i++)
  {
    rates.push_back(std::log(rows[i - 1].sup_error / rows[i].sup_error) /
                    std::log(rows[i - 1].a / rows[i].a));
  }
  return rates;
}

ConvergenceReport RunConvergence(const Scenario &sc)
{
  for (const auto &x : LatticePoints(sc.domain, 17))
  {
    if (sc.n0sq.Eval(x) != 1.0)
    {
      throw ConfigError("the discrete solver requires a vacuum background (n0^2 = 1)");
    }
  }
  if (sc.a_sequence.empty())
  {
    throw ConfigError("convergence study needs a nonempty a_sequence");
  }
  ConvergenceReport report;
  report.scenario = ScenarioSummary(sc);
  report.directions = sc.directions;

  const LSProblem problem = ContinuumProblem(sc);
  LsOptions lopts;
  lopts.tol = sc.continuum_tol;
  const ContinuumSolution ref = SolveLs(problem, lopts);
  report.reference_residual = ref.residual;
  report.reference_iterations = ref.iterations;
  double ref_scale = 0.0;
  for (const auto &b : sc.directions)
  {
    report.reference.push_back(AmplitudeContinuum(ref, problem, b));
    ref_scale = std::max(ref_scale, std::abs(report.reference.back()));
  }

  const WaveContext ctx = sc.Context();
  for (double a : sc.a_sequence)
  {
    const auto start = std::chrono::steady_clock::now();
    DesignResult design;
    try
    {
      design = DesignScenario(sc, a);
    }
    catch (const DesignError &e)
    {
      throw DesignError(fmt::format("a = {}: {}", a, e.what()));
    }
    const auto &ps = design.design.particles;
    DiscreteOptions dopts;
    dopts.iterative_tol = sc.discrete_tol;
    const DiscreteSolution sol = SolveEffectiveFields(ps, ctx, dopts);
    CVector amps;
    double sup = 0.0;
    for (std::size_t i = 0; i < sc.directions.size(); i++)
    {
      amps.push_back(AmplitudeDiscrete(sol, ps, sc.k, sc.directions[i]));
      sup = std::max(sup, std::abs(amps.back() - report.reference[i]));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back({a, ps.M(), ps.cube_count, ps.spacing, ps.cube_side,
                           design.predicted_total, sup,
                           sup / std::max(ref_scale, residual_floor), sol.method,
                           sol.iterations, seconds});
    report.discrete.push_back(std::move(amps));
  }
  return report;
}

json ReportToJson(const ConvergenceReport &report)
{
  json j;
  j["schema_version"] = 1;
  j["scenario"] = report.scenario;
  json ref = json::array();
  for (std::size_t i = 0; i < report.directions.size(); i++)
  {
    ref.push_back({{"beta", VecToJson(report.directions[i])},
                   {"A", ComplexToJson(report.reference[i])}});
  }
  j["reference"] = {{"residual", report.reference_residual},
                    {"iterations", report.reference_iterations},
                    {"amplitudes", ref}};
  json rows = json::array();
  for (std::size_t r = 0; r < report.rows.size(); r++)
  {
    const auto &row = report.rows[r];
    json amps = json::array();
    for (const auto &z : report.discrete[r])
    {
      amps.push_back(ComplexToJson(z));
    }
    rows.push_back({{"a", row.a},
                    {"M", row.M},
                    {"P", row.P},
                    {"d", row.spacing},
                    {"cube_side", row.cube_side},
                    {"predicted_M", row.predicted_M},
                    {"sup_error", row.sup_error},
                    {"relative_error", row.relative_error},
                    {"method", row.method},
                    {"iterations", row.iterations},
                    {"wall_time", row.wall_time},
                    {"amplitudes", amps}});
  }
  j["rows"] = rows;
  j["empirical_rates"] = report.EmpiricalRates();
  j["monotone"] = report.Monotone();
  return j;
}

std::string ReportToCsv(const ConvergenceReport &report)
{
  std::string out = "a,M,P,d,cube_side,predicted_M,sup_error,relative_error,method,iterations\n";
  for (const auto &r : report.rows)
  {
    out += fmt::format("{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", r.a,
                       r.M, r.P, r.spacing, r.cube_side, r.predicted_M, r.sup_error,
                       r.relative_error, r.method, r.iterations);
  }
  return out;
}

std::string AmplitudeCsv(const std::vector<Vec3> &directions, const CVector &values)
{
  std::string out = "beta_x,beta_y,beta_z,ReA,ImA\n";
  for (std::size_t i = 0; i < directions.size(); i++)
  {
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", directions[i].x(),
                       directions[i].y(), directions[i].z(), values[i].real(),
                       values[i].imag());
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Validation suite

namespace
{

// Deterministic, irregular test data (no RNG).
cplx Pattern(std::size_t i, double s)
{
  const double t = static_cast<double>(i);
  return {std::sin(1.3 * t + s) + 0.25 * std::cos(0.7 * t * t), 0.5 * std::cos(2.1 * t - s)};
}

double MaxRelDiff(std::span<const cplx> a, std::span<const cplx> b)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, residual_floor);
}

// Small irregular cluster inside the unit cube with spacing well above 2a.
ParticleSystem TestCluster(std::size_t m, double a, double kappa, bool complex_h)
{
  ParticleSystem ps;
  ps.a = a;
  ps.kappa = kappa;
  const int side = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(m))));
  const double pitch = 1.0 / side;
  for (std::size_t i = 0; ps.M() < m; i++)
  {
    const int x = static_cast<int>(i / (side * side)), y = static_cast<int>((i / side) % side),
              z = static_cast<int>(i % side);
    const Vec3 jitter = 0.2 * pitch * Vec3(std::sin(3.1 * i), std::cos(1.7 * i), std::sin(0.9 * i + 1));
    ps.centers.push_back(pitch * Vec3(x + 0.5, y + 0.5, z + 0.5) + jitter);
    const cplx h = complex_h ? cplx(-1.0 + 0.5 * std::sin(2.0 * i), -0.3 - 0.2 * std::cos(i))
                             : cplx(-1.0 - 0.5 * std::sin(2.0 * i), 0.0);
    ps.h_values.push_back(h);
    ps.zeta_values.push_back(h / std::pow(a, kappa));
  }
  return ps;
}

bool WithinUlp(double x, double target)
{
  return x == target || x == std::nextafter(target, x);
}

using Check = std::function<CheckResult()>;

CheckResult Verdict(std::string name, double value, double threshold, std::string detail = {})
{
  return {std::move(name), value <= threshold, value, threshold, std::move(detail), 0.0};
}

struct BornCase
{
  LSProblem problem;
  ContinuumSolution sol;
};

BornCase SolveBorn(int grid_n, double p, double tol)
{
  const BoxDomain box(Vec3::Constant(-1.0), Vec3::Constant(1.0));
  const FieldSpec pf = FieldSpec::BallStep(Vec3::Zero(), 1.0, p, 0.0);
  BornCase bc{ScalarProblem(pf, MakeGrid(box, grid_n), WaveContext(1.0, Vec3::UnitZ())), {}};
  LsOptions opts;
  opts.tol = tol;
  bc.sol = SolveLs(bc.problem, opts);
  return bc;
}

std::vector<std::pair<std::string, Check>> BuildChecks(const ValidationConfig &config)
{
  std::vector<std::pair<std::string, Check>> checks;
  auto add = [&](std::string name, Check c) { checks.emplace_back(std::move(name), std::move(c)); };

  add("em_c_limit", []
  {
    const double c_err = std::abs(EmCLimit(30.0, 0.5) - 1.0);
    const double m_err = std::abs(ProfileMoment() - 1.0 / 30.0);
    auto r = Verdict("em_c_limit", c_err, 1e-8, fmt::format("moment error {:.2e}", m_err));
    r.passed = r.passed && m_err <= 1e-10;
    return r;
  });

  add("self_weight_quadrature", []
  {
    const double k = 1.0;
    const double h = 0.1 / (k * std::cbrt(3.0 / (4.0 * pi)));  // k R_eq = 0.1
    const cplx closed = SelfVoxelWeight(k, h);
    const cplx quad = SelfVoxelWeightQuadrature(k, h);
    return Verdict("self_weight_quadrature", std::abs(closed - quad) / std::abs(quad), 1e-10);
  });

  add("fft_vs_dense", [fault = config.fault_self_weight]
  {
    const BoxDomain box(Vec3::Zero(), Vec3::Constant(1.0));
    const VoxelGrid grid = MakeGrid(box, 8);
    LSProblem prob{grid, 2.0, CVector(grid.Size()), CVector(grid.Size())};
    for (std::size_t i = 0; i < grid.Size(); i++)
    {
      prob.V[i] = Pattern(i, 0.3);
      prob.u0[i] = Pattern(i, 1.1);
    }
    LsOptions opts;
    if (fault)
    {
      opts.self_weight_scale = 1.01;
    }
    const CVector fast = LsMatvec(prob.u0, prob, opts);
    const CVector dense = DenseLsMatvec(prob.u0, prob);
    return Verdict("fft_vs_dense", MaxRelDiff(fast, dense), 1e-12,
                   fault ? "self-voxel weight perturbed by 1%" : "");
  });

  add("identity", []
  {
    Scenario sc;
    sc.domain = BoxDomain(Vec3::Constant(-1.0), Vec3::Constant(1.0));
    sc.grid = 16;
    const LSProblem prob = ContinuumProblem(sc);
    const ContinuumSolution sol = SolveLs(prob);
    double amax = 0.0;
    for (const auto &b : IcosahedralQuadrature(0).nodes)
    {
      amax = std::max(amax, std::abs(AmplitudeContinuum(sol, prob, b)));
    }
    ParticleSystem ps = TestCluster(27, 0.01, 0.5, false);
    std::fill(ps.h_values.begin(), ps.h_values.end(), cplx(0.0));
    const WaveContext ctx(1.0, Vec3::UnitZ());
    const DiscreteSolution dsol = SolveEffectiveFields(ps, ctx);
    bool exact = sol.psi == prob.u0 && sol.iterations == 0;
    for (std::size_t j = 0; j < ps.M(); j++)
    {
      exact = exact && dsol.u[j] == ctx.incident(ps.centers[j]);
    }
    auto r = Verdict("identity", amax, 1e-12,
                     exact ? "psi = u0 and u_j = u0(x_j) exactly" : "identity broken");
    r.passed = r.passed && exact;
    return r;
  });

  add("born_agreement", [n = config.born_grid]
  {
    const BornCase bc = SolveBorn(n, 0.01, 1e-8);
    double worst = 0.0;
    for (const auto &b : IcosahedralQuadrature(0).nodes)
    {
      const cplx ref = BornOracle(0.01, 1.0, 1.0, Vec3::UnitZ(), b);
      worst = std::max(worst, std::abs(AmplitudeContinuum(bc.sol, bc.problem, b) - ref) / std::abs(ref));
    }
    return Verdict("born_agreement", worst, 0.02, fmt::format("grid {}", n));
  });

  add("optical_theorem", [n = config.born_grid]
  {
    const BornCase bc = SolveBorn(n, 0.01, 1e-8);
    const auto quad = IcosahedralQuadrature(2);
    const AmplitudeFn A = [&](const Vec3 &b) { return AmplitudeContinuum(bc.sol, bc.problem, b); };
    return Verdict("optical_theorem", OpticalTheoremResidual(A, Vec3::UnitZ(), 1.0, quad), 0.01,
                   fmt::format("{} directions", quad.Size()));
  });

  add("absorption_sign", []
  {
    const BoxDomain box(Vec3::Constant(-1.0), Vec3::Constant(1.0));
    const FieldSpec p = FieldSpec::BallStep(Vec3::Zero(), 1.0, cplx(0.05, -0.05), 0.0);
    const LSProblem prob = ScalarProblem(p, MakeGrid(box, 16), WaveContext(1.0, Vec3::UnitZ()));
    const ContinuumSolution sol = SolveLs(prob);
    const AmplitudeFn A = [&](const Vec3 &b) { return AmplitudeContinuum(sol, prob, b); };
    const double defect = OpticalTheoremDefect(A, Vec3::UnitZ(), 1.0, IcosahedralQuadrature(2));
    auto r = Verdict("absorption_sign", -defect, 0.0, "Im p < 0 must absorb");
    r.passed = defect > 0.0;
    return r;
  });

  add("reciprocity_continuum", []
  {
    const BoxDomain box(Vec3::Constant(-1.0), Vec3::Constant(1.0));
    const FieldSpec p = FieldSpec::Sum(
        {FieldSpec::BallStep(Vec3(0.2, -0.1, 0.1), 0.6, cplx(-0.8, -0.2), 0.0),
         FieldSpec::RadialBump(Vec3(-0.3, 0.3, 0.0), 0.5, cplx(0.5, 0.0), 2)});
    const VoxelGrid grid = MakeGrid(box, 16);
    const double tol = 1e-10;
    const ScatteringFn solve = [&](const Vec3 &beta, const Vec3 &alpha)
    {
      const LSProblem prob = ScalarProblem(p, grid, WaveContext(1.5, alpha));
      LsOptions opts;
      opts.tol = tol;
      return AmplitudeContinuum(SolveLs(prob, opts), prob, beta);
    };
    const Vec3 alpha = Vec3(1, 2, 2).normalized(), beta = Vec3(-2, 1, 0.5).normalized();
    return Verdict("reciprocity_continuum", ReciprocityResidual(solve, alpha, beta), 10.0 * tol);
  });

  add("reciprocity_discrete", []
  {
    const ParticleSystem ps = TestCluster(64, 0.01, 0.5, true);
    const double tol = 1e-10;
    const ScatteringFn solve = [&](const Vec3 &beta, const Vec3 &alpha)
    {
      const WaveContext ctx(2.0, alpha);
      return AmplitudeDiscrete(SolveEffectiveFields(ps, ctx), ps, ctx.k, beta);
    };
    const Vec3 alpha = Vec3(0, 1, 1).normalized(), beta = Vec3(1, -1, 0.3).normalized();
    return Verdict("reciprocity_discrete", ReciprocityResidual(solve, alpha, beta), 10.0 * tol);
  });

  add("dense_vs_iterative", []
  {
    ParticleSystem ps = TestCluster(343, 0.002, 0.5, true);
    const WaveContext ctx(3.0, Vec3(1, 0, 1).normalized());
    DiscreteOptions direct, iterative;
    direct.method = DiscreteMethod::Direct;
    iterative.method = DiscreteMethod::Iterative;
    iterative.iterative_tol = 1e-13;
    const auto a = SolveEffectiveFields(ps, ctx, direct);
    const auto b = SolveEffectiveFields(ps, ctx, iterative);
    return Verdict("dense_vs_iterative", MaxRelDiff(b.u, a.u), 1e-8,
                   fmt::format("M = {}, {} GMRES iterations", ps.M(), b.iterations));
  });

  add("single_particle_oracle", []
  {
    const double kappa = 0.5, k = 1.0;
    const WaveContext ctx(k, Vec3::UnitZ());
    std::vector<double> errs;
    for (double a : {0.02, 0.01, 0.005})
    {
      ParticleSystem ps;
      ps.a = a;
      ps.kappa = kappa;
      ps.centers = {Vec3::Zero()};
      ps.h_values = {1.0};
      ps.zeta_values = {1.0 / std::pow(a, kappa)};
      const auto sol = SolveEffectiveFields(ps, ctx);
      const Vec3 beta = Vec3(1, 1, 0).normalized();
      const cplx disc = AmplitudeDiscrete(sol, ps, k, beta);
      const cplx exact = ImpedanceSphereOracle(a, ps.zeta_values[0], k, ctx.alpha, beta);
      errs.push_back(std::abs(disc - exact) / std::abs(exact));
    }
    const bool monotone = errs[1] < errs[0] && errs[2] < errs[1];
    auto r = Verdict("single_particle_oracle", errs[2], 1.0,
                     fmt::format("relative errors {:.4f}, {:.4f}, {:.4f}", errs[0], errs[1], errs[2]));
    r.passed = monotone;
    return r;
  });

  add("sound_soft_limit", []
  {
    const double a = 0.5, k = 1.0;
    double worst = 0.0;
    for (const auto &b : IcosahedralQuadrature(0).nodes)
    {
      const cplx robin = ImpedanceSphereOracle(a, 1e6 / a, k, Vec3::UnitZ(), b);
      const cplx soft = SoundSoftSphereAmplitude(a, k, Vec3::UnitZ(), b);
      worst = std::max(worst, std::abs(robin - soft) / std::abs(soft));
    }
    return Verdict("sound_soft_limit", worst, 1e-3);
  });

  add("recipe_laws", []
  {
    const BoxDomain box(Vec3::Zero(), Vec3::Constant(1.0));
    const FieldSpec N = FieldSpec::Constant(1.0);
    const FieldSpec h = FieldSpec::RadialBump(Vec3::Constant(0.5), 0.9, cplx(2.0, -3.0), 1);
    double worst = 0.0;
    std::string detail;
    bool ok = true;
    for (auto [a, kappa] : {std::pair{0.01, 0.5}, std::pair{0.02, 0.3}})
    {
      const RecipeParams params(a, kappa, 1.0, 0.8);
      const Partition part = PartitionDomain(box, params);
      const Placement place = PlaceParticles(part, N, params);
      const ParticleSystem ps = AssignImpedance(place, h, part, params);
      const double predicted = PredictedTotal(part, N, params);
      const double miss = std::abs(static_cast<double>(ps.M()) - predicted);
      const double spacing = MinPairDistance(ps.centers);
      const double scale = std::pow(a, kappa);
      bool per_cube = true, within_ulp = true;
      std::size_t exact = 0;
      for (std::size_t m = 0; m < ps.M(); m++)
      {
        const cplx hp = h.Eval(part.cubes[place.owner[m]].Center());
        const cplx back = ps.zeta_values[m] * scale;
        per_cube = per_cube && ps.h_values[m] == hp && ps.zeta_values[m] == ImpedanceFromH(hp, scale);
        within_ulp = within_ulp && WithinUlp(back.real(), hp.real()) && WithinUlp(back.imag(), hp.imag());
        exact += back == hp;
      }
      ok = ok && miss <= part.P() && spacing >= params.Spacing() - 1e-12 && per_cube && within_ulp;
      worst = std::max(worst, miss / part.P());
      detail += fmt::format("a={} kappa={}: M={} predicted={:.2f} P={} min spacing={:.6f} d={:.6f} "
                            "zeta a^kappa == h for {}/{}; ",
                            a, kappa, ps.M(), predicted, part.P(), spacing, params.Spacing(),
                            exact, ps.M());
    }
    auto r = Verdict("recipe_laws", worst, 1.0, detail);
    r.passed = ok;
    return r;
  });

  add("em_decoupling", []
  {
    const BoxDomain box(Vec3::Constant(-1.0), Vec3::Constant(1.0));
    const FieldSpec C = FieldSpec::RadialBump(Vec3::Zero(), 0.9, cplx(0.3, 0.05), 2);
    const VoxelGrid grid = MakeGrid(box, 12);
    const WaveContext ctx(1.0, Vec3::UnitZ());
    const Eigen::Vector3cd pol(cplx(1.0, 0.0), cplx(0.0, 0.5), 0.0);
    const auto vec = EmEffectiveSolve(C, grid, ctx, pol);
    bool identical = true;
    for (int c = 0; c < 3; c++)
    {
      const auto single = SolveLs(EmComponentProblem(C, grid, ctx, pol[c]));
      identical = identical && single.psi == vec[c].psi;
    }
    auto r = Verdict("em_decoupling", identical ? 0.0 : 1.0, 0.0);
    return r;
  });

  if (config.include_convergence)
  {
    add("convergence", []
    {
      const auto report = RunConvergence(CanonicalScenario());
      std::string detail;
      for (const auto &row : report.rows)
      {
        detail += fmt::format("a={} M={} err={:.4e}; ", row.a, row.M, row.sup_error);
      }
      auto r = Verdict("convergence", report.rows.back().sup_error, report.rows.front().sup_error, detail);
      r.passed = report.Monotone();
      return r;
    });
  }
  return checks;
}

}  // namespace

std::vector<std::string> ValidationCheckNames(const ValidationConfig &config)
{
  std::vector<std::string> names;
  for (const auto &[name, check] : BuildChecks(config))
  {
    names.push_back(name);
  }
  return names;
}

std::vector<CheckResult> RunValidationSuite(const ValidationConfig &config,
                                            const std::vector<std::string> &only)
{
  std::vector<CheckResult> results;
  for (const auto &[name, check] : BuildChecks(config))
  {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end())
    {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try
    {
      r = check();
    }
    catch (const std::exception &e)
    {
      r = {name, false, 0.0, 0.0, fmt::format("exception: {}", e.what()), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  }
  return results;
}

json ValidationToJson(const std::vector<CheckResult> &results)
{
  json checks = json::array();
  bool all = true;
  double total = 0.0;
  for (const auto &r : results)
  {
    checks.push_back({{"name", r.name},
                      {"passed", r.passed},
                      {"value", r.value},
                      {"threshold", r.threshold},
                      {"detail", r.detail},
                      {"seconds", r.seconds}});
    all = all && r.passed;
    total += r.seconds;
  }
  return {{"schema_version", 1}, {"passed", all}, {"seconds", total}, {"checks", checks}};
}

}  // namespace metamat
