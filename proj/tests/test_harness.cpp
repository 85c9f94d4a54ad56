// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "metamat/harness.hpp"

using namespace metamat;
using boost::math::quadrature::gauss_kronrod;

namespace
{

json Shape(const json &j)
{
  if (j.is_object())
  {
    json out = json::object();
    for (const auto &[key, value] : j.items())
    {
      out[key] = Shape(value);
    }
    return out;
  }
  if (j.is_array())
  {
    return j.empty() ? json::array() : json::array({Shape(j.front())});
  }
  if (j.is_number())
  {
    return "number";
  }
  if (j.is_boolean())
  {
    return "boolean";
  }
  return "string";
}

json TinyScenarioJson()
{
  return json::parse(R"({
    "schema_version": 1,
    "domain": {"lower": [-1, -1, -1], "upper": [1, 1, 1]},
    "nsq": {"type": "ball_step", "center": [0, 0, 0], "radius": 0.8, "inside": 1.1, "outside": 1},
    "N": {"type": "ball_step", "center": [0, 0, 0], "radius": 0.8, "inside": 1, "outside": 0},
    "h": {"type": "constant", "value": -0.00795774715459477},
    "kappa": 0.5,
    "a_sequence": [0.08, 0.05],
    "spacing_coeff": 0.6,
    "grid": 16,
    "directions": "ico12"
  })");
}

}  // namespace

TEST_CASE("impedance sphere oracle in the small-sphere regime")
{
  // Only the monopole survives as ka -> 0: c_0 from closed-form j_0 and h_0.
  const double k = 1.0, a = 1e-3;
  const cplx zeta(50.0, -3.0);
  const double x = k * a;
  const double j0 = std::sin(x) / x, j0p = std::cos(x) / x - std::sin(x) / (x * x);
  const cplx h0 = cplx(0, -1) * std::exp(cplx(0, x)) / x;
  const cplx h0p = std::exp(cplx(0, x)) * (1.0 / x + cplx(0, 1) / (x * x));
  const cplx c0 = -(k * j0p - zeta * j0) / (k * h0p - zeta * h0);
  const cplx mono = cplx(0, -1) * c0 / k;
  const cplx A = ImpedanceSphereOracle(a, zeta, k, Vec3::UnitZ(), Vec3::UnitX());
  CHECK(std::abs(A - mono) / std::abs(mono) < 1e-5);
  // Leading order: -zeta a^2 / (1 + zeta a).
  CHECK(std::abs(A + zeta * a * a / (1.0 + zeta * a)) / std::abs(A) < 1e-3);
  CHECK_THROWS_AS(ImpedanceSphereOracle(20.0, zeta, 1.0, Vec3::UnitZ(), Vec3::UnitX()), ConfigError);
}

TEST_CASE("sphere oracles conserve energy and are reciprocal")
{
  const double k = 1.0, a = 1.2;
  const auto quad = IcosahedralQuadrature(2);
  for (const cplx zeta : {cplx(0.0), cplx(2.5), cplx(1e7)})
  {
    const AmplitudeFn A = [&](const Vec3 &b)
    { return ImpedanceSphereOracle(a, zeta, k, Vec3::UnitZ(), b); };
    CHECK(OpticalTheoremResidual(A, Vec3::UnitZ(), k, quad) < 1e-6);
  }
  const AmplitudeFn lossy = [&](const Vec3 &b)
  { return ImpedanceSphereOracle(a, cplx(2.0, -1.0), k, Vec3::UnitZ(), b); };
  CHECK(OpticalTheoremDefect(lossy, Vec3::UnitZ(), k, quad) > 0.0);

  const AmplitudeFn soft = [&](const Vec3 &b) { return SoundSoftSphereAmplitude(a, k, Vec3::UnitZ(), b); };
  CHECK(OpticalTheoremResidual(soft, Vec3::UnitZ(), k, quad) < 1e-6);
}

TEST_CASE("Born oracle equals the Fourier integral of the ball")
{
  const double R = 1.0, k = 2.0;
  const cplx p(0.3, -0.1);
  for (double qR : {1e-6, 0.5, pi, 3.7})
  {
    const double q = qR / R;
    // beta chosen so that k |alpha - beta| = q
    const double cos_t = 1.0 - q * q / (2.0 * k * k);
    const Vec3 beta(std::sqrt(1.0 - cos_t * cos_t), 0.0, cos_t);
    const double radial = gauss_kronrod<double, 61>::integrate(
        [&](double r) { return r * r * std::sin(q * r) / (q * r); }, 0.0, R, 15, 1e-15);
    const cplx expect = -p * radial;
    CHECK(std::abs(BornOracle(p, R, k, Vec3::UnitZ(), beta) - expect) / std::abs(expect) < 1e-10);
  }
}

TEST_CASE("dense reference operator matches the FFT operator")
{
  const VoxelGrid grid = MakeGrid(BoxDomain(Vec3::Zero(), Vec3::Ones()), 6);
  LSProblem prob{grid, 1.7, CVector(grid.Size()), CVector(grid.Size())};
  for (std::size_t i = 0; i < grid.Size(); i++)
  {
    prob.V[i] = cplx(0.5 + 0.1 * std::sin(double(i)), 0.05);
    prob.u0[i] = std::exp(cplx(0, 0.3 * i));
  }
  const auto a = DenseLsMatvec(prob.u0, prob);
  const auto b = LsMatvec(prob.u0, prob);
  for (std::size_t i = 0; i < grid.Size(); i++)
  {
    CHECK(std::abs(a[i] - b[i]) < 1e-13);
  }
}

TEST_CASE("scenario parsing is strict")
{
  const Scenario sc = ScenarioFromJson(TinyScenarioJson());
  CHECK(sc.a_sequence == std::vector<double>{0.08, 0.05});
  CHECK(sc.directions.size() == 12);
  CHECK(sc.h.has_value());

  auto bad = TinyScenarioJson();
  bad["kappaa"] = 0.5;
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
  bad = TinyScenarioJson();
  bad["kappa"] = 1.5;
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
  bad = TinyScenarioJson();
  bad.erase("schema_version");
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
  bad = TinyScenarioJson();
  bad["a_sequence"] = {0.05, 0.08};
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
  bad = TinyScenarioJson();
  bad["alpha"] = {1, 1, 0};
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
  bad = TinyScenarioJson();
  bad["directions"] = "hexagon";
  CHECK_THROWS_AS(ScenarioFromJson(bad), ConfigError);
}

TEST_CASE("shipped scenario files parse")
{
  for (const auto &entry : std::filesystem::directory_iterator(METAMAT_SCENARIO_DIR))
  {
    if (entry.path().extension() == ".json")
    {
      CAPTURE(entry.path().string());
      CHECK_NOTHROW(LoadScenario(entry.path()));
    }
  }
}

TEST_CASE("design of a contrast-free scenario is empty")
{
  Scenario sc = ScenarioFromJson(TinyScenarioJson());
  sc.nsq = FieldSpec::Constant(1.0);
  sc.h = FieldSpec::Constant(0.0);
  const auto d = DesignScenario(sc, 0.05);
  CHECK(d.no_contrast);
  CHECK(d.design.particles.M() == 0);
  CHECK(d.predicted_total > 0.0);
}

TEST_CASE("explicit h must factor the contrast")
{
  Scenario sc = ScenarioFromJson(TinyScenarioJson());
  sc.h = FieldSpec::Constant(-1.0);
  CHECK_THROWS_AS(DesignScenario(sc, 0.05), DesignError);
  sc.h.reset();
  const auto d = DesignScenario(sc, 0.05);
  CHECK(std::abs(d.h.Eval(Vec3::Zero()) - cplx(-0.1 / (4.0 * pi), 0.0)) < 1e-15);
}

TEST_CASE("convergence report layout matches the golden shape")
{
  const Scenario sc = ScenarioFromJson(TinyScenarioJson());
  const auto report = RunConvergence(sc);
  REQUIRE(report.rows.size() == 2);
  for (const auto &row : report.rows)
  {
    CHECK(std::abs(static_cast<double>(row.M) - row.predicted_M) <= row.P);
    CHECK(row.sup_error < 0.2 * std::abs(report.reference[0]));
  }
  const json j = ReportToJson(report);
  const json golden = json::parse(ReadFile(fs::path(METAMAT_GOLDEN_DIR) / "convergence_report_shape.json"));
  CHECK(Shape(j).dump() == golden.dump());

  const std::string csv = ReportToCsv(report);
  CHECK(csv.rfind("a,M,P,d,cube_side,predicted_M,sup_error,relative_error,method,iterations\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(ReportToCsv(RunConvergence(sc)) == csv);
}

TEST_CASE("convergence study needs a vacuum background")
{
  Scenario sc = ScenarioFromJson(TinyScenarioJson());
  sc.n0sq = FieldSpec::Constant(1.2);
  CHECK_THROWS_AS(RunConvergence(sc), ConfigError);
}

TEST_CASE("validation suite")
{
  ValidationConfig config;
  config.include_convergence = false;
  const auto names = ValidationCheckNames(config);
  CHECK(std::find(names.begin(), names.end(), "fft_vs_dense") != names.end());
  CHECK(std::find(names.begin(), names.end(), "convergence") == names.end());

  const auto ok = RunValidationSuite(config, {"fft_vs_dense", "em_c_limit"});
  REQUIRE(ok.size() == 2);
  CHECK(ok[0].passed);
  CHECK(ok[1].passed);

  config.fault_self_weight = true;
  const auto bad = RunValidationSuite(config, {"fft_vs_dense"});
  CHECK_FALSE(bad[0].passed);
  const json j = ValidationToJson(bad);
  CHECK(j["passed"] == false);
}

TEST_CASE("canonical scenario file matches the built-in scenario")
{
  const Scenario file = LoadScenario(fs::path(METAMAT_SCENARIO_DIR) / "canonical.json");
  CHECK(ScenarioSummary(file).dump() == ScenarioSummary(CanonicalScenario()).dump());
}
