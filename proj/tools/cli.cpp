// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <omp.h>
#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <optional>
#include <fmt/format.h>
#include "metamat/harness.hpp"

namespace metamat
{
namespace
{

struct Options
{
  std::string config;
  std::string out = ".";
  bool out_given = false;
  int threads = 0;
  std::optional<double> tol;
  bool seedless = false;

  // validate
  bool list = false;
  bool fault_self_weight = false;
  bool skip_convergence = false;
  std::vector<std::string> only;

  // em-c
  double gamma_re = 30.0;
  double gamma_im = 0.0;
  double kappa = 0.5;
};

Scenario Load(const Options &opt)
{
  Scenario sc = opt.config.empty() ? CanonicalScenario() : LoadScenario(opt.config);
  if (opt.tol)
  {
    if (!(*opt.tol > 0.0 && *opt.tol < 1.0))
    {
      throw ConfigError(fmt::format("--tol must lie in (0, 1), got {}", *opt.tol));
    }
    sc.continuum_tol = *opt.tol;
    sc.discrete_tol = *opt.tol;
  }
  if (sc.layout && !std::filesystem::exists(*sc.layout))
  {
    throw ConfigError(fmt::format("layout file not found: {}", sc.layout->string()));
  }
  return sc;
}

fs::path OutDir(const Options &opt)
{
  fs::path dir = opt.out;
  fs::create_directories(dir);
  return dir;
}

double FirstRadius(const Scenario &sc)
{
  if (sc.a_sequence.empty())
  {
    throw ConfigError("scenario needs \"a\" or \"a_sequence\" for this command");
  }
  return sc.a_sequence.front();
}

void WriteJson(const fs::path &path, const json &j) { WriteFileAtomic(path, j.dump(2) + "\n"); }

int CmdDesign(const Options &opt, std::ostream &out)
{
  const Scenario sc = Load(opt);
  const double a = FirstRadius(sc);
  const DesignResult res = DesignScenario(sc, a);
  const auto &ps = res.design.particles;
  const fs::path dir = OutDir(opt);
  WriteLayout(dir / "layout.jsonl", ps);

  json passivity = json::array();
  for (const auto &v : res.passivity)
  {
    passivity.push_back({{"x", VecToJson(v.x)}, {"kind", v.kind}, {"imag", v.imag}});
  }
  json summary = {{"schema_version", 1},
                  {"a", a},
                  {"kappa", sc.kappa},
                  {"P", res.design.partition.P()},
                  {"M", ps.M()},
                  {"predicted_M", res.predicted_total},
                  {"d", ps.spacing},
                  {"cube_side", ps.cube_side},
                  {"passive", res.passivity.empty()},
                  {"passivity", passivity}};
  if (res.no_contrast)
  {
    summary["note"] = "no contrast";
  }
  WriteJson(dir / "design.json", summary);
  out << fmt::format("design: a={} P={} M={} predicted={:.1f} d={:.6g} b={:.6g}{}\n", a,
                     res.design.partition.P(), ps.M(), res.predicted_total, ps.spacing,
                     ps.cube_side, res.no_contrast ? " (no contrast)" : "");
  for (const auto &v : res.passivity)
  {
    out << fmt::format("warning: {} at ({:.3f}, {:.3f}, {:.3f}), imaginary part {:.3e}\n",
                       v.kind, v.x.x(), v.x.y(), v.x.z(), v.imag);
  }
  return kExitOk;
}

int CmdSolveDiscrete(const Options &opt, std::ostream &out)
{
  const Scenario sc = Load(opt);
  const ParticleSystem ps =
      sc.layout ? ReadLayout(*sc.layout) : DesignScenario(sc, FirstRadius(sc)).design.particles;
  DiscreteOptions dopts;
  dopts.iterative_tol = sc.discrete_tol;
  const DiscreteSolution sol = SolveEffectiveFields(ps, sc.Context(), dopts);
  CVector amps;
  for (const auto &b : sc.directions)
  {
    amps.push_back(AmplitudeDiscrete(sol, ps, sc.k, b));
  }
  const fs::path dir = OutDir(opt);
  WriteComplexArray(dir / "effective_field.bin", sol.u);
  WriteFileAtomic(dir / "amplitudes.csv", AmplitudeCsv(sc.directions, amps));
  WriteJson(dir / "discrete.json", {{"schema_version", 1},
                                    {"M", ps.M()},
                                    {"method", sol.method},
                                    {"iterations", sol.iterations},
                                    {"residual", sol.residual},
                                    {"residual_history", sol.history}});
  out << fmt::format("solve-discrete: M={} method={} iterations={} residual={:.3e}\n", ps.M(),
                     sol.method, sol.iterations, sol.residual);
  return kExitOk;
}

int CmdSolveContinuum(const Options &opt, std::ostream &out, std::ostream &err)
{
  const Scenario sc = Load(opt);
  const LSProblem problem = ContinuumProblem(sc);
  if (!problem.grid.SamplingOk(sc.k))
  {
    err << fmt::format("warning: voxel size {:.4g} exceeds a wavelength / 8\n", problem.grid.h);
  }
  LsOptions lopts;
  lopts.tol = sc.continuum_tol;
  const ContinuumSolution sol = SolveLs(problem, lopts);
  CVector amps;
  for (const auto &b : sc.directions)
  {
    amps.push_back(AmplitudeContinuum(sol, problem, b));
  }
  const fs::path dir = OutDir(opt);
  WriteComplexArray(dir / "psi.bin", sol.psi);
  WriteFileAtomic(dir / "amplitudes.csv", AmplitudeCsv(sc.directions, amps));
  WriteJson(dir / "continuum.json",
            {{"schema_version", 1},
             {"grid", {problem.grid.n[0], problem.grid.n[1], problem.grid.n[2]}},
             {"voxel", problem.grid.h},
             {"origin", VecToJson(problem.grid.origin)},
             {"iterations", sol.iterations},
             {"residual", sol.residual},
             {"residual_history", sol.history}});
  out << fmt::format("solve-continuum: grid={} iterations={} residual={:.3e}\n", sc.grid,
                     sol.iterations, sol.residual);
  return kExitOk;
}

int CmdConverge(const Options &opt, std::ostream &out)
{
  const Scenario sc = Load(opt);
  const ConvergenceReport report = RunConvergence(sc);
  const fs::path dir = OutDir(opt);
  WriteJson(dir / "convergence.json", ReportToJson(report));
  WriteFileAtomic(dir / "convergence.csv", ReportToCsv(report));
  for (const auto &r : report.rows)
  {
    out << fmt::format("a={:<8} M={:<7} P={:<6} sup|A_M - A|={:.6e} rel={:.4e} ({}, {:.1f} s)\n",
                       r.a, r.M, r.P, r.sup_error, r.relative_error, r.method, r.wall_time);
  }
  out << fmt::format("monotone decrease: {}\n", report.Monotone() ? "yes" : "no");
  return kExitOk;
}

int CmdValidate(const Options &opt, std::ostream &out, std::ostream &err)
{
  ValidationConfig config;
  config.fault_self_weight = opt.fault_self_weight;
  config.include_convergence = !opt.skip_convergence;
  const auto names = ValidationCheckNames(config);
  if (opt.list)
  {
    for (const auto &n : names)
    {
      out << n << "\n";
    }
    return kExitOk;
  }
  for (const auto &n : opt.only)
  {
    if (std::find(names.begin(), names.end(), n) == names.end())
    {
      throw ConfigError(fmt::format("unknown check \"{}\"", n));
    }
  }
  const auto results = RunValidationSuite(config, opt.only);
  bool all = true;
  for (const auto &r : results)
  {
    out << fmt::format("{} {} value={:.4e} threshold={:.4e} ({:.2f} s) {}\n",
                       r.passed ? "PASS" : "FAIL", r.name, r.value, r.threshold, r.seconds,
                       r.detail);
    all = all && r.passed;
  }
  if (opt.out_given)
  {
    WriteJson(OutDir(opt) / "validation.json", ValidationToJson(results));
  }
  if (!all)
  {
    err << "validation failed\n";
  }
  return all ? kExitOk : kExitCheckFailed;
}

int CmdEmC(const Options &opt, std::ostream &out)
{
  const cplx c = EmCLimit(cplx(opt.gamma_re, opt.gamma_im), opt.kappa);
  if (opt.gamma_im == 0.0)
  {
    out << fmt::format("c = {:.12f}\n", c.real());
  }
  else
  {
    out << fmt::format("c = {:.12f} {:+.12f}i\n", c.real(), c.imag());
  }
  return kExitOk;
}

void WriteHistory(const Options &opt, const NumericalError &e, std::ostream &err)
{
  try
  {
    const fs::path path = OutDir(opt) / "residual_history.json";
    WriteJson(path, {{"error", e.what()}, {"residual_history", e.residual_history}});
    err << fmt::format("residual history written to {}\n", path.string());
  }
  catch (const std::exception &io)
  {
    err << fmt::format("could not write residual history: {}\n", io.what());
  }
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Synthesis of materials with a prescribed refraction coefficient by embedding "
               "small impedance particles"};
  app.name("metamat");
  app.fallthrough();
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "Scenario JSON (defaults to the canonical scenario)")
      ->check(CLI::ExistingFile);
  auto *out_opt = app.add_option("--out", opt.out, "Output directory");
  app.add_option("--threads", opt.threads, "Worker threads (0 keeps the OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--tol", opt.tol, "Overrides both solver tolerances");
  app.add_flag("--seedless", opt.seedless, "Accepted for compatibility; all runs are deterministic");

  auto *design = app.add_subcommand("design", "Run the recipe and write a particle layout");
  auto *disc = app.add_subcommand("solve-discrete", "Solve the Foldy-Lax system");
  auto *cont = app.add_subcommand("solve-continuum", "Solve the Lippmann-Schwinger equation");
  auto *conv = app.add_subcommand("converge", "Discrete vs continuum amplitude study");
  auto *val = app.add_subcommand("validate", "Run the built-in validation suite");
  val->add_flag("--list", opt.list, "Print check names without running them");
  val->add_flag("--fault-self-weight", opt.fault_self_weight,
                "Perturb the self-voxel weight of the FFT operator");
  val->add_flag("--skip-convergence", opt.skip_convergence, "Omit the convergence study");
  val->add_option("--only", opt.only, "Run only the named checks");
  auto *emc = app.add_subcommand("em-c", "Limit of the electromagnetic coefficient c(gamma, kappa)");
  emc->add_option("--gamma", opt.gamma_re, "Real part of gamma");
  emc->add_option("--gamma-imag", opt.gamma_im, "Imaginary part of gamma");
  emc->add_option("--kappa", opt.kappa, "Exponent kappa in (0, 1)");

  try
  {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  opt.out_given = out_opt->count() > 0;
  if (opt.threads > 0)
  {
    omp_set_num_threads(opt.threads);
  }

  try
  {
    if (design->parsed()) return CmdDesign(opt, out);
    if (disc->parsed()) return CmdSolveDiscrete(opt, out);
    if (cont->parsed()) return CmdSolveContinuum(opt, out, err);
    if (conv->parsed()) return CmdConverge(opt, out);
    if (val->parsed()) return CmdValidate(opt, out, err);
    if (emc->parsed()) return CmdEmC(opt, out);
  }
  catch (const NumericalError &e)
  {
    err << fmt::format("numerical failure: {}\n", e.what());
    WriteHistory(opt, e, err);
    return kExitNumerical;
  }
  catch (const ConfigError &e)
  {
    err << fmt::format("config error: {}\n", e.what());
    return kExitConfig;
  }
  catch (const DesignError &e)
  {
    err << fmt::format("design error: {}\n", e.what());
    return kExitConfig;
  }
  catch (const DomainError &e)
  {
    err << fmt::format("domain error: {}\n", e.what());
    return kExitConfig;
  }
  catch (const json::exception &e)
  {
    err << fmt::format("config error: {}\n", e.what());
    return kExitConfig;
  }
  catch (const std::exception &e)
  {
    err << fmt::format("error: {}\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace metamat
