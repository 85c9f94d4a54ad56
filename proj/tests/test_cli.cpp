// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <filesystem>
#include <sstream>
#include "cli.hpp"
#include "metamat/harness.hpp"

using namespace metamat;

namespace
{

struct Run
{
  int code;
  std::string out, err;
};

Run Cli(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path Scratch(const std::string &name)
{
  const fs::path dir = fs::temp_directory_path() / "metamat_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path ScenarioFile(const std::string &name)
{
  return fs::path(METAMAT_SCENARIO_DIR) / name;
}

std::vector<std::vector<double>> ParseCsv(const std::string &text)
{
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
  {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ','))
    {
      row.push_back(std::stod(cell));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("em-c prints the limit coefficient")
{
  const auto r = Cli({"em-c", "--gamma", "30", "--kappa", "0.5"});
  CHECK(r.code == 0);
  CHECK(r.out == "c = 1.000000000000\n");
  CHECK(Cli({"em-c", "--kappa", "1.5"}).code == kExitConfig);
}

TEST_CASE("usage errors exit with the config code")
{
  CHECK(Cli({}).code == kExitConfig);
  CHECK(Cli({"frobnicate"}).code == kExitConfig);
  CHECK(Cli({"design", "--config", "/nonexistent.json"}).code == kExitConfig);
  CHECK(Cli({"--help"}).code == 0);
}

TEST_CASE("invalid scenario values are rejected before any work")
{
  const auto dir = Scratch("invalid");
  json j = json::parse(ReadFile(ScenarioFile("no_contrast.json")));
  j["kappa"] = 1.5;
  WriteFileAtomic(dir / "kappa.json", j.dump());
  auto r = Cli({"design", "--config", (dir / "kappa.json").string(), "--out", dir.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("kappa") != std::string::npos);

  j = json::parse(ReadFile(ScenarioFile("no_contrast.json")));
  j["gird"] = 16;
  WriteFileAtomic(dir / "typo.json", j.dump());
  r = Cli({"solve-continuum", "--config", (dir / "typo.json").string(), "--out", dir.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("gird") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "amplitudes.csv"));
}

TEST_CASE("design of a contrast-free scenario writes an empty layout")
{
  const auto dir = Scratch("design_empty");
  const auto r = Cli({"design", "--config", ScenarioFile("no_contrast.json").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const json summary = json::parse(ReadFile(dir / "design.json"));
  CHECK(summary["M"] == 0);
  CHECK(summary["note"] == "no contrast");
  CHECK(ReadLayout(dir / "layout.jsonl").M() == 0);
}

TEST_CASE("design of the canonical scenario follows the count law")
{
  const auto dir = Scratch("design_canonical");
  const auto r = Cli({"design", "--config", ScenarioFile("canonical.json").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const json s = json::parse(ReadFile(dir / "design.json"));
  CHECK(std::abs(s["M"].get<double>() - s["predicted_M"].get<double>()) <= s["P"].get<double>());
  CHECK(s["passive"] == true);
  CHECK(ReadLayout(dir / "layout.jsonl").M() == s["M"].get<std::size_t>());
}

TEST_CASE("zero-impedance layout gives zero amplitudes")
{
  const auto dir = Scratch("zero_layout");
  ParticleSystem ps;
  ps.a = 0.01;
  ps.kappa = 0.5;
  ps.spacing = 0.1;
  ps.cube_side = 0.3;
  ps.cube_count = 1;
  for (int i = 0; i < 5; i++)
  {
    ps.centers.push_back(Vec3(0.2 * i, 0.1, -0.1));
    ps.h_values.push_back(0.0);
    ps.zeta_values.push_back(0.0);
  }
  WriteLayout(dir / "zero.jsonl", ps);
  json j = json::parse(ReadFile(ScenarioFile("no_contrast.json")));
  j["layout"] = "zero.jsonl";
  WriteFileAtomic(dir / "scenario.json", j.dump());
  const auto r = Cli({"solve-discrete", "--config", (dir / "scenario.json").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = ParseCsv(ReadFile(dir / "amplitudes.csv"));
  CHECK(rows.size() == 12);
  for (const auto &row : rows)
  {
    CHECK(row[3] == 0.0);
    CHECK(row[4] == 0.0);
  }
}

TEST_CASE("continuum run on the weak ball matches the Born amplitude and is repeatable")
{
  const auto dir = Scratch("born");
  const auto cfg = ScenarioFile("born_ball.json").string();
  REQUIRE(Cli({"solve-continuum", "--config", cfg, "--out", dir.string()}).code == 0);
  const std::string first = ReadFile(dir / "amplitudes.csv");
  for (const auto &row : ParseCsv(first))
  {
    const Vec3 beta(row[0], row[1], row[2]);
    const cplx born = BornOracle(0.01, 1.0, 1.0, Vec3::UnitZ(), beta);
    CHECK(std::abs(cplx(row[3], row[4]) - born) / std::abs(born) < 0.02);
  }
  REQUIRE(Cli({"solve-continuum", "--config", cfg, "--out", dir.string()}).code == 0);
  CHECK(ReadFile(dir / "amplitudes.csv") == first);
  CHECK(fs::exists(dir / "psi.bin"));
}

TEST_CASE("solver failure exits with the numerical code and a residual history")
{
  const auto dir = Scratch("nonconverge");
  const auto r = Cli({"solve-continuum", "--config", ScenarioFile("born_ball.json").string(),
                      "--tol", "1e-300", "--out", dir.string()});
  CHECK(r.code == kExitNumerical);
  const json h = json::parse(ReadFile(dir / "residual_history.json"));
  CHECK_FALSE(h["residual_history"].empty());
}

TEST_CASE("validate")
{
  const auto list = Cli({"validate", "--list"});
  CHECK(list.code == 0);
  CHECK(list.out.find("fft_vs_dense\n") != std::string::npos);
  CHECK(list.out.find("PASS") == std::string::npos);

  CHECK(Cli({"validate", "--only", "fft_vs_dense", "--only", "identity"}).code == 0);
  CHECK(Cli({"validate", "--only", "fft_vs_dense", "--fault-self-weight"}).code == kExitCheckFailed);
  CHECK(Cli({"validate", "--only", "no_such_check"}).code == kExitConfig);

  const auto dir = Scratch("validate");
  CHECK(Cli({"validate", "--only", "em_c_limit", "--out", dir.string()}).code == 0);
  CHECK(json::parse(ReadFile(dir / "validation.json"))["passed"] == true);
}
