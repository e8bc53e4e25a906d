#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "fewphoton/io.hpp"

using fewphoton::io::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fewphoton_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Run run(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FEWPHOTON_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Digest from the system sha256sum, independent of the library's OpenSSL path.
std::string system_sha256(const fs::path& p) {
  const std::string cmd = "sha256sum " + p.string();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  char buf[128] = {};
  const std::string out = fgets(buf, sizeof buf, pipe) ? buf : "";
  pclose(pipe);
  return out.substr(0, 64);
}

}  // namespace

TEST(Cli, VerifySpinHalf) {
  const auto dir = workdir("verify");
  const auto cfg = write_config(dir, R"({"num_atoms": 1, "n_max": 4})");
  const auto r = run("verify --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto report = json::parse(slurp(dir / "out" / "verify.json"));
  EXPECT_TRUE(report["pass"].get<bool>());
  for (const auto& id : report["identities"]) EXPECT_LE(id["max_residual"].get<double>(), 1e-12);
  const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "verify");
  ASSERT_FALSE(manifest["files"].empty());
  for (const auto& f : manifest["files"]) {
    const auto expected = system_sha256(dir / "out" / f["path"].get<std::string>());
    if (!expected.empty()) EXPECT_EQ(f["sha256"], expected);
  }
}

TEST(Cli, MalformedConfigNamesField) {
  const auto dir = workdir("bad");
  const auto cfg = write_config(dir, R"({"num_atoms": "fifty", "alpha": 2.0})");
  const auto r = run("prep --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.status, 2);
  const auto e = json::parse(r.err);
  EXPECT_EQ(e["error"], "ConfigError");
  EXPECT_EQ(e["field"], "num_atoms");
}

TEST(Cli, NestedFieldIsNamed) {
  const auto dir = workdir("nested");
  const auto cfg = write_config(dir, R"({"num_atoms": 4, "tau3_grid": {"start": 0, "stop": 1}})");
  const auto r = run("radiate --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "tau3_grid.points");
}

TEST(Cli, UnknownFieldAndBadJson) {
  const auto dir = workdir("unknown");
  auto cfg = write_config(dir, R"({"num_atoms": 4, "alhpa": 2})");
  auto r = run("prep --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "alhpa");

  cfg = write_config(dir, R"({"num_atoms": 4,)");
  r = run("prep --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "<document>");

  r = run("prep --bogus", dir);
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, NumericalFailureExitsOne) {
  const auto dir = workdir("numeric");
  // Fock cutoff far too small for |alpha| = 5.
  const auto cfg = write_config(dir, R"({"num_atoms": 2, "alpha": {"re": 5, "im": 0}, "tau1": 0.5, "n_max": 3})");
  const auto r = run("prep --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(json::parse(r.err)["error"], "CutoffTooSmall");
}

TEST(Cli, PipelineWritesArtifacts) {
  const auto dir = workdir("pipeline");
  const auto cfg = write_config(dir, R"({
    "num_atoms": 6, "alpha": {"re": 2.0, "im": 0.0}, "tau1_range": {"start": 0, "stop": 2, "points": 21},
    "rotation": "auto", "tau3_grid": {"start": 0, "stop": 1.2, "points": 25}, "n_max": "auto",
    "q_points": 41, "bloch_theta_points": 31, "bloch_phi_points": 60, "seed": 3})");
  const auto out = dir / "out";
  const auto r = run("pipeline --config " + cfg.string() + " --out " + out.string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"series.csv", "qgrid.csv", "qgrid.json", "husimi.csv", "husimi.json", "report.json",
                        "manifest.json", "rho_field.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto manifest = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["config"]["num_atoms"], 6);
  const auto report = json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(report["stage2"].contains("squeezing_ratio"));
  EXPECT_TRUE(report["stage3"]["conservation"]["passes"].get<bool>());
  const auto series = slurp(out / "series.csv");
  EXPECT_EQ(std::count(series.begin(), series.end(), '\n'), 26);

  // Re-running gives byte-identical artifacts.
  const auto again = dir / "again";
  ASSERT_EQ(run("pipeline --config " + cfg.string() + " --out " + again.string(), dir).status, 0);
  EXPECT_EQ(slurp(out / "series.csv"), slurp(again / "series.csv"));
  EXPECT_EQ(slurp(out / "qgrid.csv"), slurp(again / "qgrid.csv"));
}

TEST(Cli, StagesChainThroughStateFiles) {
  const auto dir = workdir("chain");
  auto cfg = write_config(dir, R"({"num_atoms": 4, "alpha": 1.5, "tau1": 0.6})");
  ASSERT_EQ(run("prep --config " + cfg.string() + " --out " + (dir / "prep").string(), dir).status, 0);
  const auto atom = (dir / "prep" / "rho_atom.json").string();

  cfg = write_config(dir, R"({"state_file": ")" + atom + R"(", "rotation": {"theta": 2.0, "phi": 0.5}})");
  auto r = run("rotate --config " + cfg.string() + " --out " + (dir / "rot").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;

  cfg = write_config(dir, R"({"state_file": ")" + (dir / "rot" / "rho_rotated.json").string() +
                              R"(", "tau3_grid": {"start": 0, "stop": 1, "points": 11}})");
  r = run("radiate --config " + cfg.string() + " --out " + (dir / "rad").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;

  cfg = write_config(dir, R"({"state_file": ")" + (dir / "rad" / "rho_field.json").string() + R"(", "points": 21})");
  r = run("qfunc --config " + cfg.string() + " --out " + (dir / "q").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "q" / "qgrid.csv"));

  cfg = write_config(dir, R"({"state_file": ")" + atom + R"(", "theta_points": 11, "phi_points": 20})");
  r = run("husimi --config " + cfg.string() + " --out " + (dir / "h").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "h" / "husimi.json"));

  // A field state handed to husimi is rejected by name.
  cfg = write_config(dir, R"({"state_file": ")" + (dir / "rad" / "rho_field.json").string() + R"("})");
  r = run("husimi --config " + cfg.string() + " --out " + (dir / "h2").string(), dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "state_file");
}

TEST(Cli, ScanRegionAndFeasibility) {
  const auto dir = workdir("scan");
  auto cfg = write_config(dir, R"({"atom_counts": [2, 3], "alpha_range": {"start": 1, "stop": 2, "points": 2},
    "tau1_range": {"start": 0, "stop": 2, "points": 9}, "theta_points": 3, "chi_points": 2, "tau3_points": 5,
    "seed": 99, "threads": 2})");
  auto r = run("scan-region --config " + cfg.string() + " --out " + (dir / "scan").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto csv = slurp(dir / "scan" / "region.csv");
  EXPECT_EQ(csv.rfind("N,abs_a,var_min_phi,var_fixed_phi,tau,", 0), 0u);
  EXPECT_EQ(json::parse(slurp(dir / "scan" / "manifest.json"))["seed"], 99);
  EXPECT_EQ(json::parse(slurp(dir / "scan" / "region.json"))["regions"].size(), 2u);

  cfg = write_config(dir, R"({"g_hz": 1e5, "tau": 0.25, "lifetime_s": 1e-3, "cavity_lifetime_s": 1e-3,
    "frequency_hz": 5e10, "temperature_k": 0.1})");
  r = run("feasibility --config " + cfg.string() + " --out " + (dir / "feas").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto f = json::parse(slurp(dir / "feas" / "feasibility.json"));
  EXPECT_TRUE(f["feasible"].get<bool>());
  EXPECT_GT(f["thermal_occupancy"].get<double>(), 0.0);
}
