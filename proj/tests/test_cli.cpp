#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using fracbvp::testing::ScalarSpec;
using fracbvp::testing::config_text;
using fracbvp::testing::scratch_dir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fracbvp");
  std::ostringstream out, err;
  const int code = fracbvp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path file = dir / name;
  std::ofstream(file) << text;
  return file;
}

ScalarSpec stiff_spec() {
  ScalarSpec s;
  s.expr = "50*sin(u1)";
  s.M = 50.0;
  s.K = 50.0;
  return s;
}

}  // namespace

TEST_CASE("check on acc-gyre passes and reports both betas") {
  const fs::path dir = scratch_dir("cli-check");
  const Outcome r = invoke({"--builtin", "acc-gyre", "--out", dir.string(), "check"});
  CHECK(r.code == 0);
  CHECK(r.out.find("beta / M = [0.18806") != std::string::npos);
  CHECK(r.out.find("normalized beta") != std::string::npos);
  CHECK(r.out.find("Q = K beta / M = 0.09403") != std::string::npos);
  CHECK(slurp(dir / "summary.txt") == r.out);
  const std::string csv = slurp(dir / "conditions.csv");
  CHECK(csv.rfind("quantity,value\n", 0) == 0);
  CHECK(csv.find("dbeta_basis,normalized") != std::string::npos);
  CHECK(csv.find("all_hold,1") != std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "check");
  CHECK(manifest["source"] == "builtin:acc-gyre");
  CHECK(manifest["grid_n"] == 401);
  CHECK(manifest.contains("timestamp"));
  CHECK(manifest.contains("tool_version"));
}

TEST_CASE("check exit codes") {
  const fs::path dir = scratch_dir("cli-codes");
  const fs::path stiff = write_config(dir, "stiff.ini", config_text(stiff_spec()));
  CHECK(invoke({"--config", stiff.string(), "--out", (dir / "a").string(), "check"}).code == 2);

  const fs::path broken = write_config(dir, "broken.ini", "[problem]\np = 3\n");
  const Outcome bad = invoke({"--config", broken.string(), "--out", (dir / "b").string(), "check"});
  CHECK(bad.code == 1);
  CHECK_FALSE(bad.err.empty());

  CHECK(invoke({"--out", (dir / "c").string(), "check"}).code == 1);
  CHECK(invoke({"--config", (dir / "none.ini").string(), "check"}).code == 1);
  CHECK(invoke({"--builtin", "acc-gyre", "--config", stiff.string(), "check"}).code == 1);
  CHECK(invoke({"--builtin", "acc-gyre"}).code == 1);
  CHECK(invoke({"--builtin", "acc-gyre", "frobnicate"}).code == 1);
  CHECK(invoke({"--builtin", "acc-gyre", "--grid-n", "2", "check"}).code == 1);
}

TEST_CASE("solve writes the trace and iterates") {
  const fs::path dir = scratch_dir("cli-solve");
  const Outcome r = invoke({"--builtin", "acc-gyre", "--out", dir.string(), "solve", "--m", "2"});
  REQUIRE(r.code == 0);
  const auto trace = nlohmann::json::parse(slurp(dir / "determining.json"));
  CHECK(trace["converged"].is_boolean());
  REQUIRE(trace["trace"].size() == 3);
  CHECK(std::abs(trace["trace"][0]["chi1"][0].get<double>() + 320.68) <= 0.05);
  CHECK(std::abs(trace["trace"][2]["chi1"][0].get<double>() + 332.30) <= 0.15);
  for (const char* file : {"chi_trace.csv", "iterates.csv", "sup_diffs.csv", "manifest.json"})
    CHECK(fs::exists(dir / file));
  const std::string iterates = slurp(dir / "iterates.csv");
  CHECK(iterates.substr(0, iterates.find('\n')) == "t,u1_m0,u1_m1,u1_m2");
}

TEST_CASE("solve with a tolerance stops early on the zero family") {
  const fs::path dir = scratch_dir("cli-tol");
  const Outcome r = invoke({"--builtin", "zero-rhs", "--out", dir.string(), "solve", "--tol", "1e-9"});
  CHECK(r.code == 0);
  const auto trace = nlohmann::json::parse(slurp(dir / "determining.json"));
  CHECK(trace["converged"] == true);
  CHECK(trace["trace"].size() == 2);
  CHECK(std::abs(trace["trace"].back()["chi1"][0].get<double>() - 1.0) <= 1e-10);
}

TEST_CASE("solve failure modes") {
  const fs::path dir = scratch_dir("cli-solve-fail");
  const fs::path stiff = write_config(dir, "stiff.ini", config_text(stiff_spec()));
  CHECK(invoke({"--config", stiff.string(), "--out", (dir / "a").string(), "solve"}).code == 2);

  ScalarSpec missing;
  missing.alpha1 = 1.0;
  missing.alpha2 = 2.0;
  missing.omega_lo = 2.0;
  missing.omega_hi = 3.0;
  missing.M = 0.0;
  missing.K = 0.0;
  const fs::path nobracket = write_config(dir, "nobracket.ini", config_text(missing));
  const Outcome r = invoke({"--config", nobracket.string(), "--out", (dir / "b").string(), "solve", "--m", "2"});
  CHECK(r.code == 3);
  const auto trace = nlohmann::json::parse(slurp(dir / "b" / "determining.json"));
  CHECK(trace["converged"] == false);
  CHECK_FALSE(trace["failure"].get<std::string>().empty());
}

TEST_CASE("solve outputs are byte-identical across runs and thread counts") {
  const fs::path a = scratch_dir("cli-det");
  const fs::path b = scratch_dir("cli-det");
  const std::vector<std::string> files = {"chi_trace.csv", "iterates.csv", "sup_diffs.csv", "boxes.csv"};
  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", a.string(), "solve", "--m", "2"}).code == 0);
  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", a.string(), "exclude", "--subdiv", "9"}).code == 0);
  ::setenv("FRACBVP_THREADS", "1", 1);
  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", b.string(), "solve", "--m", "2"}).code == 0);
  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", b.string(), "exclude", "--subdiv", "9"}).code == 0);
  ::unsetenv("FRACBVP_THREADS");
  for (const std::string& f : files) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("exclude writes one row per box") {
  const fs::path dir = scratch_dir("cli-exclude");
  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", dir.string(), "exclude", "--m", "1", "--subdiv", "1"}).code == 0);
  const std::string boxes = slurp(dir / "boxes.csv");
  CHECK(boxes.rfind("box,lo_1,hi_1,center_1,delta_1,threshold_1,kept\n", 0) == 0);
  CHECK(std::count(boxes.begin(), boxes.end(), '\n') == 2);
  CHECK(invoke({"--builtin", "acc-gyre", "--out", dir.string(), "exclude", "--subdiv", "0"}).code == 1);
}

TEST_CASE("verify reads solve outputs or recomputes") {
  const fs::path dir = scratch_dir("cli-verify");
  const Outcome missing = invoke({"--builtin", "acc-gyre", "--out", dir.string(), "verify"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("run solve first") != std::string::npos);

  REQUIRE(invoke({"--builtin", "acc-gyre", "--out", dir.string(), "solve", "--m", "2"}).code == 0);
  CHECK(invoke({"--builtin", "acc-gyre", "--grid-n", "201", "--out", dir.string(), "verify"}).code == 1);
  CHECK(invoke({"--builtin", "acc-gyre", "--out", dir.string(), "verify"}).code == 0);
  const std::string residuals = slurp(dir / "residuals.csv");
  CHECK(std::count(residuals.begin(), residuals.end(), '\n') == 4);
  CHECK(fs::exists(dir / "figure_m2.csv"));

  const fs::path fresh = scratch_dir("cli-verify");
  CHECK(invoke({"--builtin", "zero-rhs", "--out", fresh.string(), "verify", "--recompute", "--m", "1"}).code == 0);
  CHECK(fs::exists(fresh / "residuals.csv"));
}

TEST_CASE("example-list names the builtins") {
  const Outcome r = invoke({"example-list"});
  CHECK(r.code == 0);
  CHECK(r.out.find("acc-gyre") != std::string::npos);
  CHECK(r.out.find("zero-rhs") != std::string::npos);
  CHECK(invoke({"--help"}).code == 0);
}
