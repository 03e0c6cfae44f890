#include "plap/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using namespace plap;
using plap::cli::run;

namespace {

const fs::path kConfigs = PLAP_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plap_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) { return cli::detail::read_file(p); }

fs::path write_config(const std::string& name, const json& j) {
  const fs::path dir = fs::temp_directory_path() / "plap_cli_test" / "configs";
  fs::create_directories(dir);
  std::ofstream(dir / name) << j.dump();
  return dir / name;
}

json small_config() {
  return json{{"schema", 1},
              {"mesh", {{"dimension", 1}, {"extents", {0, 1}}, {"resolution", {32}}}},
              {"problem", {{"p", 2}}}};
}

int status_of(const std::string& command) {
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST(Cli, SolveBenchmark) {
  const fs::path out = scratch("solve");
  std::ostringstream log;
  ASSERT_EQ(run("solve", kConfigs / "solve_1d.json", out, std::nullopt, log), 0) << log.str();
  const json r = read_json(out / "result.json");
  EXPECT_NEAR(r["lambda"].get<double>() / (std::numbers::pi * std::numbers::pi), 1.0, 0.01);
  EXPECT_TRUE(r["converged"].get<bool>());
  for (const char* f : {"u.csv", "g.csv", "V.csv", "trace.csv", "manifest.json", "metadata.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, InvalidExponent) {
  const fs::path out = scratch("invalid");
  std::ostringstream log;
  EXPECT_EQ(run("solve", kConfigs / "invalid_p.json", out, std::nullopt, log), 1);
  EXPECT_NE(log.str().find("H1"), std::string::npos) << log.str();
  EXPECT_NE(log.str().find("p = 0.5"), std::string::npos) << log.str();
}

TEST(Cli, DerivativeOfZeroField) {
  const fs::path out = scratch("zero");
  std::ostringstream log;
  ASSERT_EQ(run("derivative", kConfigs / "derivative_zero.json", out, std::nullopt, log), 0) << log.str();
  const json d = read_json(out / "result.json")["derivative"];
  for (const char* k : {"value_general", "value_divfree", "value_hadamard", "fd_value", "fd_forward", "fd_backward"})
    EXPECT_EQ(d[k].get<double>(), 0.0) << k;
  EXPECT_TRUE(fs::exists(out / "lambda_t.csv"));
}

TEST(Cli, UnreadableOrUnknown) {
  std::ostringstream log;
  EXPECT_EQ(run("solve", "/nonexistent/config.json", scratch("x"), std::nullopt, log), 1);
  EXPECT_EQ(run("frobnicate", kConfigs / "solve_1d.json", scratch("x"), std::nullopt, log), 1);
  const fs::path broken = write_config("broken.json", json{});
  std::ofstream(broken) << "{ not json";
  EXPECT_EQ(run("solve", broken, scratch("x"), std::nullopt, log), 1);
}

TEST(Cli, SchemaValidation) {
  std::ostringstream log;
  auto expect_invalid = [&](json j, const std::string& what) {
    const fs::path p = write_config("bad.json", j);
    EXPECT_EQ(run("solve", p, scratch("bad"), std::nullopt, log), 1) << what;
  };
  json j = small_config();
  j["schema"] = 2;
  expect_invalid(j, "schema");
  j = small_config();
  j["extra"] = 1;
  expect_invalid(j, "unknown key");
  j = small_config();
  j["solver"] = {{"gradient_tolerance", -1}};
  expect_invalid(j, "negative tolerance");
  j = small_config();
  j["problem"]["g"] = {{"kind", "mystery"}};
  expect_invalid(j, "unknown generator");
  j = small_config();
  j["problem"]["g"] = {{"kind", "values"}, {"values", {1, 2}}};
  expect_invalid(j, "value count");
  j = small_config();
  j["problem"]["g"] = -1;
  expect_invalid(j, "no positive weight");
  j = small_config();
  j["mesh"]["resolution"] = {1};
  expect_invalid(j, "resolution");
  j = small_config();
  j["field"] = {{"name", "stream_bump"}, {"center", {0.5, 0.5}}, {"radii", {0.2, 0.2}}};
  expect_invalid(j, "2D field on 1D mesh");
  j = small_config();
  j["problem"]["q"] = 3;
  expect_invalid(j, "q for p > N");
  j = small_config();
  const fs::path p = write_config("nofield.json", j);
  EXPECT_EQ(run("derivative", p, scratch("bad"), std::nullopt, log), 1);
}

TEST(Cli, NonConvergenceExitsTwo) {
  json j = small_config();
  j["solver"] = {{"max_iterations", 1}, {"max_level_iterations", 1}};
  j["problem"]["p"] = 1.5;
  const fs::path out = scratch("nonconv");
  std::ostringstream log;
  EXPECT_EQ(run("solve", write_config("nonconv.json", j), out, std::nullopt, log), 2);
  const json r = read_json(out / "result.json");
  EXPECT_FALSE(r["converged"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, DeterministicOutputsAndManifest) {
  json j = small_config();
  j["problem"]["V"] = {{"kind", "random"}, {"low", 0}, {"high", 3}};
  const fs::path cfg = write_config("det.json", j);
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  std::ostringstream log;
  ASSERT_EQ(run("solve", cfg, a, 5, log), 0);
  ASSERT_EQ(run("solve", cfg, b, 5, log), 0);
  ASSERT_EQ(run("solve", cfg, c, 6, log), 0);
  for (const char* f : {"result.json", "u.csv", "V.csv", "manifest.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_NE(slurp(a / "V.csv"), slurp(c / "V.csv"));

  const json manifest = read_json(a / "manifest.json");
  std::set<std::string> listed;
  for (const auto& e : manifest["files"]) {
    const std::string name = e["path"];
    listed.insert(name);
    const std::string bytes = slurp(a / name);
    EXPECT_EQ(e["sha256"], cli::sha256_hex(bytes)) << name;
    EXPECT_EQ(e["bytes"].get<std::size_t>(), bytes.size());
  }
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename();
    if (name == "manifest.json" || name == "metadata.json") continue;
    EXPECT_TRUE(listed.count(name)) << name;
  }
}

TEST(Cli, Sha256KnownVector) {
  EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, OtherSubcommands) {
  std::ostringstream log;
  const fs::path s = scratch("sobolev");
  ASSERT_EQ(run("sobolev", kConfigs / "sobolev_2d.json", s, std::nullopt, log), 0) << log.str();
  EXPECT_GT(read_json(s / "result.json")["sobolev_constant"].get<double>(), 0.0);
  const fs::path c = scratch("check");
  ASSERT_EQ(run("check", kConfigs / "check_2d.json", c, std::nullopt, log), 0) << log.str();
  const json h = read_json(c / "result.json")["hypotheses"];
  EXPECT_TRUE(h["h1_ok"].get<bool>());
  EXPECT_GT(h["delta0"].get<double>(), 0.0);
}

TEST(Cli, OptimizeWritesHistory) {
  json j = json::parse(std::ifstream(kConfigs / "optimize_2d.json"));
  j["mesh"]["resolution"] = {12, 12};
  j["optimizer"]["probe_count"] = 2;
  const fs::path out = scratch("optimize");
  std::ostringstream log;
  ASSERT_EQ(run("optimize", write_config("opt.json", j), out, std::nullopt, log), 0) << log.str();
  const json r = read_json(out / "result.json");
  EXPECT_EQ(r["optimizer"]["defect_g"].get<double>(), 0.0);
  EXPECT_EQ(r["optimizer"]["defect_V"].get<double>(), 0.0);
  std::ifstream hist(out / "history.csv");
  std::string header;
  std::getline(hist, header);
  EXPECT_EQ(header, "k,lambda,swaps");
  for (const char* f : {"g_opt.csv", "V_opt.csv", "u.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = PLAP_CLI_BINARY;
  const fs::path out = scratch("binary");
  EXPECT_EQ(status_of(bin + " solve --config " + (kConfigs / "solve_1d.json").string() + " --out " + out.string() +
                      " > /dev/null 2>&1"),
            0);
  EXPECT_TRUE(fs::exists(out / "result.json"));
  EXPECT_EQ(status_of(bin + " solve --config " + (kConfigs / "invalid_p.json").string() + " --out " + out.string() +
                      " > /dev/null 2>&1"),
            1);
  EXPECT_EQ(status_of(bin + " solve > /dev/null 2>&1"), 1);
  EXPECT_EQ(status_of(bin + " bogus --config " + (kConfigs / "solve_1d.json").string() + " > /dev/null 2>&1"), 1);
}
