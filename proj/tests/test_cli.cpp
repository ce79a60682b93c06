// Drives the batchq executable end to end through its public command line.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = BQ_WORK_DIR;

json base_config() {
  return json{{"profile", std::string(BQ_TEST_DATA) + "/googlenet-p4.json"},
              {"rho", 0.9},
              {"weights", {{"w1", 1}, {"w2", 1}}},
              {"truncation", {{"s_max", 70}, {"c_o", 100}, {"delta", 0.001}}},
              {"seed", 1}};
}

std::string write_config(const std::string& name, const json& j) {
  fs::create_directories(kWork);
  const auto path = (kWork / name).string();
  std::ofstream(path) << j.dump(2);
  return path;
}

int run(const std::string& args) {
  const std::string cmd = std::string(BQ_CLI) + " " + args + " > " + (kWork / "last.log").string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("solve writes the reference operating point and is reproducible") {
  const auto cfg = write_config("solve.json", base_config());
  const auto out1 = kWork / "solve1", out2 = kWork / "solve2";
  REQUIRE(run("solve " + cfg + " --out-dir " + out1.string()) == 0);
  REQUIRE(run("solve " + cfg + " --out-dir " + out2.string()) == 0);
  const auto eval = json::parse(slurp(out1 / "eval.json"));
  CHECK(eval["g_pi"].get<double>() == doctest::Approx(66.1377).epsilon(0.0005));
  for (const char* f : {"policy.csv", "solve.json", "eval.json"}) CHECK(slurp(out1 / f) == slurp(out2 / f));
  CHECK(slurp(out1 / "policy.csv").rfind("# config_hash=", 0) == 0);
}

TEST_CASE("exit codes") {
  const auto cfg = write_config("codes.json", base_config());
  const auto out = (kWork / "codes").string();
  CHECK(run("solve " + cfg + " --rho 1.0 --out-dir " + out) == 1);
  CHECK(run("solve " + cfg + " --s-max 32 --c-o 0 --out-dir " + out) == 2);
  auto bad = base_config();
  bad["unexpected"] = 3;
  CHECK(run("solve " + write_config("bad.json", bad) + " --out-dir " + out) == 1);
  CHECK(run("no-such-command") != 0);
}

TEST_CASE("single-point sweep and compare") {
  auto j = base_config();
  j["weights"] = {{"w1", 1}, {"w2", 0}};
  j["sweep"] = {{"rho", {0.9}}, {"w2", {0, 500}}};
  const auto out = kWork / "sweep";
  REQUIRE(run("sweep " + write_config("sweep.json", j) + " --out-dir " + out.string()) == 0);
  const auto csv = slurp(out / "tradeoff.csv");
  CHECK(csv.find("rho,w1,w2,s_max,g,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  auto c = base_config();
  c["compare"] = {{"rho", {0.9}}, {"w2", {0}}, {"policies", {"work_conserving", "static:8", "static:32"}}};
  const auto cout_dir = kWork / "compare";
  REQUIRE(run("compare " + write_config("compare.json", c) + " --out-dir " + cout_dir.string()) == 0);
  const auto cmp = slurp(cout_dir / "comparison.csv");
  CHECK(cmp.find("static:8,0") != std::string::npos);
  CHECK(cmp.find("unstable") != std::string::npos);
}

TEST_CASE("fit builds a profile from samples") {
  fs::create_directories(kWork);
  const auto samples = kWork / "samples.csv";
  {
    std::ofstream s(samples);
    s << "batch,latency_ms,energy_mJ\n";
    for (int b : {1, 2, 4, 8, 16, 32}) s << b << ',' << 0.3051 * b + 1.052 << ',' << 19.9 * b + 19.6 << '\n';
  }
  const auto out = kWork / "fit";
  REQUIRE(run("fit " + samples.string() + " --b-max 32 --out-dir " + out.string()) == 0);
  const auto prof = json::parse(slurp(out / "profile.json"));
  CHECK(prof["alpha"].get<double>() == doctest::Approx(0.3051));
  CHECK(prof["b_max"].get<int>() == 32);
}
