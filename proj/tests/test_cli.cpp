#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "artifacts.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = MRL_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path sandbox() {
  const fs::path dir = fs::temp_directory_path() / "mrl_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

const char* kSmoke = R"(
n_states = 4
n_actions = 2
d = 6
d_prime = 4
r = 2
P = 2
seed = 3
N = 1
H = 3
seeds = 3
algorithms = shared, independent, oracle
)";

}  // namespace

TEST_CASE("missing config file exits 1") {
  const auto dir = sandbox();
  CHECK(run_cli("run --config " + (dir / "nope.cfg").string() + " --out " +
                (dir / "out").string()) == 1);
  CHECK(run_cli("gen --config " + (dir / "nope.cfg").string() + " --out " +
                (dir / "i.json").string()) == 1);
}

TEST_CASE("malformed and infeasible configs exit 1") {
  const auto dir = sandbox();
  const std::string bad = write_config(dir, "bad.cfg", "this is not a config\n");
  CHECK(run_cli("run --config " + bad + " --out " + (dir / "out").string()) == 1);

  const std::string infeasible = write_config(dir, "infeasible.cfg",
                                              "n_states = 4\nn_actions = 2\nd = 3\nd_prime = 4\n"
                                              "r = 5\nP = 2\nseed = 1\n");
  CHECK(run_cli("gen --config " + infeasible + " --out " + (dir / "i.json").string()) == 1);
}

TEST_CASE("smoke run writes all five artifacts with the right row count") {
  const auto dir = sandbox();
  const std::string cfg = write_config(dir, "smoke.cfg", kSmoke);
  const fs::path out = dir / "smoke_out";
  fs::remove_all(out);
  REQUIRE(run_cli("run --config " + cfg + " --out " + out.string()) == 0);
  for (const char* name :
       {"regret.csv", "audits.json", "instance.json", "manifest.json", "regret.svg"})
    CHECK(fs::exists(out / name));

  std::ifstream csv(out / "regret.csv");
  std::string line;
  int rows = -1;  // discount the header
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3 * 1 * 1);  // algorithms x seeds x episodes

  // manifest lists every artifact and echoes the config
  const auto manifest = nlohmann::json::parse(matrixrl::read_text_file((out / "manifest.json").string()));
  CHECK(manifest.at("artifacts").size() == 5);
  CHECK(manifest.at("config").at("n_states") == "4");
  CHECK(manifest.at("seeds").at(0).at("ok").get<bool>());
}

TEST_CASE("identical runs reproduce regret.csv bitwise") {
  const auto dir = sandbox();
  const std::string cfg = write_config(dir, "repro.cfg", kSmoke);
  const fs::path out1 = dir / "r1", out2 = dir / "r2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  REQUIRE(run_cli("run --config " + cfg + " --out " + out1.string()) == 0);
  REQUIRE(run_cli("run --config " + cfg + " --out " + out2.string()) == 0);
  CHECK(matrixrl::read_text_file((out1 / "regret.csv").string()) ==
        matrixrl::read_text_file((out2 / "regret.csv").string()));
  CHECK(matrixrl::read_text_file((out1 / "regret.svg").string()) ==
        matrixrl::read_text_file((out2 / "regret.svg").string()));
}

TEST_CASE("seed and algorithm overrides change the emitted rows") {
  const auto dir = sandbox();
  const std::string cfg = write_config(dir, "ov.cfg", kSmoke);
  const fs::path out = dir / "ov_out";
  fs::remove_all(out);
  REQUIRE(run_cli("run --config " + cfg + " --out " + out.string() +
                  " --seeds 5,6 --algorithms independent") == 0);
  std::ifstream csv(out / "regret.csv");
  std::string line;
  int rows = -1;
  bool only_independent = true;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    ++rows;
    if (rows >= 1 && line.rfind("independent,", 0) != 0) only_independent = false;
  }
  CHECK(rows == 1 * 2 * 1);
  CHECK(only_independent);
}

TEST_CASE("gen writes an instance that round-trips") {
  const auto dir = sandbox();
  const std::string cfg = write_config(dir, "gen.cfg", kSmoke);
  const fs::path inst = dir / "instance.json";
  fs::remove(inst);
  REQUIRE(run_cli("gen --config " + cfg + " --out " + inst.string()) == 0);
  const matrixrl::TaskFamily fam = matrixrl::load_instance(inst.string());
  const fs::path inst2 = dir / "instance2.json";
  matrixrl::save_instance(fam, inst2.string());
  CHECK(matrixrl::read_text_file(inst.string()) == matrixrl::read_text_file(inst2.string()));
}

TEST_CASE("audit subcommand: zero-trial config exits 1, valid config writes audits.json") {
  const auto dir = sandbox();
  const std::string zero = write_config(dir, "audit0.cfg",
                                        std::string(kSmoke) + "lemma_trials = 0\n");
  CHECK(run_cli("audit --config " + zero + " --out " + (dir / "a0").string()) == 1);

  const std::string ok = write_config(
      dir, "audit.cfg",
      std::string(kSmoke) + "lemma_trials = 25\naudit_runs = 100\naudit_episodes = 3\n");
  const fs::path out = dir / "a1";
  fs::remove_all(out);
  REQUIRE(run_cli("audit --config " + ok + " --out " + out.string()) == 0);
  const auto audits = nlohmann::json::parse(matrixrl::read_text_file((out / "audits.json").string()));
  CHECK(audits.at("det_lemma").at("trials").get<int>() == 25);
  CHECK(audits.at("det_lemma").at("pass").get<bool>());
  CHECK(audits.at("coverage").at("single").at("pairs").get<int>() > 0);
}
