#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "artifacts.hpp"
#include "flatconfig.hpp"

using namespace matrixrl;

namespace {

const char* kSample = R"(
# benchmark setup
n_states = 4
n_actions = 2
d = 6
d_prime = 4
r = 2
P = 3
seed = 11
N = 5
H = 3
delta = 0.2        # inline comment
bonus_scale = 0.5
algorithms = shared, independent
seeds = 11, 12
audits = off
)";

}  // namespace

TEST_CASE("flat config: parsing, types, defaults") {
  const FlatConfig cfg = FlatConfig::parse(kSample);
  CHECK(cfg.get_int("n_states") == 4);
  CHECK(cfg.get_double("delta") == doctest::Approx(0.2));
  CHECK(cfg.get_string("missing", "fallback") == "fallback");
  CHECK(cfg.get_bool("audits", true) == false);
  CHECK(cfg.get_list("algorithms") == std::vector<std::string>{"shared", "independent"});
  CHECK(cfg.get_u64_list("seeds") == std::vector<std::uint64_t>{11, 12});

  const RunConfig rc = run_config_from(cfg);
  CHECK(rc.N == 5);
  CHECK(rc.bonus_scale == doctest::Approx(0.5));
  CHECK(rc.seeds.size() == 2);
  CHECK(rc.algorithms.size() == 2);
  CHECK_FALSE(rc.audits);
}

TEST_CASE("flat config: malformed inputs raise config errors") {
  CHECK_THROWS_AS(FlatConfig::parse("not a key value line"), ConfigError);
  CHECK_THROWS_AS(FlatConfig::parse(" = 3"), ConfigError);
  const FlatConfig cfg = FlatConfig::parse("x = abc\nh = 1.5.2\nflag = maybe\n");
  CHECK_THROWS_AS(cfg.get_int("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("h"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("flag", true), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("nope"), ConfigError);
  CHECK_THROWS_AS(run_config_from(FlatConfig::parse("n_states = 3")), ConfigError);
  // invalid ranges surface as config errors too
  CHECK_THROWS_AS(run_config_from(FlatConfig::parse(std::string(kSample) + "delta = 1.5\n")),
                  ConfigError);
}

TEST_CASE("instance json round-trips exactly") {
  InstanceConfig ic;
  ic.n_states = 5;
  ic.n_actions = 2;
  ic.d = 7;
  ic.d_prime = 5;
  ic.r = 2;
  ic.P = 3;
  ic.seed = 77;
  const TaskFamily fam = make_instance(ic);
  const std::string path = (std::filesystem::temp_directory_path() / "mrl_inst.json").string();
  save_instance(fam, path);
  const TaskFamily loaded = load_instance(path);
  const std::string path2 = (std::filesystem::temp_directory_path() / "mrl_inst2.json").string();
  save_instance(loaded, path2);
  CHECK(read_text_file(path) == read_text_file(path2));
  // loaded family is bit-identical where it matters
  CHECK(loaded.features.phi == fam.features.phi);
  CHECK(loaded.B_star == fam.B_star);
  for (int p = 0; p < fam.task_count(); ++p) {
    CHECK(loaded.cores[p].M == fam.cores[p].M);
    CHECK(loaded.rewards[p] == fam.rewards[p]);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("regret csv: header, row counts, 12-significant-digit round trip") {
  RegretTrace traces;
  traces.instant["shared"] = {{0.123456789012345, 1.0 / 3.0}};
  traces.cumulative["shared"] = {{0.123456789012345, 0.123456789012345 + 1.0 / 3.0}};
  const std::string csv = regret_csv(traces, {"shared"}, {42});

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "algorithm,seed,episode,instant_regret,cum_regret\r");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    // round-trip read: five comma-separated fields, floats parse
    std::istringstream fields(line);
    std::string algo, seed, episode, inst, cum;
    REQUIRE(std::getline(fields, algo, ','));
    REQUIRE(std::getline(fields, seed, ','));
    REQUIRE(std::getline(fields, episode, ','));
    REQUIRE(std::getline(fields, inst, ','));
    REQUIRE(std::getline(fields, cum));
    CHECK(algo == "shared");
    CHECK(seed == "42");
    const double v = std::stod(inst);
    CHECK(v >= 0.0);
  }
  CHECK(rows == 2);
  // 12 significant digits are preserved for the first value
  CHECK(csv.find("0.123456789012") != std::string::npos);
}

TEST_CASE("svg output is deterministic and self-contained") {
  RegretTrace traces;
  traces.cumulative["shared"] = {{1.0, 2.0, 2.5}, {1.2, 2.2, 3.0}};
  traces.cumulative["independent"] = {{1.5, 3.0, 4.5}, {1.4, 2.9, 4.4}};
  traces.instant["shared"] = traces.cumulative["shared"];
  traces.instant["independent"] = traces.cumulative["independent"];
  const std::string a = regret_svg(traces, {"shared", "independent"});
  const std::string b = regret_svg(traces, {"shared", "independent"});
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("shared") != std::string::npos);
  CHECK(a.find("independent") != std::string::npos);
  // single-episode traces degrade gracefully
  RegretTrace one;
  one.cumulative["oracle"] = {{0.7}};
  one.instant["oracle"] = {{0.7}};
  const std::string svg1 = regret_svg(one, {"oracle"});
  CHECK(svg1.find("</svg>") != std::string::npos);
}

TEST_CASE("svg: lower mean cumulative regret draws closer to the x axis") {
  RegretTrace traces;
  traces.cumulative["shared"] = {{1.0, 2.0, 3.0}};
  traces.cumulative["independent"] = {{4.0, 8.0, 12.0}};
  traces.instant = traces.cumulative;
  const std::string svg = regret_svg(traces, {"shared", "independent"});
  // final polyline point of each series: larger y pixel = lower value
  std::vector<double> final_y;
  std::size_t pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    const auto pts = svg.find("points=\"", pos) + 8;
    const auto end = svg.find('"', pts);
    const std::string points = svg.substr(pts, end - pts);
    const auto last_comma = points.find_last_of(',');
    final_y.push_back(std::stod(points.substr(last_comma + 1)));
    pos = end;
  }
  REQUIRE(final_y.size() == 2);
  CHECK(final_y[0] > final_y[1]);  // shared (3.0) sits below independent (12.0)
}

TEST_CASE("audit report json carries pass flags per property") {
  AuditReport rep;
  rep.delta = 0.1;
  rep.single_coverage.pairs = 100;
  rep.single_coverage.violations = 3;
  rep.det_trials = 10;
  const nlohmann::json j = audit_report_to_json(rep);
  CHECK(j.at("coverage").at("single").at("pass").get<bool>());
  CHECK(j.at("coverage").at("single").at("rate").get<double>() == doctest::Approx(0.03));
  CHECK(j.at("det_lemma").at("pass").get<bool>());
}
