#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "artifacts.hpp"
#include "flatconfig.hpp"

namespace matrixrl {

namespace {

constexpr const char* kVersion = "0.1.0";

nlohmann::json config_echo(const FlatConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : cfg.entries()) j[key] = value;
  return j;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::vector<std::string> split_csv_arg(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

void apply_overrides(RunConfig& rc, const std::string& seeds_csv,
                     const std::string& algorithms_csv) {
  if (!seeds_csv.empty()) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_csv_arg(seeds_csv)) {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(s, &pos));
      if (pos != s.size()) throw ConfigError("--seeds: expected integer list");
    }
    if (seeds.empty()) throw ConfigError("--seeds: empty list");
    rc.seeds = std::move(seeds);
  }
  if (!algorithms_csv.empty()) {
    rc.algorithms = split_csv_arg(algorithms_csv);
    if (rc.algorithms.empty()) throw ConfigError("--algorithms: empty list");
  }
  rc.validate();
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& seeds_csv, const std::string& algorithms_csv) {
  FlatConfig flat;
  RunConfig rc;
  try {
    flat = FlatConfig::parse_file(config_path);
    rc = run_config_from(flat);
    apply_overrides(rc, seeds_csv, algorithms_csv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    const ExperimentResult result = run_experiment(rc);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string csv_path = out_dir + "/regret.csv";
    const std::string audits_path = out_dir + "/audits.json";
    const std::string instance_path = out_dir + "/instance.json";
    const std::string svg_path = out_dir + "/regret.svg";
    const std::string manifest_path = out_dir + "/manifest.json";

    write_text_file(csv_path, regret_csv(result.traces, rc.algorithms, result.trace_seeds));
    write_text_file(audits_path, audit_report_to_json(result.audits).dump(2) + "\n");
    save_instance(result.first_instance, instance_path);
    write_text_file(svg_path, regret_svg(result.traces, rc.algorithms));

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = "run";
    manifest["config"] = config_echo(flat);
    manifest["config_path"] = config_path;
    manifest["artifacts"] = {csv_path, audits_path, instance_path, svg_path, manifest_path};
    manifest["wall_clock_seconds"] = wall;
    manifest["finished_at"] = timestamp_utc();
    nlohmann::json statuses = nlohmann::json::array();
    bool any_failed = false;
    for (const auto& st : result.statuses) {
      statuses.push_back({{"seed", st.seed}, {"ok", st.ok}, {"message", st.message}});
      any_failed = any_failed || !st.ok;
    }
    manifest["seeds"] = statuses;
    // manifest is written last so its artifact list is complete
    write_text_file(manifest_path, manifest.dump(2) + "\n");

    if (any_failed) {
      std::cerr << "one or more seeds failed; see manifest.json\n";
      return 2;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_audit(const std::string& config_path, const std::string& out_dir) {
  FlatConfig flat;
  RunConfig rc;
  try {
    flat = FlatConfig::parse_file(config_path);
    rc = run_config_from(flat);
    if (rc.lemma_trials < 1) throw ConfigError("audit requires lemma_trials >= 1");
    if (rc.audit_runs < 100) throw ConfigError("audit requires audit_runs >= 100");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);

    AuditReport report = coverage_audit(rc, rc.audit_runs);
    report.merge(lemma_trials(rc.lemma_trials, rc.instance.seed));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string audits_path = out_dir + "/audits.json";
    const std::string manifest_path = out_dir + "/manifest.json";
    write_text_file(audits_path, audit_report_to_json(report).dump(2) + "\n");

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = "audit";
    manifest["config"] = config_echo(flat);
    manifest["config_path"] = config_path;
    manifest["artifacts"] = {audits_path, manifest_path};
    manifest["wall_clock_seconds"] = wall;
    manifest["finished_at"] = timestamp_utc();
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_gen(const std::string& config_path, const std::string& out_path) {
  InstanceConfig ic;
  try {
    const FlatConfig flat = FlatConfig::parse_file(config_path);
    ic = instance_config_from(flat);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const TaskFamily fam = make_instance(ic);
    save_instance(fam, out_path);

    Eigen::MatrixXd stacked(fam.config.d, static_cast<long>(fam.config.P) * fam.config.d_prime);
    for (int p = 0; p < fam.task_count(); ++p)
      stacked.block(0, static_cast<long>(p) * fam.config.d_prime, fam.config.d,
                    fam.config.d_prime) = fam.cores[static_cast<std::size_t>(p)].M;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
    const auto& sv = svd.singularValues();
    const bool rank_ok = fam.config.r >= sv.size() || sv(fam.config.r) <= 1e-8 * sv(0);

    std::printf("instance written to %s\n", out_path.c_str());
    std::printf("L_phi = %.12g\n", fam.features.L_phi);
    std::printf("L_psi = %.12g\n", fam.features.L_psi);
    std::printf("C_psi = %.12g\n", fam.features.C_psi);
    std::printf("C_psi_prime = %.12g\n", fam.features.C_psi_prime);
    std::printf("S_bound = %.12g\n", fam.S_bound);
    std::printf("stacked_core_rank_leq_r = %s\n", rank_ok ? "true" : "false");
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace matrixrl
