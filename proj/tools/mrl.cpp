// Command-line front end for the matrixrl shared library. All work happens
// behind the C API; this file only parses arguments and forwards.

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "matrixrl.h"

int main(int argc, char** argv) {
  CLI::App app{"matrixrl: multitask low-rank MDP regret benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_path, seeds_csv, algorithms_csv;

  CLI::App* run = app.add_subcommand("run", "run a benchmark and write regret artifacts");
  run->add_option("--config", config_path, "flat key = value config file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seeds", seeds_csv, "comma-separated seed list (overrides config)");
  run->add_option("--algorithms", algorithms_csv,
                  "comma-separated subset of shared,independent,oracle");

  CLI::App* audit = app.add_subcommand("audit", "run coverage and determinant-bound audits");
  audit->add_option("--config", config_path, "flat key = value config file")->required();
  audit->add_option("--out", out_dir, "output directory")->required();

  CLI::App* gen = app.add_subcommand("gen", "generate a task family without running agents");
  gen->add_option("--config", config_path, "flat key = value config file")->required();
  gen->add_option("--out", out_path, "output instance.json path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return mrl_cmd_run(config_path.c_str(), out_dir.c_str(),
                       seeds_csv.empty() ? nullptr : seeds_csv.c_str(),
                       algorithms_csv.empty() ? nullptr : algorithms_csv.c_str());
  if (audit->parsed()) return mrl_cmd_audit(config_path.c_str(), out_dir.c_str());
  if (gen->parsed()) return mrl_cmd_gen(config_path.c_str(), out_path.c_str());
  std::fprintf(stderr, "no subcommand\n");
  return 1;
}
