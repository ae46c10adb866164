#pragma once

#include <string>

namespace matrixrl {

/// High-level command drivers behind the CLI. Return 0 on success, 1 on a
/// malformed or infeasible configuration, 2 on a runtime failure. Diagnostics
/// go to stderr; audit failures are reported in the output files and do not
/// change the exit code.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& seeds_csv = "", const std::string& algorithms_csv = "");
int cmd_audit(const std::string& config_path, const std::string& out_dir);
int cmd_gen(const std::string& config_path, const std::string& out_path);

}  // namespace matrixrl
