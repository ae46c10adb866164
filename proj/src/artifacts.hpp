#pragma once

#include <string>

#include "flatconfig.hpp"
#include "harness.hpp"

#include <json.hpp>

namespace matrixrl {

/// Instance serialization. Matrices are row-major nested arrays; the JSON
/// text round-trips exactly (load then save reproduces the bytes).
nlohmann::json instance_to_json(const TaskFamily& family);
TaskFamily instance_from_json(const nlohmann::json& j);
void save_instance(const TaskFamily& family, const std::string& path);
TaskFamily load_instance(const std::string& path);

nlohmann::json audit_report_to_json(const AuditReport& report);

/// Estimator snapshot (shared factor, per-task factors, objective trace) in
/// the same matrix conventions as the instance schema. Round-trips exactly.
nlohmann::json estimate_to_json(const SharedEstimate& est);
SharedEstimate estimate_from_json(const nlohmann::json& j, double lambda);

/// regret.csv: header then one row per (algorithm, seed, episode) with
/// instant and cumulative regret at 12 significant digits.
std::string regret_csv(const RegretTrace& traces, const std::vector<std::string>& algorithms,
                       const std::vector<std::uint64_t>& seeds);

/// Self-contained SVG plot of mean cumulative regret per algorithm with a
/// min-max band across seeds. Deterministic for identical inputs.
std::string regret_svg(const RegretTrace& traces, const std::vector<std::string>& algorithms);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace matrixrl
