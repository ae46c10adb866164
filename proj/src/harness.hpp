#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agent_shared.hpp"
#include "agent_single.hpp"
#include "env.hpp"

namespace matrixrl {

struct RunConfig {
  InstanceConfig instance;
  int N = 0;
  int H = 0;
  double delta = 0.1;
  double lambda = 1.0;
  double bonus_scale = 1.0;
  BonusMode bonus_mode = BonusMode::assumption3;
  AllocationMethod allocation = AllocationMethod::equal;
  std::vector<std::string> algorithms = {"shared", "independent", "oracle"};
  std::vector<std::uint64_t> seeds;
  bool audits = true;
  int audit_runs = 200;
  int audit_episodes = 30;
  int lemma_trials = 1000;
  double audit_radius_scale = 1.0;
  int threads = 0;  // 0 = auto; capped by MATRIXRL_THREADS

  void validate() const;
};

/// Per-algorithm, per-seed regret arrays. Instantaneous regret at episode n is
/// the summed gap across tasks between the optimal value and the exact value
/// of the policy played; cumulative is its running sum.
struct RegretTrace {
  // traces[algorithm][seed_index][episode-1]
  std::map<std::string, std::vector<std::vector<double>>> instant;
  std::map<std::string, std::vector<std::vector<double>>> cumulative;
};

struct CoverageCounter {
  long pairs = 0;
  long violations = 0;
  double rate() const { return pairs == 0 ? 0.0 : static_cast<double>(violations) / pairs; }
};

struct AuditReport {
  double delta = 0.1;
  int runs = 0;
  int episodes = 0;
  bool optimism_checked = false;  // only meaningful at theory bonus scale

  CoverageCounter single_coverage;
  CoverageCounter shared_coverage;

  long single_optimism_checked = 0;
  long single_optimism_violations = 0;
  long shared_optimism_checked = 0;
  long shared_optimism_violations = 0;

  long bellman_checked = 0;
  long bellman_violations = 0;
  double bellman_worst_margin = -1e300;  // max of (lhs - rhs); negative when safe

  long martingale_streams = 0;
  long martingale_within = 0;
  double martingale_fraction() const {
    return martingale_streams == 0
               ? 1.0
               : static_cast<double>(martingale_within) / martingale_streams;
  }

  int det_trials = 0, det_failures = 0;
  int lazy_trials = 0, lazy_failures = 0;
  int quad_trials = 0, quad_failures = 0;

  void merge(const AuditReport& other);
};

struct SeedStatus {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string message;
};

struct ExperimentResult {
  RegretTrace traces;
  std::vector<std::uint64_t> trace_seeds;  // seeds aligned with the trace rows
  AuditReport audits;
  std::vector<SeedStatus> statuses;
  TaskFamily first_instance;  // instance for the first seed, for serialization
};

/// Exact backward policy evaluation on the true kernel; V_1 over states.
Eigen::VectorXd evaluate_policy(const TransitionCore& core, const FeatureMaps& features,
                                const Eigen::MatrixXd& rewards, const Eigen::MatrixXi& policy,
                                int horizon);

/// All per-stage value vectors of a policy, h = 1..H+1.
std::vector<Eigen::VectorXd> evaluate_policy_full(const TransitionCore& core,
                                                  const FeatureMaps& features,
                                                  const Eigen::MatrixXd& rewards,
                                                  const Eigen::MatrixXi& policy, int horizon);

/// Runs every selected algorithm on identical per-seed instances and records
/// exact-evaluation regret traces plus (optionally) membership, optimism,
/// Bellman-error and martingale audits. Seeds run in parallel; each seed's
/// randomness comes from its own substreams, so results do not depend on the
/// thread count. A failing seed is reported in its status and does not abort
/// the batch.
ExperimentResult run_experiment(const RunConfig& config);

/// Monte-Carlo coverage of the single-task and joint confidence sets at
/// theory-scale radii, with optimism and Bellman-error audits on the same
/// runs. Requires n_runs >= 100.
AuditReport coverage_audit(const RunConfig& config, int n_runs);

/// Randomized determinant-bound trials (fills det/lazy/quad counters).
AuditReport lemma_trials(int trials, std::uint64_t seed);

int resolve_thread_count(int requested);

}  // namespace matrixrl
