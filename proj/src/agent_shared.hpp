#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "agent_single.hpp"
#include "env.hpp"
#include "gram.hpp"

namespace matrixrl {

/// Joint factorized ridge estimate: one shared orthonormal-column factor B and
/// per-task factors A^(p), together with the per-task design statistics and
/// the objective value recorded after every alternation sweep.
struct SharedEstimate {
  Eigen::MatrixXd B;                  // d x r, orthonormal columns
  std::vector<Eigen::MatrixXd> A;     // P matrices, r x d'
  std::vector<GramState> grams;       // per-task design statistics
  std::vector<double> objective_trace;
  bool converged = true;

  int rank() const { return static_cast<int>(B.cols()); }
  Eigen::MatrixXd product(int p) const { return B * A[static_cast<std::size_t>(p)]; }
};

struct JointSolveOptions {
  double tol = 1e-8;    // relative objective decrease below which we stop
  int max_sweeps = 100;
};

/// Alternating minimization of the joint objective
///   sum_p [ lambda ||A^(p)||_F^2 + sum_t ||psi_tilde_t - (B A^(p))^T phi_t||^2 ]
/// over orthonormal-column B and Frobenius-capped A^(p) (cap = sqrt(d') S).
/// Each A half-step is the exact capped ridge solution in the projected
/// features B^T phi; each B half-step solves the normal equations over all
/// d x r matrices, followed by a thin-QR re-orthonormalization whose R factor
/// is pushed into the A's so the products, and hence the objective, are
/// unchanged. The recorded trace is nonincreasing by construction.
/// With no data the estimate is the leading canonical columns and A = 0.
SharedEstimate joint_factorized_ridge(std::vector<GramState> grams, int r, double s_bound,
                                      const SharedEstimate* warm_start = nullptr,
                                      const JointSolveOptions& options = {});

/// Objective value of the joint factorized ridge problem at (B, A).
double joint_objective(const std::vector<GramState>& grams, const Eigen::MatrixXd& B,
                       const std::vector<Eigen::MatrixXd>& A);

/// Coefficients of the shared-radius formula, kept adjustable because the
/// leading constants are conventions rather than structure.
struct SharedRadiusConstants {
  double main_sq = 12.0;  // coefficient of R^2 in the leading factor
  double main_b = 1.0;    // coefficient of b in the leading factor
  double loglog = 2.0;    // coefficient of ln ln(2 n H P)
  double additive = 3.0;  // additive constant inside the bracket
  double cover_s = 5.0;   // ln(cover_s * S) covering term
  double cover_rl = 2.0;  // ln(cover_rl * R * L_phi) covering term
};

/// Joint confidence radius across the task family:
///   beta'(n) = 1 + L_phi S + b^2/(2 R^2)
///            + (12 R^2 + b) ( 2 lnln(2 n H P) + 3 + ln(1/delta)
///                             + (d r + r d' P)(ln(5 S) + ln(n H P) + ln(2 R L_phi)) )
///   gamma(n) = 2 beta'(n) + 2 P sqrt(d') S lambda
/// with b = 2 R d' S L_psi. Nondecreasing in n.
struct SharedRadiusSchedule {
  double delta = 0.1;
  double lambda = 1.0;
  double S_bound = 1.0;
  double L_phi = 1.0;
  double L_psi = 1.0;
  double R_sub = 0.0;
  double b = 0.0;
  int d = 0;
  int r = 0;
  int d_prime = 0;
  int P = 0;
  int H = 0;
  SharedRadiusConstants k;

  static SharedRadiusSchedule make(const FeatureMaps& features, double S_bound, int r, int P,
                                   double delta, double lambda, int horizon);
  double beta_prime(int n) const;
  double gamma(int n) const;
};

struct MembershipReport {
  double lhs = 0.0;
  double gamma = 0.0;
  bool member = false;
};

/// Sum over tasks of the design-weighted squared Frobenius distance between
/// the true cores and the current products, against the joint radius.
MembershipReport check_joint_membership(const SharedEstimate& est,
                                        const std::vector<Eigen::MatrixXd>& true_cores,
                                        const SharedRadiusSchedule& schedule, int n,
                                        double radius_scale = 1.0);

enum class AllocationMethod { equal, greedy };
AllocationMethod allocation_from_string(const std::string& s);
std::string to_string(AllocationMethod m);

struct RadiusAllocation {
  std::vector<double> tau;
  double budget = 0.0;
  double sq_sum() const;
};

/// Inputs needed to evaluate one task's planned initial value at a candidate
/// radius. bonus_coeff_base multiplies tau * ||phi||_{Sigma^{-1}}.
struct PlanContext {
  const Eigen::MatrixXd* model = nullptr;    // d x d' product for this task
  const GramState* gram = nullptr;
  const Eigen::MatrixXd* rewards = nullptr;
  const FeatureMaps* features = nullptr;
  int horizon = 0;
  double bonus_coeff_base = 0.0;
  int start_state = 0;
};

/// Splits the squared-radius budget across tasks. `equal` gives every task
/// sqrt(budget/P). `greedy` starts from the equal split and runs pairwise
/// exchange ascent on the squared radii, accepting only transfers that
/// increase the summed planned initial values; the budget constraint stays
/// active throughout and the result is never worse than the equal split.
RadiusAllocation allocate_radii(double budget, const std::vector<PlanContext>& contexts,
                                AllocationMethod method, int sweeps = 20);

/// Per-task bonus planning under the shared estimate with radius tau.
ValueTables plan_task(const Eigen::MatrixXd& model, double tau, const GramState& gram,
                      const Eigen::MatrixXd& rewards, const FeatureMaps& features, int horizon,
                      double bonus_scale = 1.0);

/// Multitask agent: joint estimation across P tasks, a shared confidence
/// budget split into per-task radii, and per-task optimistic planning.
class SharedAgent {
 public:
  SharedAgent(const FeatureMaps& features, int n_tasks, int r, double s_bound,
              SharedRadiusSchedule schedule, AllocationMethod allocation,
              double bonus_scale = 1.0, JointSolveOptions solve_options = {});

  /// Allocates radii for the current episode and plans every task.
  std::vector<ValueTables> plan_all(const std::vector<Eigen::MatrixXd>& rewards,
                                    const FeatureMaps& features,
                                    const std::vector<int>& start_states);

  /// Absorbs exactly one episode per task, refits the joint estimate
  /// (warm-started), and advances the episode index.
  void update(const std::vector<EpisodeRecord>& episodes, const FeatureMaps& features);

  const SharedEstimate& estimate() const { return est_; }
  const SharedRadiusSchedule& schedule() const { return schedule_; }
  const RadiusAllocation& last_allocation() const { return last_alloc_; }
  int episode_index() const { return n_; }
  double bonus_scale() const { return bonus_scale_; }

 private:
  SharedEstimate est_;
  SharedRadiusSchedule schedule_;
  AllocationMethod allocation_;
  double bonus_scale_;
  JointSolveOptions solve_options_;
  RadiusAllocation last_alloc_;
  int n_ = 1;
};

}  // namespace matrixrl
