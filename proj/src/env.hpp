#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace matrixrl {

/// State-action and next-state embeddings with their norm bounds and the
/// next-state Gram matrix K_psi (cached inverse). phi rows are indexed by
/// s * n_actions + a.
struct FeatureMaps {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd phi;        // (S*A) x d
  Eigen::MatrixXd psi;        // S x d'
  double L_phi = 0.0;         // row-norm bound for phi
  double L_psi = 0.0;         // row-norm bound for psi
  Eigen::MatrixXd K_psi;      // d' x d', sum_s psi(s) psi(s)^T
  Eigen::MatrixXd K_psi_inv;  // cached inverse
  double C_psi = 0.0;         // sup_v ||Psi^T v||_2 / ||v||_inf
  double C_psi_prime = 0.0;   // max row norm of Psi K_psi^{-1}

  int d() const { return static_cast<int>(phi.cols()); }
  int d_prime() const { return static_cast<int>(psi.cols()); }
  int row_index(int s, int a) const { return s * n_actions + a; }
  Eigen::VectorXd phi_row(int s, int a) const { return phi.row(row_index(s, a)); }
  /// Row s' is K_psi^{-1} psi(s'), the regression target for next state s'.
  Eigen::MatrixXd psi_tilde_rows() const { return psi * K_psi_inv.transpose(); }

  /// Builds derived fields (K_psi, inverse, regularity constants) from phi/psi
  /// and the given norm bounds, then validates.
  static FeatureMaps make(int n_states, int n_actions, Eigen::MatrixXd phi, Eigen::MatrixXd psi,
                          double L_phi, double L_psi);
  void validate() const;  // throws std::invalid_argument on violated bounds
};

/// A d x d' core matrix inducing transition kernels P(s'|s,a) = phi(s,a)^T M psi(s').
struct TransitionCore {
  Eigen::MatrixXd M;
  double S_bound = 0.0;  // column-norm cap, ||M[:,i]|| <= S_bound
};

struct InstanceConfig {
  int n_states = 0;
  int n_actions = 0;
  int d = 0;
  int d_prime = 0;
  int r = 0;
  int P = 0;
  std::uint64_t seed = 0;
  // Generator concentrations; smaller values give spikier rows.
  double phi_alpha = 0.5;
  double mix_alpha = 0.5;
  double anchor_alpha = 0.3;
  // Fraction of (s,a) cells with nonzero reward; 1.0 gives dense uniform
  // tables, smaller values give sparse goal-like tasks (at least one
  // rewarded cell per task is guaranteed).
  double reward_density = 1.0;
  std::string start_mode = "fixed0";  // "fixed0" or "uniform"
};

/// A family of P tasks whose cores share the factorization M^(p) = B* A*^(p)
/// through one orthonormal-column B*.
struct TaskFamily {
  InstanceConfig config;
  FeatureMaps features;
  Eigen::MatrixXd B_star;               // d x r, orthonormal columns
  std::vector<Eigen::MatrixXd> A_star;  // P matrices, r x d'
  std::vector<TransitionCore> cores;    // P cores with M^(p) = B* A*^(p)
  std::vector<Eigen::MatrixXd> rewards; // P tables, S x A, entries in [0,1]
  double S_bound = 0.0;                 // family-wide column-norm cap

  int task_count() const { return static_cast<int>(cores.size()); }
  void validate() const;
};

struct EpisodeStep {
  int state = 0;
  int action = 0;
  int next_state = 0;
  double reward = 0.0;
};

struct EpisodeRecord {
  int task = 0;
  int episode = 0;
  int start_state = 0;
  std::vector<EpisodeStep> steps;
};

/// Generates a task family satisfying all model invariants: simplex phi rows,
/// indicator psi (so K_psi = I and d' must equal n_states), exactly stochastic
/// rank-<=r cores built from shared simplex mixing weights, and (B*, A*)
/// extracted by a thin SVD of the stacked cores. Retries on degenerate draws
/// up to 10 times before failing.
TaskFamily make_instance(const InstanceConfig& cfg);

/// Phi * M * Psi^T; rows are probability vectors when the core is valid.
Eigen::MatrixXd transition_matrix(const TransitionCore& core, const FeatureMaps& features);

/// One transition row phi(s,a)^T M Psi^T.
Eigen::VectorXd transition_row(const TransitionCore& core, const FeatureMaps& features, int s,
                               int a);

/// Categorical sample from a transition row. Entries below zero are clamped
/// (magnitudes are at most 1e-12 on valid cores) and the row is renormalized;
/// a row sum off by more than 1e-6 is an environment error.
int sample_from_row(const Eigen::Ref<const Eigen::VectorXd>& row, Rng& rng);
int sample_step(const TransitionCore& core, const FeatureMaps& features, int s, int a, Rng& rng);

struct ValueTables {
  std::vector<Eigen::MatrixXd> Q;  // h = 1..H, S x A
  std::vector<Eigen::VectorXd> V;  // h = 1..H+1, V[H] is the zero tail
};

/// Backward induction on the true kernel; the optimal-policy benchmark.
ValueTables exact_values(const TransitionCore& core, const FeatureMaps& features,
                         const Eigen::MatrixXd& rewards, int horizon);

/// Greedy policy (lowest-index tie break) from planned Q tables, (H x S).
Eigen::MatrixXi greedy_policy(const ValueTables& tables);

}  // namespace matrixrl
