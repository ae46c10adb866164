#pragma once

#include <Eigen/Dense>

#include "env.hpp"
#include "gram.hpp"

namespace matrixrl {

/// Which exploration-bonus coefficient the planner uses. The default pairs
/// the Frobenius confidence set with sqrt(d') scaling, valid under the
/// stronger feature-regularity condition satisfied by indicator psi; the
/// (2,1)-set variant and the plain L_psi preset are selectable.
enum class BonusMode { assumption2, assumption3, section5 };

BonusMode bonus_mode_from_string(const std::string& s);
std::string to_string(BonusMode m);

/// Anytime confidence radii for the ridge estimator of a transition core.
struct ConfidenceSchedule {
  double delta = 0.1;
  double lambda = 1.0;
  double S_bound = 1.0;
  double L_phi = 1.0;
  double L_psi = 1.0;
  double R_sub = 0.0;  // ||K_psi^{-1}|| L_psi + S L_phi
  int d = 0;
  int d_prime = 0;
  int H = 0;
  BonusMode mode = BonusMode::assumption3;

  static ConfidenceSchedule make(const FeatureMaps& features, double S_bound, double delta,
                                 double lambda, int horizon,
                                 BonusMode mode = BonusMode::assumption3);

  double sqrt_beta(int n) const;
  double beta(int n) const;             // beta_n
  double frob_radius(int n) const;      // sqrt(d' beta_n)
  double two_one_radius(int n) const;   // d' sqrt(beta_n)
  /// Bonus coefficient multiplying ||phi||_{Sigma^{-1}} at episode n.
  double bonus_coeff(int n, double C_psi) const;
};

/// Backward induction with an additive per-(s,a) bonus and value clipping to
/// [0, H]. Shared by the single-task planner and the per-task multitask
/// planner. `bonus` has one entry per phi row.
ValueTables plan_with_bonus(const Eigen::MatrixXd& model, const Eigen::VectorXd& bonus,
                            const Eigen::MatrixXd& rewards, const FeatureMaps& features,
                            int horizon);

/// Optimistic model-based agent for one task: ridge estimation of the core,
/// bonus planning once per episode, greedy acting, episode-boundary updates.
class SingleAgent {
 public:
  SingleAgent(const FeatureMaps& features, ConfidenceSchedule schedule, double bonus_scale = 1.0);

  ValueTables plan(const Eigen::MatrixXd& rewards, const FeatureMaps& features) const;
  static int act(const Eigen::MatrixXd& Q_h, int s);
  void update(const EpisodeRecord& episode, const FeatureMaps& features);

  /// Frobenius-set membership of a candidate true core at the current episode.
  bool membership(const Eigen::MatrixXd& M_star, double radius_scale = 1.0) const;

  const GramState& gram() const { return gram_; }
  const Eigen::MatrixXd& estimate() const { return m_tilde_; }
  const ConfidenceSchedule& schedule() const { return schedule_; }
  int episode_index() const { return n_; }
  double bonus_scale() const { return bonus_scale_; }

 private:
  GramState gram_;
  Eigen::MatrixXd m_tilde_;
  ConfidenceSchedule schedule_;
  double bonus_scale_;
  int n_ = 1;  // episode about to be played; estimates use data from episodes < n
};

}  // namespace matrixrl
