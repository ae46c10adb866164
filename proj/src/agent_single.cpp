#include "agent_single.hpp"

#include <cmath>
#include <stdexcept>

namespace matrixrl {

BonusMode bonus_mode_from_string(const std::string& s) {
  if (s == "assumption2") return BonusMode::assumption2;
  if (s == "assumption3") return BonusMode::assumption3;
  if (s == "section5") return BonusMode::section5;
  throw std::invalid_argument("unknown bonus mode: " + s);
}

std::string to_string(BonusMode m) {
  switch (m) {
    case BonusMode::assumption2: return "assumption2";
    case BonusMode::assumption3: return "assumption3";
    case BonusMode::section5: return "section5";
  }
  return "assumption3";
}

ConfidenceSchedule ConfidenceSchedule::make(const FeatureMaps& features, double S_bound,
                                            double delta, double lambda, int horizon,
                                            BonusMode mode) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("ConfidenceSchedule: delta must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("ConfidenceSchedule: lambda must be > 0");
  if (horizon < 1) throw std::invalid_argument("ConfidenceSchedule: horizon must be >= 1");

  ConfidenceSchedule cs;
  cs.delta = delta;
  cs.lambda = lambda;
  cs.S_bound = S_bound;
  cs.L_phi = features.L_phi;
  cs.L_psi = features.L_psi;
  cs.d = features.d();
  cs.d_prime = features.d_prime();
  cs.H = horizon;
  cs.mode = mode;
  // Operator norm of K_psi^{-1}; K_psi is SPD so this is 1/lambda_min(K_psi).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(features.K_psi);
  cs.R_sub = (1.0 / es.eigenvalues().minCoeff()) * cs.L_psi + cs.S_bound * cs.L_phi;
  return cs;
}

double ConfidenceSchedule::sqrt_beta(int n) const {
  if (n < 1) throw std::invalid_argument("ConfidenceSchedule: episode index must be >= 1");
  const double dp = static_cast<double>(d_prime);
  const double arg = (dp + dp * n * H * L_phi * L_phi / lambda) / delta;
  return R_sub * std::sqrt(d * std::log(arg)) + std::sqrt(lambda) * S_bound;
}

double ConfidenceSchedule::beta(int n) const {
  const double sb = sqrt_beta(n);
  return sb * sb;
}

double ConfidenceSchedule::frob_radius(int n) const {
  return std::sqrt(static_cast<double>(d_prime)) * sqrt_beta(n);
}

double ConfidenceSchedule::two_one_radius(int n) const {
  return static_cast<double>(d_prime) * sqrt_beta(n);
}

double ConfidenceSchedule::bonus_coeff(int n, double C_psi) const {
  switch (mode) {
    case BonusMode::assumption2: return 2.0 * C_psi * H * two_one_radius(n);
    case BonusMode::assumption3: return 2.0 * C_psi * H * frob_radius(n);
    case BonusMode::section5: return 2.0 * L_psi * H * sqrt_beta(n);
  }
  return 2.0 * C_psi * H * frob_radius(n);
}

ValueTables plan_with_bonus(const Eigen::MatrixXd& model, const Eigen::VectorXd& bonus,
                            const Eigen::MatrixXd& rewards, const FeatureMaps& features,
                            int horizon) {
  const int S = features.n_states, A = features.n_actions;
  if (bonus.size() != features.phi.rows())
    throw std::invalid_argument("plan_with_bonus: bonus length must match phi rows");
  // Predicted next-state weights per (s,a); rows need not be distributions
  // for an estimated model, backward induction uses them as-is.
  const Eigen::MatrixXd pred = features.phi * model * features.psi.transpose();

  ValueTables out;
  out.Q.assign(static_cast<std::size_t>(horizon), Eigen::MatrixXd::Zero(S, A));
  out.V.assign(static_cast<std::size_t>(horizon) + 1, Eigen::VectorXd::Zero(S));
  for (int h = horizon - 1; h >= 0; --h) {
    const Eigen::VectorXd next = pred * out.V[static_cast<std::size_t>(h) + 1];
    auto& Q = out.Q[static_cast<std::size_t>(h)];
    auto& V = out.V[static_cast<std::size_t>(h)];
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const int idx = features.row_index(s, a);
        Q(s, a) = rewards(s, a) + next(idx) + bonus(idx);
      }
      V(s) = std::clamp(Q.row(s).maxCoeff(), 0.0, static_cast<double>(horizon));
    }
  }
  return out;
}

SingleAgent::SingleAgent(const FeatureMaps& features, ConfidenceSchedule schedule,
                         double bonus_scale)
    : gram_(features.d(), schedule.lambda, features.d_prime()),
      m_tilde_(Eigen::MatrixXd::Zero(features.d(), features.d_prime())),
      schedule_(schedule),
      bonus_scale_(bonus_scale) {
  if (!(bonus_scale > 0.0)) throw std::invalid_argument("SingleAgent: bonus_scale must be > 0");
}

ValueTables SingleAgent::plan(const Eigen::MatrixXd& rewards, const FeatureMaps& features) const {
  const double coeff = bonus_scale_ * schedule_.bonus_coeff(n_, features.C_psi);
  Eigen::VectorXd bonus(features.phi.rows());
  for (long i = 0; i < features.phi.rows(); ++i)
    bonus(i) = coeff * gram_.inv_norm(features.phi.row(i));
  return plan_with_bonus(m_tilde_, bonus, rewards, features, schedule_.H);
}

int SingleAgent::act(const Eigen::MatrixXd& Q_h, int s) {
  int best = 0;
  for (int a = 1; a < Q_h.cols(); ++a)
    if (Q_h(s, a) > Q_h(s, best)) best = a;
  return best;
}

void SingleAgent::update(const EpisodeRecord& episode, const FeatureMaps& features) {
  const Eigen::MatrixXd psi_tilde = features.psi_tilde_rows();
  for (const auto& step : episode.steps)
    gram_.absorb(features.phi_row(step.state, step.action), psi_tilde.row(step.next_state));
  m_tilde_ = gram_.ridge_solve();
  ++n_;
}

bool SingleAgent::membership(const Eigen::MatrixXd& M_star, double radius_scale) const {
  const double radius = radius_scale * schedule_.frob_radius(n_);
  return gram_.weighted_sq_frobenius(M_star - m_tilde_) <= radius * radius;
}

}  // namespace matrixrl
