#include "agent_shared.hpp"

#include <cmath>
#include <stdexcept>

namespace matrixrl {

namespace {

// Exact minimizer of lambda||A||_F^2 + sum_t ||psi_tilde - A^T B^T phi||^2
// subject to ||A||_F <= cap: ridge in the projected features, with the
// multiplier raised by bisection when the unconstrained solution violates
// the cap (KKT for a convex problem, so this is the true constrained min).
Eigen::MatrixXd capped_projected_ridge(const GramState& gram, const Eigen::MatrixXd& B,
                                       double cap) {
  const Eigen::MatrixXd G = B.transpose() * gram.sigma() * B;  // lambda I_r + B^T S B
  const Eigen::MatrixXd rhs = B.transpose() * gram.target();
  Eigen::MatrixXd A = G.ldlt().solve(rhs);
  if (A.norm() <= cap) return A;

  const int r = static_cast<int>(B.cols());
  double lo = 0.0, hi = 1.0;
  const auto norm_at = [&](double mu) {
    return (G + mu * Eigen::MatrixXd::Identity(r, r)).ldlt().solve(rhs).norm();
  };
  while (norm_at(hi) > cap) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (norm_at(mid) > cap ? lo : hi) = mid;
  }
  A = (G + hi * Eigen::MatrixXd::Identity(r, r)).ldlt().solve(rhs);
  return A;
}

// Solves sum_p sigma_p B C_p = sum_p T_p A_p^T over all d x r matrices via
// vectorization; the normal equations are always consistent, so the
// rank-revealing solve below returns a global minimizer even when singular.
std::optional<Eigen::MatrixXd> solve_shared_factor(const std::vector<GramState>& grams,
                                                   const std::vector<Eigen::MatrixXd>& A) {
  const int d = grams.front().dim();
  const int r = static_cast<int>(A.front().rows());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d * r, d * r);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(d, r);
  double coupling = 0.0;
  for (std::size_t p = 0; p < grams.size(); ++p) {
    const Eigen::MatrixXd C = A[p] * A[p].transpose();  // r x r
    coupling += C.norm();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) K.block(i * d, j * d, d, d) += C(i, j) * grams[p].sigma();
    rhs.noalias() += grams[p].target() * A[p].transpose();
  }
  if (coupling < 1e-300) return std::nullopt;  // all A vanish; any B is optimal
  const Eigen::VectorXd x =
      K.completeOrthogonalDecomposition().solve(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
          rhs.data(), static_cast<long>(d) * r)));
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), d, r);
}

// Thin QR with the R factor pushed into the A's; products B A_p unchanged.
void reorthonormalize(Eigen::MatrixXd& B, std::vector<Eigen::MatrixXd>& A) {
  const int r = static_cast<int>(B.cols());
  if ((B.transpose() * B - Eigen::MatrixXd::Identity(r, r)).norm() < 1e-12) return;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), r);
  const Eigen::MatrixXd R =
      qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  B = Q;
  for (auto& Ap : A) Ap = R * Ap;
}

Eigen::MatrixXd canonical_columns(int d, int r) {
  return Eigen::MatrixXd::Identity(d, d).leftCols(r);
}

}  // namespace

double joint_objective(const std::vector<GramState>& grams, const Eigen::MatrixXd& B,
                       const std::vector<Eigen::MatrixXd>& A) {
  // With orthonormal B the regularizer lambda||A||^2 equals lambda||B A||^2,
  // so the objective depends only on the products M_p = B A_p:
  //   sum_p [ c_p - 2 tr(M_p^T T_p) + ||sigma_p^{1/2} M_p||_F^2 ].
  // Evaluating it this way keeps the trace invariant under the QR step.
  double f = 0.0;
  for (std::size_t p = 0; p < grams.size(); ++p) {
    const Eigen::MatrixXd M = B * A[p];
    f += grams[p].target_sq_norm() - 2.0 * (M.array() * grams[p].target().array()).sum() +
         grams[p].weighted_sq_frobenius(M);
  }
  return f;
}

SharedEstimate joint_factorized_ridge(std::vector<GramState> grams, int r, double s_bound,
                                      const SharedEstimate* warm_start,
                                      const JointSolveOptions& options) {
  if (grams.empty()) throw std::invalid_argument("joint_factorized_ridge: need at least one task");
  const int d = grams.front().dim();
  const int dp = grams.front().cols();
  if (r < 1 || r > d) throw std::invalid_argument("joint_factorized_ridge: need 1 <= r <= d");
  for (const auto& g : grams)
    if (g.dim() != d || g.cols() != dp || g.lambda() != grams.front().lambda())
      throw std::invalid_argument("joint_factorized_ridge: inconsistent task statistics");
  const double cap = std::sqrt(static_cast<double>(dp)) * s_bound;

  SharedEstimate est;
  est.grams = std::move(grams);
  const auto P = est.grams.size();

  if (warm_start != nullptr) {
    est.B = warm_start->B;
    est.A = warm_start->A;
    for (auto& Ap : est.A)
      if (Ap.norm() > cap) Ap *= cap / Ap.norm();
  } else {
    // Spectral start: rank-r truncation of the stacked per-task ridge solutions.
    Eigen::MatrixXd stacked(d, static_cast<long>(P) * dp);
    for (std::size_t p = 0; p < P; ++p)
      stacked.block(0, static_cast<long>(p) * dp, d, dp) = est.grams[p].ridge_solve();
    if (stacked.norm() < 1e-300) {
      est.B = canonical_columns(d, r);
      est.A.assign(P, Eigen::MatrixXd::Zero(r, dp));
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
      est.B = svd.matrixU().leftCols(r);
      est.A.clear();
      for (std::size_t p = 0; p < P; ++p) {
        Eigen::MatrixXd Ap = est.B.transpose() * est.grams[p].ridge_solve();
        if (Ap.norm() > cap) Ap *= cap / Ap.norm();
        est.A.push_back(std::move(Ap));
      }
    }
  }

  est.objective_trace.push_back(joint_objective(est.grams, est.B, est.A));
  est.converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    Eigen::MatrixXd B_prev = est.B;
    std::vector<Eigen::MatrixXd> A_prev = est.A;

    if (auto B_new = solve_shared_factor(est.grams, est.A)) {
      est.B = *B_new;
      reorthonormalize(est.B, est.A);
    }
    for (std::size_t p = 0; p < P; ++p)
      est.A[p] = capped_projected_ridge(est.grams[p], est.B, cap);

    const double f_prev = est.objective_trace.back();
    const double f_new = joint_objective(est.grams, est.B, est.A);
    if (f_new > f_prev) {  // float-level noise; keep the previous iterate
      est.B = std::move(B_prev);
      est.A = std::move(A_prev);
      est.converged = true;
      break;
    }
    est.objective_trace.push_back(f_new);
    if (f_prev - f_new <= options.tol * std::max(1.0, std::abs(f_prev))) {
      est.converged = true;
      break;
    }
  }
  return est;
}

SharedRadiusSchedule SharedRadiusSchedule::make(const FeatureMaps& features, double S_bound,
                                                int r, int P, double delta, double lambda,
                                                int horizon) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("SharedRadiusSchedule: delta must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("SharedRadiusSchedule: lambda must be > 0");
  if (horizon < 1 || r < 1 || P < 1)
    throw std::invalid_argument("SharedRadiusSchedule: horizon, r and P must be >= 1");

  SharedRadiusSchedule s;
  s.delta = delta;
  s.lambda = lambda;
  s.S_bound = S_bound;
  s.L_phi = features.L_phi;
  s.L_psi = features.L_psi;
  s.d = features.d();
  s.r = r;
  s.d_prime = features.d_prime();
  s.P = P;
  s.H = horizon;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(features.K_psi);
  s.R_sub = (1.0 / es.eigenvalues().minCoeff()) * s.L_psi + s.S_bound * s.L_phi;
  s.b = 2.0 * s.R_sub * s.d_prime * s.S_bound * s.L_psi;
  return s;
}

double SharedRadiusSchedule::beta_prime(int n) const {
  if (n < 1) throw std::invalid_argument("SharedRadiusSchedule: episode index must be >= 1");
  const double nhp = static_cast<double>(n) * H * P;
  const double lead = k.main_sq * R_sub * R_sub + k.main_b * b;
  const double cover = (static_cast<double>(d) * r + static_cast<double>(r) * d_prime * P) *
                       (std::log(k.cover_s * S_bound) + std::log(nhp) +
                        std::log(k.cover_rl * R_sub * L_phi));
  const double bracket =
      k.loglog * std::log(std::log(2.0 * nhp)) + k.additive + std::log(1.0 / delta) + cover;
  return 1.0 + L_phi * S_bound + b * b / (2.0 * R_sub * R_sub) + lead * bracket;
}

double SharedRadiusSchedule::gamma(int n) const {
  return 2.0 * beta_prime(n) +
         2.0 * P * std::sqrt(static_cast<double>(d_prime)) * S_bound * lambda;
}

MembershipReport check_joint_membership(const SharedEstimate& est,
                                        const std::vector<Eigen::MatrixXd>& true_cores,
                                        const SharedRadiusSchedule& schedule, int n,
                                        double radius_scale) {
  if (true_cores.size() != est.grams.size())
    throw std::invalid_argument("check_joint_membership: task count mismatch");
  MembershipReport rep;
  for (std::size_t p = 0; p < true_cores.size(); ++p)
    rep.lhs += est.grams[p].weighted_sq_frobenius(true_cores[p] -
                                                  est.product(static_cast<int>(p)));
  rep.gamma = radius_scale * schedule.gamma(n);
  rep.member = rep.lhs <= rep.gamma;
  return rep;
}

AllocationMethod allocation_from_string(const std::string& s) {
  if (s == "equal") return AllocationMethod::equal;
  if (s == "greedy") return AllocationMethod::greedy;
  throw std::invalid_argument("unknown allocation method: " + s);
}

std::string to_string(AllocationMethod m) {
  return m == AllocationMethod::equal ? "equal" : "greedy";
}

double RadiusAllocation::sq_sum() const {
  double s = 0.0;
  for (double t : tau) s += t * t;
  return s;
}

ValueTables plan_task(const Eigen::MatrixXd& model, double tau, const GramState& gram,
                      const Eigen::MatrixXd& rewards, const FeatureMaps& features, int horizon,
                      double bonus_scale) {
  const double coeff = bonus_scale * 2.0 * features.C_psi * horizon * tau;
  Eigen::VectorXd bonus(features.phi.rows());
  for (long i = 0; i < features.phi.rows(); ++i)
    bonus(i) = coeff * gram.inv_norm(features.phi.row(i));
  return plan_with_bonus(model, bonus, rewards, features, horizon);
}

namespace {

double context_value(const PlanContext& c, double tau) {
  const double coeff = c.bonus_coeff_base * tau;
  Eigen::VectorXd bonus(c.features->phi.rows());
  for (long i = 0; i < c.features->phi.rows(); ++i)
    bonus(i) = coeff * c.gram->inv_norm(c.features->phi.row(i));
  const ValueTables t = plan_with_bonus(*c.model, bonus, *c.rewards, *c.features, c.horizon);
  return t.V.front()(c.start_state);
}

}  // namespace

RadiusAllocation allocate_radii(double budget, const std::vector<PlanContext>& contexts,
                                AllocationMethod method, int sweeps) {
  if (budget < 0.0) throw std::invalid_argument("allocate_radii: budget must be >= 0");
  const auto P = contexts.size();
  if (P == 0) throw std::invalid_argument("allocate_radii: no tasks");

  RadiusAllocation alloc;
  alloc.budget = budget;
  alloc.tau.assign(P, std::sqrt(budget / static_cast<double>(P)));
  if (method == AllocationMethod::equal || budget == 0.0) return alloc;

  // Pairwise exchange ascent on the squared radii; the summed value is
  // separable across tasks so only the two moved coordinates get re-planned.
  std::vector<double> u(P, budget / static_cast<double>(P));
  std::vector<double> value(P);
  for (std::size_t p = 0; p < P; ++p) value[p] = context_value(contexts[p], std::sqrt(u[p]));

  const double fractions[] = {0.5, 0.25, 0.125};
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (std::size_t i = 0; i < P; ++i) {
      for (std::size_t j = 0; j < P; ++j) {
        if (i == j || u[j] <= 0.0) continue;
        for (double f : fractions) {
          const double delta = f * u[j];
          const double vi = context_value(contexts[i], std::sqrt(u[i] + delta));
          const double vj = context_value(contexts[j], std::sqrt(u[j] - delta));
          if (vi + vj > value[i] + value[j] + 1e-12) {
            u[i] += delta;
            u[j] -= delta;
            value[i] = vi;
            value[j] = vj;
            improved = true;
            break;
          }
        }
      }
    }
    if (!improved) break;
  }
  for (std::size_t p = 0; p < P; ++p) alloc.tau[p] = std::sqrt(u[p]);
  return alloc;
}

SharedAgent::SharedAgent(const FeatureMaps& features, int n_tasks, int r, double s_bound,
                         SharedRadiusSchedule schedule, AllocationMethod allocation,
                         double bonus_scale, JointSolveOptions solve_options)
    : schedule_(schedule),
      allocation_(allocation),
      bonus_scale_(bonus_scale),
      solve_options_(solve_options) {
  if (n_tasks < 1) throw std::invalid_argument("SharedAgent: need at least one task");
  if (!(bonus_scale > 0.0)) throw std::invalid_argument("SharedAgent: bonus_scale must be > 0");
  std::vector<GramState> grams;
  grams.reserve(static_cast<std::size_t>(n_tasks));
  for (int p = 0; p < n_tasks; ++p)
    grams.emplace_back(features.d(), schedule.lambda, features.d_prime());
  est_ = joint_factorized_ridge(std::move(grams), r, s_bound, nullptr, solve_options_);
}

std::vector<ValueTables> SharedAgent::plan_all(const std::vector<Eigen::MatrixXd>& rewards,
                                               const FeatureMaps& features,
                                               const std::vector<int>& start_states) {
  const auto P = est_.grams.size();
  if (rewards.size() != P || start_states.size() != P)
    throw std::invalid_argument("SharedAgent::plan_all: per-task inputs must match task count");

  std::vector<Eigen::MatrixXd> models;
  models.reserve(P);
  for (std::size_t p = 0; p < P; ++p) models.push_back(est_.product(static_cast<int>(p)));

  std::vector<PlanContext> contexts(P);
  for (std::size_t p = 0; p < P; ++p) {
    contexts[p] = PlanContext{&models[p],
                              &est_.grams[p],
                              &rewards[p],
                              &features,
                              schedule_.H,
                              bonus_scale_ * 2.0 * features.C_psi * schedule_.H,
                              start_states[p]};
  }
  last_alloc_ = allocate_radii(schedule_.gamma(n_), contexts, allocation_);

  std::vector<ValueTables> tables;
  tables.reserve(P);
  for (std::size_t p = 0; p < P; ++p)
    tables.push_back(plan_task(models[p], last_alloc_.tau[p], est_.grams[p], rewards[p], features,
                               schedule_.H, bonus_scale_));
  return tables;
}

void SharedAgent::update(const std::vector<EpisodeRecord>& episodes, const FeatureMaps& features) {
  if (episodes.size() != est_.grams.size())
    throw std::invalid_argument("SharedAgent::update: exactly one episode per task required");
  const Eigen::MatrixXd psi_tilde = features.psi_tilde_rows();
  for (std::size_t p = 0; p < episodes.size(); ++p) {
    if (episodes[p].task != static_cast<int>(p))
      throw std::invalid_argument("SharedAgent::update: episodes must be ordered by task");
    for (const auto& step : episodes[p].steps)
      est_.grams[p].absorb(features.phi_row(step.state, step.action),
                           psi_tilde.row(step.next_state));
  }
  SharedEstimate warm = est_;
  est_ = joint_factorized_ridge(std::move(est_.grams), warm.rank(),
                                schedule_.S_bound, &warm, solve_options_);
  ++n_;
}

}  // namespace matrixrl
