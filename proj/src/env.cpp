#include "env.hpp"

#include <cmath>
#include <stdexcept>

namespace matrixrl {

namespace {

constexpr double kStochasticTol = 1e-9;
constexpr double kEntryTol = 1e-12;
constexpr double kSampleSumTol = 1e-6;

// Exact sup of ||Psi^T v||_2 / ||v||_inf. The sup over the unit-inf ball of a
// convex function is attained at a sign vector; enumeration is exact for
// small state counts, otherwise the row-norm-sum bound is used.
double measure_c_psi(const Eigen::MatrixXd& psi) {
  const int S = static_cast<int>(psi.rows());
  if (psi.isIdentity(1e-14)) return std::sqrt(static_cast<double>(S));
  if (S <= 16) {
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << S); ++mask) {
      Eigen::VectorXd v(S);
      for (int s = 0; s < S; ++s) v(s) = (mask >> s) & 1 ? 1.0 : -1.0;
      best = std::max(best, (psi.transpose() * v).norm());
    }
    return best;
  }
  double sum = 0.0;
  for (int s = 0; s < S; ++s) sum += psi.row(s).norm();
  return sum;
}

}  // namespace

FeatureMaps FeatureMaps::make(int n_states, int n_actions, Eigen::MatrixXd phi,
                              Eigen::MatrixXd psi, double L_phi, double L_psi) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("FeatureMaps: state and action counts must be >= 1");
  if (phi.rows() != static_cast<long>(n_states) * n_actions)
    throw std::invalid_argument("FeatureMaps: phi must have n_states*n_actions rows");
  if (psi.rows() != n_states) throw std::invalid_argument("FeatureMaps: psi must have n_states rows");

  FeatureMaps f;
  f.n_states = n_states;
  f.n_actions = n_actions;
  f.phi = std::move(phi);
  f.psi = std::move(psi);
  f.L_phi = L_phi;
  f.L_psi = L_psi;
  f.K_psi = f.psi.transpose() * f.psi;
  Eigen::LLT<Eigen::MatrixXd> llt(f.K_psi);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("FeatureMaps: K_psi must be positive definite");
  f.K_psi_inv = llt.solve(Eigen::MatrixXd::Identity(f.d_prime(), f.d_prime()));
  f.C_psi = measure_c_psi(f.psi);
  f.C_psi_prime = (f.psi * f.K_psi_inv).rowwise().norm().maxCoeff();
  f.validate();
  return f;
}

void FeatureMaps::validate() const {
  for (long i = 0; i < phi.rows(); ++i)
    if (phi.row(i).norm() > L_phi + 1e-9)
      throw std::invalid_argument("FeatureMaps: phi row norm exceeds L_phi");
  for (long s = 0; s < psi.rows(); ++s)
    if (psi.row(s).norm() > L_psi + 1e-9)
      throw std::invalid_argument("FeatureMaps: psi row norm exceeds L_psi");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K_psi);
  if (es.eigenvalues().minCoeff() < 1e-8)
    throw std::invalid_argument("FeatureMaps: K_psi smallest eigenvalue below 1e-8");
  // C_psi must dominate the measured sup over canonical basis vectors.
  for (long s = 0; s < psi.rows(); ++s)
    if (psi.row(s).norm() > C_psi + 1e-9)
      throw std::invalid_argument("FeatureMaps: C_psi below canonical-vector sup");
}

void TaskFamily::validate() const {
  features.validate();
  const int r = static_cast<int>(B_star.cols());
  if ((B_star.transpose() * B_star - Eigen::MatrixXd::Identity(r, r)).norm() > 1e-10)
    throw std::invalid_argument("TaskFamily: B_star columns are not orthonormal");
  const Eigen::MatrixXd psi_t = features.psi.transpose();
  for (int p = 0; p < task_count(); ++p) {
    if ((cores[p].M - B_star * A_star[p]).norm() > 1e-10)
      throw std::invalid_argument("TaskFamily: core does not match B_star * A_star");
    const double cap = std::sqrt(static_cast<double>(features.d_prime())) * S_bound;
    if (A_star[p].norm() > cap + 1e-9)
      throw std::invalid_argument("TaskFamily: A_star Frobenius norm exceeds sqrt(d') * S");
    for (long i = 0; i < cores[p].M.cols(); ++i)
      if (cores[p].M.col(i).norm() > cores[p].S_bound + 1e-9)
        throw std::invalid_argument("TaskFamily: core column norm exceeds S bound");
    const Eigen::MatrixXd T = features.phi * cores[p].M * psi_t;
    for (long row = 0; row < T.rows(); ++row) {
      if (T.row(row).minCoeff() < -kEntryTol)
        throw std::invalid_argument("TaskFamily: negative transition probability");
      if (std::abs(T.row(row).sum() - 1.0) > kStochasticTol)
        throw std::invalid_argument("TaskFamily: transition row does not sum to 1");
    }
    if (rewards[p].minCoeff() < 0.0 || rewards[p].maxCoeff() > 1.0)
      throw std::invalid_argument("TaskFamily: rewards outside [0,1]");
  }
}

namespace {

TaskFamily generate_once(const InstanceConfig& cfg, std::uint64_t attempt) {
  const int S = cfg.n_states, A = cfg.n_actions, d = cfg.d, r = cfg.r, P = cfg.P;
  Rng rng = substream(cfg.seed, "gen", attempt);

  // phi rows on the d-simplex; l2 norm <= l1 norm = 1, so L_phi = 1.
  Eigen::MatrixXd phi(S * A, d);
  for (int i = 0; i < S * A; ++i) {
    const auto w = sample_simplex(rng, d, cfg.phi_alpha);
    for (int j = 0; j < d; ++j) phi(i, j) = w[static_cast<std::size_t>(j)];
  }

  // Shared mixing weights (rows on the r-simplex) and per-task anchor
  // distributions over states give exactly stochastic rank-<=r cores.
  Eigen::MatrixXd mix(d, r);
  for (int i = 0; i < d; ++i) {
    const auto w = sample_simplex(rng, r, cfg.mix_alpha);
    for (int j = 0; j < r; ++j) mix(i, j) = w[static_cast<std::size_t>(j)];
  }

  TaskFamily fam;
  fam.config = cfg;
  fam.features = FeatureMaps::make(S, A, std::move(phi),
                                   Eigen::MatrixXd::Identity(S, S), 1.0, 1.0);

  Eigen::MatrixXd stacked(d, P * S);
  std::vector<Eigen::MatrixXd> cores_m;
  cores_m.reserve(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) {
    Eigen::MatrixXd anchors(r, S);
    for (int i = 0; i < r; ++i) {
      const auto w = sample_simplex(rng, S, cfg.anchor_alpha);
      for (int j = 0; j < S; ++j) anchors(i, j) = w[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd M = mix * anchors;
    stacked.block(0, p * S, d, S) = M;
    cores_m.push_back(std::move(M));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0) throw std::runtime_error("instance generation: zero stacked cores");
  if (r < sv.size() && sv(r) > 1e-8 * sv(0))
    throw std::runtime_error("instance generation: stacked cores exceed target rank");
  if (sv(r - 1) <= 1e-6 * sv(0))
    throw std::runtime_error("instance generation: rank-deficient stacked cores");

  fam.B_star = svd.matrixU().leftCols(r);
  double s_bound = 0.0;
  for (int p = 0; p < P; ++p) {
    fam.A_star.push_back(fam.B_star.transpose() * cores_m[static_cast<std::size_t>(p)]);
    s_bound = std::max(s_bound, cores_m[static_cast<std::size_t>(p)].colwise().norm().maxCoeff());
  }
  fam.S_bound = s_bound;
  for (int p = 0; p < P; ++p)
    fam.cores.push_back(TransitionCore{cores_m[static_cast<std::size_t>(p)], s_bound});

  for (int p = 0; p < P; ++p) {
    Eigen::MatrixXd rw(S, A);
    bool any = false;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const bool live = rng.uniform01() < cfg.reward_density;
        const double value = rng.uniform01();
        rw(s, a) = live ? value : 0.0;
        any = any || live;
      }
    }
    if (!any) rw(rng.uniform_int(S), rng.uniform_int(A)) = rng.uniform01();
    fam.rewards.push_back(std::move(rw));
  }

  fam.validate();
  return fam;
}

}  // namespace

TaskFamily make_instance(const InstanceConfig& cfg) {
  if (cfg.n_states < 1 || cfg.n_actions < 1 || cfg.d < 1 || cfg.r < 1 || cfg.P < 1)
    throw std::invalid_argument("make_instance: counts and dimensions must be >= 1");
  if (cfg.r > cfg.d || cfg.r > cfg.d_prime)
    throw std::invalid_argument("make_instance: r must satisfy r <= min(d, d')");
  if (cfg.d_prime != cfg.n_states)
    throw std::invalid_argument("make_instance: indicator psi requires d_prime == n_states");
  if (!(cfg.phi_alpha > 0.0 && cfg.mix_alpha > 0.0 && cfg.anchor_alpha > 0.0))
    throw std::invalid_argument("make_instance: concentrations must be positive");
  if (!(cfg.reward_density > 0.0 && cfg.reward_density <= 1.0))
    throw std::invalid_argument("make_instance: reward_density must lie in (0,1]");
  if (cfg.start_mode != "fixed0" && cfg.start_mode != "uniform")
    throw std::invalid_argument("make_instance: start_mode must be fixed0 or uniform");

  std::string last_error;
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    try {
      return generate_once(cfg, attempt);
    } catch (const std::runtime_error& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("make_instance: generation failed after 10 attempts: " + last_error);
}

Eigen::MatrixXd transition_matrix(const TransitionCore& core, const FeatureMaps& features) {
  if (core.M.rows() != features.d() || core.M.cols() != features.d_prime())
    throw std::invalid_argument("transition_matrix: core dimensions do not match features");
  return features.phi * core.M * features.psi.transpose();
}

Eigen::VectorXd transition_row(const TransitionCore& core, const FeatureMaps& features, int s,
                               int a) {
  return features.psi * (core.M.transpose() * features.phi_row(s, a));
}

int sample_from_row(const Eigen::Ref<const Eigen::VectorXd>& row, Rng& rng) {
  double total = 0.0;
  for (long i = 0; i < row.size(); ++i) total += std::max(row(i), 0.0);
  if (std::abs(total - 1.0) > kSampleSumTol)
    throw std::runtime_error("sample_from_row: transition row sum deviates from 1");
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (long i = 0; i < row.size(); ++i) {
    const double w = std::max(row(i), 0.0);
    if (w > 0.0) last_positive = static_cast<int>(i);
    acc += w;
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

int sample_step(const TransitionCore& core, const FeatureMaps& features, int s, int a, Rng& rng) {
  return sample_from_row(transition_row(core, features, s, a), rng);
}

ValueTables exact_values(const TransitionCore& core, const FeatureMaps& features,
                         const Eigen::MatrixXd& rewards, int horizon) {
  if (horizon < 1) throw std::invalid_argument("exact_values: horizon must be >= 1");
  const int S = features.n_states, A = features.n_actions;
  const Eigen::MatrixXd T = transition_matrix(core, features);

  ValueTables out;
  out.Q.assign(static_cast<std::size_t>(horizon), Eigen::MatrixXd::Zero(S, A));
  out.V.assign(static_cast<std::size_t>(horizon) + 1, Eigen::VectorXd::Zero(S));
  for (int h = horizon - 1; h >= 0; --h) {
    const Eigen::VectorXd next = T * out.V[static_cast<std::size_t>(h) + 1];  // (S*A)
    auto& Q = out.Q[static_cast<std::size_t>(h)];
    auto& V = out.V[static_cast<std::size_t>(h)];
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) Q(s, a) = rewards(s, a) + next(features.row_index(s, a));
      V(s) = Q.row(s).maxCoeff();
    }
  }
  return out;
}

Eigen::MatrixXi greedy_policy(const ValueTables& tables) {
  const auto H = tables.Q.size();
  const int S = static_cast<int>(tables.Q.front().rows());
  const int A = static_cast<int>(tables.Q.front().cols());
  Eigen::MatrixXi pol(H, S);
  for (std::size_t h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (tables.Q[h](s, a) > tables.Q[h](s, best)) best = a;
      pol(static_cast<long>(h), s) = best;
    }
  }
  return pol;
}

}  // namespace matrixrl
