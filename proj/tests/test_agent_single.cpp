#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "agent_single.hpp"
#include "env.hpp"
#include "harness.hpp"
#include "rng.hpp"

using namespace matrixrl;

namespace {

InstanceConfig tiny_config(std::uint64_t seed, int S = 3, int A = 2, int d = 3, int r = 2) {
  InstanceConfig c;
  c.n_states = S;
  c.n_actions = A;
  c.d = d;
  c.d_prime = S;
  c.r = r;
  c.P = 1;
  c.seed = seed;
  return c;
}

// Independent transcription of the confidence radius, written from the
// formula rather than the library code.
double beta_transcription(double R, double d, double d_prime, double n, double H, double L_phi,
                          double lambda, double delta, double S) {
  const double inside = (d_prime + d_prime * n * H * L_phi * L_phi / lambda) / delta;
  const double root = R * std::sqrt(d * std::log(inside)) + std::sqrt(lambda) * S;
  return root * root;
}

EpisodeRecord roll(const TaskFamily& fam, const ValueTables& tables, int task, int n,
                   std::uint64_t seed, int H) {
  Rng rng = substream(seed, "env", task, n);
  EpisodeRecord ep;
  ep.task = task;
  ep.episode = n;
  ep.start_state = 0;
  int s = 0;
  for (int h = 0; h < H; ++h) {
    const int a = SingleAgent::act(tables.Q[h], s);
    const int nxt = sample_step(fam.cores[task], fam.features, s, a, rng);
    ep.steps.push_back({s, a, nxt, fam.rewards[task](s, a)});
    s = nxt;
  }
  return ep;
}

}  // namespace

TEST_CASE("confidence radius: degenerate noise-free case and monotonicity") {
  const TaskFamily fam = make_instance(tiny_config(1));
  ConfidenceSchedule cs = ConfidenceSchedule::make(fam.features, 1.0, 0.1, 1.0, 4);
  cs.R_sub = 0.0;  // degenerate: sqrt(beta_1) = sqrt(lambda) * S = 1
  cs.S_bound = 1.0;
  CHECK(cs.sqrt_beta(1) == doctest::Approx(1.0));

  const ConfidenceSchedule real = ConfidenceSchedule::make(fam.features, fam.S_bound, 0.1, 1.0, 4);
  double prev = 0.0;
  for (int n = 1; n <= 1000; ++n) {
    const double b = real.beta(n);
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(real.frob_radius(5) == doctest::Approx(std::sqrt(3.0 * real.beta(5))));
  CHECK(real.two_one_radius(5) == doctest::Approx(3.0 * std::sqrt(real.beta(5))));
}

TEST_CASE("confidence radius matches an independent transcription") {
  const TaskFamily fam = make_instance(tiny_config(7, 4, 2, 5, 2));
  const double S = fam.S_bound, delta = 0.07, lambda = 1.7;
  const int H = 5;
  const ConfidenceSchedule cs = ConfidenceSchedule::make(fam.features, S, delta, lambda, H);
  CHECK(cs.R_sub == doctest::Approx(1.0 * 1.0 + S * 1.0));  // K_psi = I
  for (int n : {1, 3, 17, 240}) {
    const double expected =
        beta_transcription(cs.R_sub, 5, 4, n, H, 1.0, lambda, delta, S);
    CHECK(cs.beta(n) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("bonus coefficient presets") {
  const TaskFamily fam = make_instance(tiny_config(2, 4, 2, 5, 2));
  const int H = 3;
  const double C = fam.features.C_psi;
  ConfidenceSchedule cs = ConfidenceSchedule::make(fam.features, fam.S_bound, 0.1, 1.0, H,
                                                   BonusMode::assumption3);
  const double sb = cs.sqrt_beta(7);
  CHECK(cs.bonus_coeff(7, C) == doctest::Approx(2.0 * C * H * std::sqrt(4.0) * sb));
  cs.mode = BonusMode::assumption2;
  CHECK(cs.bonus_coeff(7, C) == doctest::Approx(2.0 * C * H * 4.0 * sb));
  cs.mode = BonusMode::section5;
  CHECK(cs.bonus_coeff(7, C) == doctest::Approx(2.0 * cs.L_psi * H * sb));
}

TEST_CASE("planning with the true model and zero bonus recovers exact values") {
  const TaskFamily fam = make_instance(tiny_config(3, 4, 3, 5, 2));
  const int H = 4;
  const auto star = exact_values(fam.cores[0], fam.features, fam.rewards[0], H);
  const auto planned = plan_with_bonus(fam.cores[0].M, Eigen::VectorXd::Zero(4 * 3),
                                       fam.rewards[0], fam.features, H);
  for (int h = 0; h < H; ++h) {
    CHECK((planned.Q[h] - star.Q[h]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((planned.V[h] - star.V[h]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("last layer is reward plus bonus, and values clip to [0, H]") {
  const TaskFamily fam = make_instance(tiny_config(5));
  const int H = 3;
  const FeatureMaps& f = fam.features;
  SingleAgent agent(f, ConfidenceSchedule::make(f, fam.S_bound, 0.1, 1.0, H));
  const auto tables = agent.plan(fam.rewards[0], f);
  // with a zero estimate the model term vanishes at the last layer
  for (int s = 0; s < f.n_states; ++s)
    for (int a = 0; a < f.n_actions; ++a)
      CHECK(tables.Q[H - 1](s, a) >= fam.rewards[0](s, a) - 1e-12);
  for (int h = 0; h <= H; ++h) {
    CHECK(tables.V[h].minCoeff() >= 0.0);
    CHECK(tables.V[h].maxCoeff() <= static_cast<double>(H));
  }
}

TEST_CASE("act: single action, dominant action, and a max-scan oracle") {
  Eigen::MatrixXd single(2, 1);
  single << 0.3, -2.0;
  CHECK(SingleAgent::act(single, 0) == 0);
  CHECK(SingleAgent::act(single, 1) == 0);

  Eigen::MatrixXd dom(1, 3);
  dom << 0.1, 5.0, 0.1;
  CHECK(SingleAgent::act(dom, 0) == 1);

  Eigen::MatrixXd ties(1, 4);
  ties << 2.0, 2.0, 1.0, 2.0;
  CHECK(SingleAgent::act(ties, 0) == 0);  // lowest index wins ties

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd q(4, 5);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 5; ++a) q(s, a) = rng.normal();
    for (int s = 0; s < 4; ++s) {
      int best = 0;
      for (int a = 1; a < 5; ++a)
        if (q(s, a) > q(s, best)) best = a;
      CHECK(SingleAgent::act(q, s) == best);
    }
  }
}

TEST_CASE("update: estimate is zero before data, incremental equals batch refit") {
  const TaskFamily fam = make_instance(tiny_config(11, 4, 2, 6, 2));
  const int H = 3;
  const FeatureMaps& f = fam.features;
  SingleAgent agent(f, ConfidenceSchedule::make(f, fam.S_bound, 0.1, 1.0, H));
  CHECK(agent.estimate().isZero(0.0));
  CHECK(agent.episode_index() == 1);

  GramState batch(f.d(), 1.0, f.d_prime());
  const Eigen::MatrixXd psi_tilde = f.psi_tilde_rows();
  for (int n = 1; n <= 12; ++n) {
    const auto tables = agent.plan(fam.rewards[0], f);
    const EpisodeRecord ep = roll(fam, tables, 0, n, 11, H);
    agent.update(ep, f);
    for (const auto& st : ep.steps)
      batch.absorb(f.phi_row(st.state, st.action), psi_tilde.row(st.next_state));
  }
  CHECK(agent.episode_index() == 13);
  CHECK((agent.estimate() - batch.ridge_solve()).norm() <=
        1e-9 * (1.0 + batch.ridge_solve().norm()));
}

TEST_CASE("consistency: deterministic MDP estimate converges in max norm") {
  // handmade deterministic chain with one-hot features: |S| = 6, |A| = 2,
  // phi = I_{12}, psi = I_6, next state is a fixed function of (s, a)
  const int S = 6, A = 2, H = 4;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S * A, S);
  for (int s = 0; s < S; ++s) {
    M(s * A + 0, (s + 1) % S) = 1.0;
    M(s * A + 1, (s + 3) % S) = 1.0;
  }
  const FeatureMaps f = FeatureMaps::make(S, A, Eigen::MatrixXd::Identity(S * A, S * A),
                                          Eigen::MatrixXd::Identity(S, S), 1.0, 1.0);
  const double s_bound = M.colwise().norm().maxCoeff();
  const TransitionCore core{M, s_bound};
  Rng reward_rng(21);
  Eigen::MatrixXd rewards(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) rewards(s, a) = reward_rng.uniform01();

  SingleAgent agent(f, ConfidenceSchedule::make(f, s_bound, 0.1, 1.0, H));
  for (int n = 1; n <= 2000; ++n) {
    const auto tables = agent.plan(rewards, f);
    Rng rng = substream(99, "env", 0, n);
    EpisodeRecord ep;
    ep.task = 0;
    ep.episode = n;
    int s = 0;
    for (int h = 0; h < H; ++h) {
      const int a = SingleAgent::act(tables.Q[h], s);
      const int nxt = sample_step(core, f, s, a, rng);
      ep.steps.push_back({s, a, nxt, rewards(s, a)});
      s = nxt;
    }
    agent.update(ep, f);
  }
  const Eigen::MatrixXd err =
      f.phi * (agent.estimate() - M) * f.psi.transpose();
  CHECK(err.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("optimism audit: membership implies optimistic initial values") {
  const TaskFamily fam = make_instance(tiny_config(13, 4, 2, 5, 2));
  const int H = 4;
  const FeatureMaps& f = fam.features;
  const auto star = exact_values(fam.cores[0], fam.features, fam.rewards[0], H);
  SingleAgent agent(f, ConfidenceSchedule::make(f, fam.S_bound, 0.1, 1.0, H));
  int members = 0;
  for (int n = 1; n <= 200; ++n) {
    const auto tables = agent.plan(fam.rewards[0], f);
    if (agent.membership(fam.cores[0].M)) {
      ++members;
      CHECK(tables.V[0](0) >= star.V[0](0) - 1e-9);
    }
    agent.update(roll(fam, tables, 0, n, 13, H), f);
  }
  CHECK(members == 200);  // theory radii are conservative at this scale
}

TEST_CASE("bonus-form planner dominates any sampled confidence-set member") {
  // matched pairing: the (2,1) set with the wide-coefficient bonus mode
  const TaskFamily fam = make_instance(tiny_config(17, 3, 2, 3, 2));
  const int H = 3;
  const FeatureMaps& f = fam.features;
  SingleAgent agent(f,
                    ConfidenceSchedule::make(f, fam.S_bound, 0.1, 1.0, H, BonusMode::assumption2));
  for (int n = 1; n <= 25; ++n)
    agent.update(roll(fam, agent.plan(fam.rewards[0], f), 0, n, 17, H), f);
  REQUIRE(agent.membership(fam.cores[0].M));

  const auto bonus_tables = agent.plan(fam.rewards[0], f);
  const double radius = agent.schedule().two_one_radius(agent.episode_index());
  Rng rng(4242);
  for (int k = 0; k < 50; ++k) {
    // a member of the (2,1) ball: column norms of sigma^{1/2} delta on a
    // scaled simplex
    const auto w = sample_simplex(rng, f.d_prime(), 1.0);
    const double shrink = rng.uniform01();
    Eigen::MatrixXd G(f.d(), f.d_prime());
    for (int j = 0; j < f.d_prime(); ++j) {
      Eigen::VectorXd u(f.d());
      for (int i = 0; i < f.d(); ++i) u(i) = rng.normal();
      G.col(j) = u.normalized() * shrink * radius * w[j];
    }
    const Eigen::MatrixXd delta =
        agent.gram().chol().transpose().triangularView<Eigen::Upper>().solve(G);
    const Eigen::MatrixXd member = agent.estimate() + delta;
    const auto member_tables =
        plan_with_bonus(member, Eigen::VectorXd::Zero(f.phi.rows()), fam.rewards[0], f, H);
    for (int h = 0; h < H; ++h)
      CHECK((bonus_tables.Q[h] - member_tables.Q[h]).minCoeff() >= -1e-9);
  }
}
