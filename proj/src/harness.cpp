#include "harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace matrixrl {

namespace {

constexpr double kOptimismSlack = 1e-9;
constexpr double kBellmanSlack = 1e-6;

bool known_algorithm(const std::string& a) {
  return a == "shared" || a == "independent" || a == "oracle";
}

}  // namespace

void RunConfig::validate() const {
  if (N < 1) throw std::invalid_argument("config: N must be >= 1");
  if (H < 1) throw std::invalid_argument("config: H must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("config: lambda must be > 0");
  if (!(bonus_scale > 0.0)) throw std::invalid_argument("config: bonus_scale must be > 0");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  if (algorithms.empty()) throw std::invalid_argument("config: algorithms must be nonempty");
  for (const auto& a : algorithms)
    if (!known_algorithm(a)) throw std::invalid_argument("config: unknown algorithm " + a);
  if (audit_episodes < 1) throw std::invalid_argument("config: audit_episodes must be >= 1");
  if (!(audit_radius_scale > 0.0))
    throw std::invalid_argument("config: audit_radius_scale must be > 0");
}

void AuditReport::merge(const AuditReport& other) {
  single_coverage.pairs += other.single_coverage.pairs;
  single_coverage.violations += other.single_coverage.violations;
  shared_coverage.pairs += other.shared_coverage.pairs;
  shared_coverage.violations += other.shared_coverage.violations;
  single_optimism_checked += other.single_optimism_checked;
  single_optimism_violations += other.single_optimism_violations;
  shared_optimism_checked += other.shared_optimism_checked;
  shared_optimism_violations += other.shared_optimism_violations;
  bellman_checked += other.bellman_checked;
  bellman_violations += other.bellman_violations;
  bellman_worst_margin = std::max(bellman_worst_margin, other.bellman_worst_margin);
  martingale_streams += other.martingale_streams;
  martingale_within += other.martingale_within;
  det_trials += other.det_trials;
  det_failures += other.det_failures;
  lazy_trials += other.lazy_trials;
  lazy_failures += other.lazy_failures;
  quad_trials += other.quad_trials;
  quad_failures += other.quad_failures;
  optimism_checked = optimism_checked || other.optimism_checked;
}

std::vector<Eigen::VectorXd> evaluate_policy_full(const TransitionCore& core,
                                                  const FeatureMaps& features,
                                                  const Eigen::MatrixXd& rewards,
                                                  const Eigen::MatrixXi& policy, int horizon) {
  if (policy.rows() != horizon || policy.cols() != features.n_states)
    throw std::invalid_argument("evaluate_policy: policy must be H x n_states");
  const int S = features.n_states;
  const Eigen::MatrixXd T = transition_matrix(core, features);
  std::vector<Eigen::VectorXd> V(static_cast<std::size_t>(horizon) + 1,
                                 Eigen::VectorXd::Zero(S));
  for (int h = horizon - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      const int a = policy(h, s);
      V[static_cast<std::size_t>(h)](s) =
          rewards(s, a) +
          T.row(features.row_index(s, a)).dot(V[static_cast<std::size_t>(h) + 1]);
    }
  }
  return V;
}

Eigen::VectorXd evaluate_policy(const TransitionCore& core, const FeatureMaps& features,
                                const Eigen::MatrixXd& rewards, const Eigen::MatrixXi& policy,
                                int horizon) {
  return evaluate_policy_full(core, features, rewards, policy, horizon).front();
}

int resolve_thread_count(int requested) {
  int cap = 0;
  if (const char* env = std::getenv("MATRIXRL_THREADS")) cap = std::atoi(env);
  int n = requested > 0 ? requested : cap;
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (cap > 0 && n > cap) n = cap;
  return std::max(1, n);
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int workers = std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Precomputed per-seed environment view shared by all algorithms.
struct EnvView {
  TaskFamily family;
  std::vector<Eigen::MatrixXd> trans;   // per task, (S*A) x S
  std::vector<ValueTables> star;        // per task, optimal benchmarks
};

EnvView build_env_view(const InstanceConfig& base, std::uint64_t seed, int horizon) {
  EnvView view;
  InstanceConfig cfg = base;
  cfg.seed = seed;
  view.family = make_instance(cfg);
  const int P = view.family.task_count();
  view.trans.reserve(static_cast<std::size_t>(P));
  view.star.reserve(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) {
    view.trans.push_back(transition_matrix(view.family.cores[static_cast<std::size_t>(p)],
                                           view.family.features));
    view.star.push_back(exact_values(view.family.cores[static_cast<std::size_t>(p)],
                                     view.family.features,
                                     view.family.rewards[static_cast<std::size_t>(p)], horizon));
  }
  return view;
}

int start_state(const EnvView& view, std::uint64_t seed, int task, int episode) {
  if (view.family.config.start_mode == "uniform") {
    Rng rng = substream(seed, "start", static_cast<std::uint64_t>(task),
                        static_cast<std::uint64_t>(episode));
    return rng.uniform_int(view.family.features.n_states);
  }
  return 0;
}

// Projected-feature reparametrization handed to the oracle baseline.
struct OracleView {
  FeatureMaps features;
  std::vector<Eigen::MatrixXd> cores;  // r x d' per task
  double S_bound = 0.0;
};

OracleView build_oracle_view(const TaskFamily& fam) {
  OracleView view;
  Eigen::MatrixXd phi_proj = fam.features.phi * fam.B_star;
  const double l_phi = phi_proj.rowwise().norm().maxCoeff();
  view.features = FeatureMaps::make(fam.features.n_states, fam.features.n_actions,
                                    std::move(phi_proj), fam.features.psi, l_phi,
                                    fam.features.L_psi);
  double s_bound = 0.0;
  for (const auto& A : fam.A_star)
    s_bound = std::max(s_bound, A.colwise().norm().maxCoeff());
  view.S_bound = s_bound;
  view.cores = fam.A_star;
  return view;
}

double martingale_bound(int N, int H) {
  const double steps = static_cast<double>(N) * H;
  const double inner = 6.0 * std::log(std::max(steps, 2.0)) / 0.1;
  return 2.0 * (4.0 * H) * std::sqrt(steps * std::log(inner));
}

struct AlgoOutcome {
  std::vector<double> instant;
  AuditReport audit;
};

// One episode rollout for one task; also accumulates the per-step
// value-prediction martingale residual.
EpisodeRecord roll_episode(const EnvView& view, int p, int n, int s0,
                           const Eigen::MatrixXd& rewards, const ValueTables& tables,
                           const std::vector<Eigen::VectorXd>& v_pi, std::uint64_t seed,
                           int horizon, double& mart_sum) {
  Rng rng = substream(seed, "env", static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n));
  EpisodeRecord ep;
  ep.task = p;
  ep.episode = n;
  ep.start_state = s0;
  int s = s0;
  for (int h = 0; h < horizon; ++h) {
    const int a = SingleAgent::act(tables.Q[static_cast<std::size_t>(h)], s);
    const int idx = view.family.features.row_index(s, a);
    const int s_next = sample_from_row(view.trans[static_cast<std::size_t>(p)].row(idx), rng);
    ep.steps.push_back(EpisodeStep{s, a, s_next, rewards(s, a)});
    const Eigen::VectorXd diff =
        tables.V[static_cast<std::size_t>(h) + 1] - v_pi[static_cast<std::size_t>(h) + 1];
    mart_sum += view.trans[static_cast<std::size_t>(p)].row(idx).dot(diff) - diff(s_next);
    s = s_next;
  }
  return ep;
}

AlgoOutcome run_single_family(const RunConfig& rc, const EnvView& view, std::uint64_t seed,
                              bool projected) {
  const TaskFamily& fam = view.family;
  const int P = fam.task_count();
  const bool theory_scale = rc.bonus_scale == 1.0;

  const OracleView oracle = projected ? build_oracle_view(fam) : OracleView{};
  const FeatureMaps& agent_features = projected ? oracle.features : fam.features;
  const double s_bound = projected ? oracle.S_bound : fam.S_bound;

  std::vector<SingleAgent> agents;
  agents.reserve(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p)
    agents.emplace_back(agent_features,
                        ConfidenceSchedule::make(agent_features, s_bound, rc.delta, rc.lambda,
                                                 rc.H, rc.bonus_mode),
                        rc.bonus_scale);

  AlgoOutcome out;
  out.instant.assign(static_cast<std::size_t>(rc.N), 0.0);
  out.audit.optimism_checked = theory_scale;
  std::vector<double> mart(static_cast<std::size_t>(P), 0.0);

  for (int n = 1; n <= rc.N; ++n) {
    for (int p = 0; p < P; ++p) {
      const auto& rewards = fam.rewards[static_cast<std::size_t>(p)];
      const int s0 = start_state(view, seed, p, n);
      const ValueTables tables = agents[static_cast<std::size_t>(p)].plan(rewards, agent_features);
      const Eigen::MatrixXi policy = greedy_policy(tables);
      const auto v_pi = evaluate_policy_full(fam.cores[static_cast<std::size_t>(p)], fam.features,
                                             rewards, policy, rc.H);
      const double v_star = view.star[static_cast<std::size_t>(p)].V.front()(s0);
      const double gap = v_star - v_pi.front()(s0);
      if (gap < -kOptimismSlack)
        throw std::runtime_error("negative instantaneous regret; policy evaluation inconsistent");
      out.instant[static_cast<std::size_t>(n) - 1] += gap;

      if (rc.audits) {
        const Eigen::MatrixXd& truth =
            projected ? oracle.cores[static_cast<std::size_t>(p)]
                      : fam.cores[static_cast<std::size_t>(p)].M;
        const bool member =
            agents[static_cast<std::size_t>(p)].membership(truth, rc.audit_radius_scale);
        out.audit.single_coverage.pairs += 1;
        if (!member) out.audit.single_coverage.violations += 1;
        if (member && theory_scale) {
          out.audit.single_optimism_checked += 1;
          if (tables.V.front()(s0) < v_star - kOptimismSlack)
            out.audit.single_optimism_violations += 1;
        }
      }

      const EpisodeRecord ep = roll_episode(view, p, n, s0, rewards, tables, v_pi, seed, rc.H,
                                            mart[static_cast<std::size_t>(p)]);
      agents[static_cast<std::size_t>(p)].update(ep, agent_features);
    }
  }

  if (rc.audits) {
    const double bound = martingale_bound(rc.N, rc.H);
    for (int p = 0; p < P; ++p) {
      out.audit.martingale_streams += 1;
      if (std::abs(mart[static_cast<std::size_t>(p)]) <= bound) out.audit.martingale_within += 1;
    }
  }
  return out;
}

AlgoOutcome run_shared_family(const RunConfig& rc, const EnvView& view, std::uint64_t seed) {
  const TaskFamily& fam = view.family;
  const int P = fam.task_count();
  const bool theory_scale = rc.bonus_scale == 1.0;

  SharedAgent agent(fam.features, P, fam.config.r, fam.S_bound,
                    SharedRadiusSchedule::make(fam.features, fam.S_bound, fam.config.r, P,
                                               rc.delta, rc.lambda, rc.H),
                    rc.allocation, rc.bonus_scale);

  std::vector<Eigen::MatrixXd> true_cores;
  true_cores.reserve(static_cast<std::size_t>(P));
  for (const auto& c : fam.cores) true_cores.push_back(c.M);

  AlgoOutcome out;
  out.instant.assign(static_cast<std::size_t>(rc.N), 0.0);
  out.audit.optimism_checked = theory_scale;
  std::vector<double> mart(static_cast<std::size_t>(P), 0.0);

  for (int n = 1; n <= rc.N; ++n) {
    std::vector<int> starts(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) starts[static_cast<std::size_t>(p)] = start_state(view, seed, p, n);
    const std::vector<ValueTables> tables = agent.plan_all(fam.rewards, fam.features, starts);

    double v_star_sum = 0.0, v_plan_sum = 0.0;
    std::vector<std::vector<Eigen::VectorXd>> v_pi(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
      const auto& rewards = fam.rewards[static_cast<std::size_t>(p)];
      const Eigen::MatrixXi policy = greedy_policy(tables[static_cast<std::size_t>(p)]);
      v_pi[static_cast<std::size_t>(p)] = evaluate_policy_full(
          fam.cores[static_cast<std::size_t>(p)], fam.features, rewards, policy, rc.H);
      const int s0 = starts[static_cast<std::size_t>(p)];
      const double v_star = view.star[static_cast<std::size_t>(p)].V.front()(s0);
      const double gap = v_star - v_pi[static_cast<std::size_t>(p)].front()(s0);
      if (gap < -kOptimismSlack)
        throw std::runtime_error("negative instantaneous regret; policy evaluation inconsistent");
      out.instant[static_cast<std::size_t>(n) - 1] += gap;
      v_star_sum += v_star;
      v_plan_sum += tables[static_cast<std::size_t>(p)].V.front()(s0);
    }

    bool member = false;
    if (rc.audits) {
      const MembershipReport rep = check_joint_membership(agent.estimate(), true_cores,
                                                          agent.schedule(), n,
                                                          rc.audit_radius_scale);
      member = rep.member;
      out.audit.shared_coverage.pairs += 1;
      if (!member) out.audit.shared_coverage.violations += 1;
      if (member && theory_scale) {
        out.audit.shared_optimism_checked += 1;
        if (v_plan_sum < v_star_sum - kOptimismSlack) out.audit.shared_optimism_violations += 1;
      }
    }

    // Lockstep rollout across tasks so the per-stage Bellman error can be
    // summed over the family; per-task env substreams keep this equivalent
    // to rolling tasks one after another.
    std::vector<EpisodeRecord> episodes(static_cast<std::size_t>(P));
    std::vector<Rng> rngs;
    std::vector<int> states = starts;
    rngs.reserve(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
      rngs.push_back(substream(seed, "env", static_cast<std::uint64_t>(p),
                               static_cast<std::uint64_t>(n)));
      episodes[static_cast<std::size_t>(p)].task = p;
      episodes[static_cast<std::size_t>(p)].episode = n;
      episodes[static_cast<std::size_t>(p)].start_state = starts[static_cast<std::size_t>(p)];
    }
    const double gamma_n = agent.schedule().gamma(n);
    for (int h = 0; h < rc.H; ++h) {
      double bellman_lhs = 0.0, phi_sq = 0.0;
      for (int p = 0; p < P; ++p) {
        const auto& rewards = fam.rewards[static_cast<std::size_t>(p)];
        const auto& tab = tables[static_cast<std::size_t>(p)];
        int& s = states[static_cast<std::size_t>(p)];
        const int a = SingleAgent::act(tab.Q[static_cast<std::size_t>(h)], s);
        const int idx = fam.features.row_index(s, a);
        const auto row = view.trans[static_cast<std::size_t>(p)].row(idx);
        const int s_next =
            sample_from_row(row, rngs[static_cast<std::size_t>(p)]);
        episodes[static_cast<std::size_t>(p)].steps.push_back(
            EpisodeStep{s, a, s_next, rewards(s, a)});

        if (rc.audits) {
          bellman_lhs += tab.Q[static_cast<std::size_t>(h)](s, a) - rewards(s, a) -
                         row.dot(tab.V[static_cast<std::size_t>(h) + 1]);
          const double w =
              agent.estimate().grams[static_cast<std::size_t>(p)].inv_norm(
                  fam.features.phi_row(s, a));
          phi_sq += w * w;
          const Eigen::VectorXd diff = tab.V[static_cast<std::size_t>(h) + 1] -
                                       v_pi[static_cast<std::size_t>(p)][static_cast<std::size_t>(h) + 1];
          mart[static_cast<std::size_t>(p)] += row.dot(diff) - diff(s_next);
        }
        s = s_next;
      }
      if (rc.audits && member) {
        const double rhs =
            2.0 * fam.features.C_psi * rc.H * std::sqrt(gamma_n * phi_sq) + kBellmanSlack;
        out.audit.bellman_checked += 1;
        out.audit.bellman_worst_margin =
            std::max(out.audit.bellman_worst_margin, bellman_lhs - rhs);
        if (bellman_lhs > rhs) out.audit.bellman_violations += 1;
      }
    }
    agent.update(episodes, fam.features);
  }

  if (rc.audits) {
    const double bound = martingale_bound(rc.N, rc.H);
    for (int p = 0; p < P; ++p) {
      out.audit.martingale_streams += 1;
      if (std::abs(mart[static_cast<std::size_t>(p)]) <= bound) out.audit.martingale_within += 1;
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config) {
  config.validate();
  const int threads = resolve_thread_count(config.threads);

  struct SeedOutcome {
    std::map<std::string, std::vector<double>> instant;
    AuditReport audit;
    SeedStatus status;
  };
  std::vector<SeedOutcome> outcomes(config.seeds.size());

  parallel_for(config.seeds.size(), threads, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    outcomes[i].status.seed = seed;
    try {
      const EnvView view = build_env_view(config.instance, seed, config.H);
      for (const auto& algo : config.algorithms) {
        AlgoOutcome res = algo == "shared"
                              ? run_shared_family(config, view, seed)
                              : run_single_family(config, view, seed, algo == "oracle");
        outcomes[i].instant[algo] = std::move(res.instant);
        outcomes[i].audit.merge(res.audit);
      }
    } catch (const std::exception& e) {
      outcomes[i].status.ok = false;
      outcomes[i].status.message = e.what();
    }
  });

  ExperimentResult result;
  result.audits.delta = config.delta;
  result.audits.runs = static_cast<int>(config.seeds.size());
  result.audits.episodes = config.N;
  for (auto& oc : outcomes) {
    result.statuses.push_back(oc.status);
    if (!oc.status.ok) continue;
    result.trace_seeds.push_back(oc.status.seed);
    result.audits.merge(oc.audit);
    for (auto& [algo, inst] : oc.instant) {
      result.traces.instant[algo].push_back(inst);
      std::vector<double> cum(inst.size());
      double acc = 0.0;
      for (std::size_t n = 0; n < inst.size(); ++n) {
        acc += inst[n];
        cum[n] = acc;
      }
      result.traces.cumulative[algo].push_back(std::move(cum));
    }
  }

  InstanceConfig first = config.instance;
  first.seed = config.seeds.front();
  result.first_instance = make_instance(first);
  return result;
}

AuditReport coverage_audit(const RunConfig& config, int n_runs) {
  config.validate();
  if (n_runs < 100) throw std::invalid_argument("coverage_audit: n_runs must be >= 100");

  RunConfig audit_cfg = config;
  audit_cfg.N = config.audit_episodes;
  audit_cfg.bonus_scale = 1.0;  // coverage and optimism are theory-scale audits
  audit_cfg.allocation = AllocationMethod::equal;
  audit_cfg.audits = true;

  const int threads = resolve_thread_count(config.threads);
  std::vector<AuditReport> reports(static_cast<std::size_t>(n_runs));
  std::vector<std::string> failures(static_cast<std::size_t>(n_runs));

  parallel_for(static_cast<std::size_t>(n_runs), threads, [&](std::size_t i) {
    try {
      Rng key = substream(config.instance.seed, "audit-run", i);
      const std::uint64_t run_seed = key.next_u64();
      const EnvView view = build_env_view(audit_cfg.instance, run_seed, audit_cfg.H);
      AlgoOutcome single = run_single_family(audit_cfg, view, run_seed, false);
      AlgoOutcome shared = run_shared_family(audit_cfg, view, run_seed);
      reports[i].merge(single.audit);
      reports[i].merge(shared.audit);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  for (const auto& f : failures)
    if (!f.empty()) throw std::runtime_error("coverage_audit run failed: " + f);

  AuditReport total;
  total.delta = config.delta;
  total.runs = n_runs;
  total.episodes = config.audit_episodes;
  for (const auto& rep : reports) total.merge(rep);
  return total;
}

AuditReport lemma_trials(int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("lemma_trials: trials must be >= 1");
  AuditReport rep;

  for (int i = 0; i < trials; ++i) {
    Rng rng = substream(seed, "det-trial", static_cast<std::uint64_t>(i));
    const int d = 1 + rng.uniform_int(8);
    const int m = 1 + rng.uniform_int(200);
    const double lambda = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    const double b = std::exp(rng.uniform(std::log(0.1), std::log(5.0)));
    const double scale = std::exp(rng.uniform(std::log(0.2), std::log(2.0)));
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(m));
    for (auto& x : xs) {
      x = Eigen::VectorXd(d);
      for (int j = 0; j < d; ++j) x(j) = scale * rng.normal();
    }
    rep.det_trials += 1;
    if (!check_det_lemma(xs, lambda, b).holds) rep.det_failures += 1;
  }

  for (int i = 0; i < trials; ++i) {
    Rng rng = substream(seed, "lazy-trial", static_cast<std::uint64_t>(i));
    const int d = 1 + rng.uniform_int(6);
    const int n_episodes = 1 + rng.uniform_int(200);
    const int horizon = 1 + rng.uniform_int(5);
    const double lambda = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    const double scale = std::exp(rng.uniform(std::log(0.2), std::log(2.0)));
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n_episodes) *
                                    static_cast<std::size_t>(horizon));
    for (auto& x : xs) {
      x = Eigen::VectorXd(d);
      for (int j = 0; j < d; ++j) x(j) = scale * rng.normal();
    }
    rep.lazy_trials += 1;
    if (!check_lazy_lemma(xs, lambda, horizon).holds) rep.lazy_failures += 1;
  }

  for (int i = 0; i < trials; ++i) {
    Rng rng = substream(seed, "quad-trial", static_cast<std::uint64_t>(i));
    const int d = 2 + rng.uniform_int(7);
    const double lambda = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    Eigen::MatrixXd small = lambda * Eigen::MatrixXd::Identity(d, d);
    const int k1 = 1 + rng.uniform_int(d);
    for (int k = 0; k < k1; ++k) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j) v(j) = rng.normal();
      small += v * v.transpose();
    }
    Eigen::MatrixXd big = small;
    const int k2 = 1 + rng.uniform_int(d);
    for (int k = 0; k < k2; ++k) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j) v(j) = rng.normal();
      big += v * v.transpose();
    }
    rep.quad_trials += 1;
    if (!check_quad_det(big, small, 64, rng).holds) rep.quad_failures += 1;
  }

  return rep;
}

}  // namespace matrixrl
