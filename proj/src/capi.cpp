#include "matrixrl.h"

#include <cstring>
#include <string>

#include "artifacts.hpp"
#include "commands.hpp"
#include "flatconfig.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what == nullptr ? "" : what; }

// Runs fn, translating exceptions into status codes.
template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return MRL_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return MRL_EPARAM;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MRL_ERUNTIME;
  }
}

}  // namespace

struct mrl_gram {
  matrixrl::GramState state;
};

struct mrl_instance {
  matrixrl::TaskFamily family;
};

extern "C" {

const char* mrl_version(void) { return "0.1.0"; }

const char* mrl_last_error(void) { return g_last_error.c_str(); }

mrl_gram* mrl_gram_new(int dim, double lambda, int target_cols) {
  mrl_gram* out = nullptr;
  const int rc = guarded([&]() {
    out = new mrl_gram{matrixrl::GramState(dim, lambda, target_cols)};
  });
  return rc == MRL_OK ? out : nullptr;
}

void mrl_gram_free(mrl_gram* g) { delete g; }

int mrl_gram_absorb(mrl_gram* g, const double* phi, int phi_len, const double* psi_tilde,
                    int psi_len) {
  if (g == nullptr || phi == nullptr || psi_tilde == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    g->state.absorb(Eigen::Map<const Eigen::VectorXd>(phi, phi_len),
                    Eigen::Map<const Eigen::VectorXd>(psi_tilde, psi_len));
  });
}

int mrl_gram_count(const mrl_gram* g, int* out) {
  if (g == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  *out = g->state.count();
  return MRL_OK;
}

int mrl_gram_dim(const mrl_gram* g, int* out_dim, int* out_cols) {
  if (g == nullptr || out_dim == nullptr || out_cols == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  *out_dim = g->state.dim();
  *out_cols = g->state.cols();
  return MRL_OK;
}

int mrl_gram_solve(const mrl_gram* g, double* out) {
  if (g == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    const Eigen::MatrixXd m = g->state.ridge_solve();
    for (long i = 0; i < m.rows(); ++i)
      for (long j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  });
}

int mrl_gram_inv_norm(const mrl_gram* g, const double* x, int x_len, double* out) {
  if (g == nullptr || x == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded(
      [&]() { *out = g->state.inv_norm(Eigen::Map<const Eigen::VectorXd>(x, x_len)); });
}

int mrl_gram_log_det(const mrl_gram* g, double* out) {
  if (g == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  *out = g->state.log_det();
  return MRL_OK;
}

int mrl_check_det_lemma(const double* xs, int m, int d, double lambda, double b, double* lhs,
                        double* rhs, int* holds) {
  if (xs == nullptr && m > 0) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    std::vector<Eigen::VectorXd> vecs(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
      vecs[static_cast<std::size_t>(i)] = Eigen::Map<const Eigen::VectorXd>(xs + i * d, d);
    const auto rep = matrixrl::check_det_lemma(vecs, lambda, b);
    if (lhs != nullptr) *lhs = rep.lhs;
    if (rhs != nullptr) *rhs = rep.rhs;
    if (holds != nullptr) *holds = rep.holds ? 1 : 0;
  });
}

int mrl_check_lazy_lemma(const double* xs, int n_episodes, int horizon, int d, double lambda,
                         double* lhs, double* rhs, int* holds) {
  if (xs == nullptr && n_episodes > 0) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    const long m = static_cast<long>(n_episodes) * horizon;
    std::vector<Eigen::VectorXd> vecs(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i)
      vecs[static_cast<std::size_t>(i)] = Eigen::Map<const Eigen::VectorXd>(xs + i * d, d);
    const auto rep = matrixrl::check_lazy_lemma(vecs, lambda, horizon);
    if (lhs != nullptr) *lhs = rep.lhs;
    if (rhs != nullptr) *rhs = rep.rhs;
    if (holds != nullptr) *holds = rep.holds ? 1 : 0;
  });
}

mrl_instance* mrl_instance_generate(const char* config_text) {
  if (config_text == nullptr) {
    set_error("null argument");
    return nullptr;
  }
  mrl_instance* out = nullptr;
  const int rc = guarded([&]() {
    const auto flat = matrixrl::FlatConfig::parse(config_text);
    out = new mrl_instance{matrixrl::make_instance(matrixrl::instance_config_from(flat))};
  });
  return rc == MRL_OK ? out : nullptr;
}

mrl_instance* mrl_instance_load(const char* path) {
  if (path == nullptr) {
    set_error("null argument");
    return nullptr;
  }
  mrl_instance* out = nullptr;
  const int rc = guarded([&]() { out = new mrl_instance{matrixrl::load_instance(path)}; });
  return rc == MRL_OK ? out : nullptr;
}

int mrl_instance_save(const mrl_instance* inst, const char* path) {
  if (inst == nullptr || path == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() { matrixrl::save_instance(inst->family, path); });
}

void mrl_instance_free(mrl_instance* inst) { delete inst; }

int mrl_instance_dims(const mrl_instance* inst, int* n_states, int* n_actions, int* d,
                      int* d_prime, int* r, int* n_tasks) {
  if (inst == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  if (n_states != nullptr) *n_states = inst->family.config.n_states;
  if (n_actions != nullptr) *n_actions = inst->family.config.n_actions;
  if (d != nullptr) *d = inst->family.config.d;
  if (d_prime != nullptr) *d_prime = inst->family.config.d_prime;
  if (r != nullptr) *r = inst->family.config.r;
  if (n_tasks != nullptr) *n_tasks = inst->family.task_count();
  return MRL_OK;
}

int mrl_instance_constants(const mrl_instance* inst, double* L_phi, double* L_psi, double* C_psi,
                           double* C_psi_prime, double* S_bound) {
  if (inst == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  if (L_phi != nullptr) *L_phi = inst->family.features.L_phi;
  if (L_psi != nullptr) *L_psi = inst->family.features.L_psi;
  if (C_psi != nullptr) *C_psi = inst->family.features.C_psi;
  if (C_psi_prime != nullptr) *C_psi_prime = inst->family.features.C_psi_prime;
  if (S_bound != nullptr) *S_bound = inst->family.S_bound;
  return MRL_OK;
}

int mrl_instance_transition(const mrl_instance* inst, int task, double* out) {
  if (inst == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    if (task < 0 || task >= inst->family.task_count())
      throw std::invalid_argument("task index out of range");
    const Eigen::MatrixXd T = matrixrl::transition_matrix(
        inst->family.cores[static_cast<std::size_t>(task)], inst->family.features);
    for (long i = 0; i < T.rows(); ++i)
      for (long j = 0; j < T.cols(); ++j) out[i * T.cols() + j] = T(i, j);
  });
}

int mrl_instance_optimal_value(const mrl_instance* inst, int task, int horizon, int state,
                               double* out) {
  if (inst == nullptr || out == nullptr) {
    set_error("null argument");
    return MRL_EPARAM;
  }
  return guarded([&]() {
    if (task < 0 || task >= inst->family.task_count())
      throw std::invalid_argument("task index out of range");
    if (state < 0 || state >= inst->family.features.n_states)
      throw std::invalid_argument("state index out of range");
    const auto tables = matrixrl::exact_values(
        inst->family.cores[static_cast<std::size_t>(task)], inst->family.features,
        inst->family.rewards[static_cast<std::size_t>(task)], horizon);
    *out = tables.V.front()(state);
  });
}

int mrl_cmd_run(const char* config_path, const char* out_dir, const char* seeds_csv_or_null,
                const char* algorithms_csv_or_null) {
  if (config_path == nullptr || out_dir == nullptr) {
    set_error("null argument");
    return 1;
  }
  return matrixrl::cmd_run(config_path, out_dir,
                           seeds_csv_or_null == nullptr ? "" : seeds_csv_or_null,
                           algorithms_csv_or_null == nullptr ? "" : algorithms_csv_or_null);
}

int mrl_cmd_audit(const char* config_path, const char* out_dir) {
  if (config_path == nullptr || out_dir == nullptr) {
    set_error("null argument");
    return 1;
  }
  return matrixrl::cmd_audit(config_path, out_dir);
}

int mrl_cmd_gen(const char* config_path, const char* out_path) {
  if (config_path == nullptr || out_path == nullptr) {
    set_error("null argument");
    return 1;
  }
  return matrixrl::cmd_gen(config_path, out_path);
}

}  // extern "C"
