#ifndef MATRIXRL_H_
#define MATRIXRL_H_

/* C API for the matrixrl library: low-rank factored-MDP agents, the synthetic
 * task-family generator, and the regret benchmark harness.
 *
 * Conventions:
 *   - Handles are opaque; creators (new/generate/load) pair with a free call.
 *   - Functions returning int give a status code (MRL_OK on success). On
 *     failure mrl_last_error() returns a thread-local description.
 *   - Matrices cross the boundary as row-major double arrays.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MRL_OK = 0,
  MRL_EPARAM = 1,  /* invalid parameter or malformed configuration */
  MRL_EIO = 2,     /* file could not be read or written */
  MRL_ERUNTIME = 3 /* internal failure during a run */
};

const char* mrl_version(void);
/* Thread-local message from the most recent failing call. */
const char* mrl_last_error(void);

/* ---- regularized design state (Gram matrix + regression targets) ---- */

typedef struct mrl_gram mrl_gram;

/* target_cols may be 0; the target width is then fixed by the first absorb.
 * Returns NULL on invalid parameters. */
mrl_gram* mrl_gram_new(int dim, double lambda, int target_cols);
void mrl_gram_free(mrl_gram* g);
int mrl_gram_absorb(mrl_gram* g, const double* phi, int phi_len, const double* psi_tilde,
                    int psi_len);
int mrl_gram_count(const mrl_gram* g, int* out);
int mrl_gram_dim(const mrl_gram* g, int* out_dim, int* out_cols);
/* out must hold dim * cols doubles (row-major). */
int mrl_gram_solve(const mrl_gram* g, double* out);
int mrl_gram_inv_norm(const mrl_gram* g, const double* x, int x_len, double* out);
int mrl_gram_log_det(const mrl_gram* g, double* out);

/* ---- determinant-bound checks ---- */

/* xs: m vectors of length d, row-major. holds is 1 when both the potential
 * sum bound and the log-det ratio bound are satisfied. */
int mrl_check_det_lemma(const double* xs, int m, int d, double lambda, double b, double* lhs,
                        double* rhs, int* holds);
/* xs: n_episodes * horizon vectors of length d, row-major, episode-major. */
int mrl_check_lazy_lemma(const double* xs, int n_episodes, int horizon, int d, double lambda,
                         double* lhs, double* rhs, int* holds);

/* ---- synthetic task families ---- */

typedef struct mrl_instance mrl_instance;

/* config_text uses the same flat key = value format as the CLI. */
mrl_instance* mrl_instance_generate(const char* config_text);
mrl_instance* mrl_instance_load(const char* path);
int mrl_instance_save(const mrl_instance* inst, const char* path);
void mrl_instance_free(mrl_instance* inst);

int mrl_instance_dims(const mrl_instance* inst, int* n_states, int* n_actions, int* d,
                      int* d_prime, int* r, int* n_tasks);
int mrl_instance_constants(const mrl_instance* inst, double* L_phi, double* L_psi, double* C_psi,
                           double* C_psi_prime, double* S_bound);
/* out must hold (n_states * n_actions) * n_states doubles (row-major). */
int mrl_instance_transition(const mrl_instance* inst, int task, double* out);
/* Optimal value at a start state under the given horizon. */
int mrl_instance_optimal_value(const mrl_instance* inst, int task, int horizon, int state,
                               double* out);

/* ---- command drivers (exit-code semantics: 0 ok, 1 config, 2 runtime) ---- */

int mrl_cmd_run(const char* config_path, const char* out_dir, const char* seeds_csv_or_null,
                const char* algorithms_csv_or_null);
int mrl_cmd_audit(const char* config_path, const char* out_dir);
int mrl_cmd_gen(const char* config_path, const char* out_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MATRIXRL_H_ */
