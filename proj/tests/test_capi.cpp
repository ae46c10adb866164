// Exercises the shared-library surface exactly as an external C consumer
// would: through matrixrl.h only.
#include <assert.h>
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "matrixrl.h"

static int g_failures = 0;

#define CHECK(cond)                                                \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "CHECK failed at line %d: %s\n", __LINE__, #cond); \
      ++g_failures;                                                \
    }                                                              \
  } while (0)

static const char* kConfig =
    "n_states = 4\n"
    "n_actions = 2\n"
    "d = 6\n"
    "d_prime = 4\n"
    "r = 2\n"
    "P = 3\n"
    "seed = 21\n";

static void test_gram(void) {
  mrl_gram* g = mrl_gram_new(2, 1.0, 1);
  CHECK(g != NULL);

  const double phi[2] = {1.0, 0.0};
  const double psi[1] = {1.0};
  CHECK(mrl_gram_absorb(g, phi, 2, psi, 1) == MRL_OK);

  int count = -1;
  CHECK(mrl_gram_count(g, &count) == MRL_OK && count == 1);

  double solved[2] = {0, 0};
  CHECK(mrl_gram_solve(g, solved) == MRL_OK);
  CHECK(fabs(solved[0] - 0.5) < 1e-12 && fabs(solved[1]) < 1e-12);

  double nrm = 0.0;
  const double x[2] = {0.0, 2.0};
  CHECK(mrl_gram_inv_norm(g, x, 2, &nrm) == MRL_OK);
  CHECK(fabs(nrm - 2.0) < 1e-12);  /* untouched coordinate keeps lambda = 1 */

  /* dimension mismatch surfaces as a parameter error with a message */
  CHECK(mrl_gram_absorb(g, phi, 1, psi, 1) == MRL_EPARAM);
  CHECK(strlen(mrl_last_error()) > 0);

  mrl_gram_free(g);
  CHECK(mrl_gram_new(0, 1.0, 0) == NULL); /* bad dim */
}

static void test_checks(void) {
  /* two repeated unit vectors in d = 2 */
  const double xs[4] = {1.0, 0.0, 1.0, 0.0};
  double lhs = 0, rhs = 0;
  int holds = 0;
  CHECK(mrl_check_det_lemma(xs, 2, 2, 1.0, 1.0, &lhs, &rhs, &holds) == MRL_OK);
  CHECK(holds == 1);
  CHECK(fabs(lhs - 1.5) < 1e-12);

  CHECK(mrl_check_lazy_lemma(xs, 2, 1, 2, 1.0, &lhs, &rhs, &holds) == MRL_OK);
  CHECK(holds == 1);

  CHECK(mrl_check_det_lemma(xs, 2, 2, -1.0, 1.0, &lhs, &rhs, &holds) == MRL_EPARAM);
}

static void test_instance(void) {
  mrl_instance* inst = mrl_instance_generate(kConfig);
  CHECK(inst != NULL);

  int S = 0, A = 0, d = 0, dp = 0, r = 0, P = 0;
  CHECK(mrl_instance_dims(inst, &S, &A, &d, &dp, &r, &P) == MRL_OK);
  CHECK(S == 4 && A == 2 && d == 6 && dp == 4 && r == 2 && P == 3);

  double L_phi = 0, C_psi = 0;
  CHECK(mrl_instance_constants(inst, &L_phi, NULL, &C_psi, NULL, NULL) == MRL_OK);
  CHECK(fabs(L_phi - 1.0) < 1e-12);
  CHECK(fabs(C_psi - 2.0) < 1e-12);

  double* trans = (double*)malloc(sizeof(double) * S * A * S);
  CHECK(mrl_instance_transition(inst, 0, trans) == MRL_OK);
  for (int row = 0; row < S * A; ++row) {
    double sum = 0.0;
    for (int col = 0; col < S; ++col) sum += trans[row * S + col];
    CHECK(fabs(sum - 1.0) <= 1e-9);
  }
  free(trans);
  CHECK(mrl_instance_transition(inst, 99, NULL) == MRL_EPARAM);

  double v = -1.0;
  CHECK(mrl_instance_optimal_value(inst, 1, 3, 0, &v) == MRL_OK);
  CHECK(v >= 0.0 && v <= 3.0);

  CHECK(mrl_instance_save(inst, "/tmp/mrl_capi_instance.json") == MRL_OK);
  mrl_instance* loaded = mrl_instance_load("/tmp/mrl_capi_instance.json");
  CHECK(loaded != NULL);
  double v2 = -1.0;
  CHECK(mrl_instance_optimal_value(loaded, 1, 3, 0, &v2) == MRL_OK);
  CHECK(v == v2);
  mrl_instance_free(loaded);
  mrl_instance_free(inst);

  CHECK(mrl_instance_load("/tmp/does_not_exist.json") == NULL);
  CHECK(mrl_instance_generate("r = 9\n") == NULL); /* missing keys */
}

static void test_cmd_exit_codes(void) {
  CHECK(mrl_cmd_gen("/tmp/mrl_missing.cfg", "/tmp/mrl_gen.json") == 1);
  FILE* f = fopen("/tmp/mrl_capi.cfg", "w");
  fputs(kConfig, f);
  fputs("N = 1\nH = 2\nalgorithms = independent\n", f);
  fclose(f);
  CHECK(mrl_cmd_run("/tmp/mrl_capi.cfg", "/tmp/mrl_capi_out", NULL, NULL) == 0);
  CHECK(mrl_cmd_gen("/tmp/mrl_capi.cfg", "/tmp/mrl_gen.json") == 0);
}

int main(void) {
  CHECK(strcmp(mrl_version(), "0.1.0") == 0);
  test_gram();
  test_checks();
  test_instance();
  test_cmd_exit_codes();
  if (g_failures == 0) {
    printf("capi: all checks passed\n");
    return 0;
  }
  fprintf(stderr, "capi: %d check(s) failed\n", g_failures);
  return 1;
}
