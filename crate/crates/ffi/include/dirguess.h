#ifndef DIRGUESS_H
#define DIRGUESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DgStatus {
  DG_STATUS_OK = 0,
  DG_STATUS_NULL_POINTER = 1,
  DG_STATUS_INVALID_ARGUMENT = 2,
  DG_STATUS_INFEASIBLE = 3,
  DG_STATUS_UNTABULATED = 4,
  DG_STATUS_NUMERICAL = 5,
  DG_STATUS_IO = 6,
  DG_STATUS_PANIC = 7,
} DgStatus;

typedef enum DgScoreKind {
  DG_SCORE_KIND_FIDELITY = 0,
  DG_SCORE_KIND_LIKELIHOOD = 1,
} DgScoreKind;

/*
 Opaque measurement handle.
 */
typedef struct DgPovm DgPovm;

typedef struct DgPlan {
  double lambda_bar_0;
  double lambda_bar_1;
  double q_bar;
} DgPlan;

typedef struct DgGameResult {
  double s_hat;
  double std_error;
  double q_bar_hat;
  uint64_t n_accepted;
} DgGameResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *dg_version(void);

/*
 Copies the last error message of this thread into `buf` (truncated,
 always NUL-terminated). Returns the full message length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t dg_last_error(char *buf, size_t len);

/*
 Builds the five-outcome abstention POVM for (λ̄₀, λ̄₁).
 */
enum DgStatus dg_povm_abstention(double lambda_bar_0,
                                 double lambda_bar_1,
                                 struct DgPovm **out_povm);

/*
 POVM realized by the reference walk program of a tabulated row.
 */
enum DgStatus dg_povm_from_walk(enum DgScoreKind kind, double c0, struct DgPovm **out_povm);

/*
 Releases a handle. Null is ignored.

 # Safety
 `povm` must be null or a handle from this library not yet freed.
 */
void dg_povm_free(struct DgPovm *povm);

enum DgStatus dg_povm_len(const struct DgPovm *povm, size_t *out_len);

/*
 Writes element `index` row-major into 16 real and 16 imaginary parts.

 # Safety
 `re` and `im` must each point to 16 writable doubles.
 */
enum DgStatus dg_povm_element(const struct DgPovm *povm, size_t index, double *re, double *im);

/*
 Exact conditional score and acceptance rate for ψ⁺-family inputs.
 */
enum DgStatus dg_exact_game_value(const struct DgPovm *povm,
                                  enum DgScoreKind kind,
                                  double c0,
                                  double *out_score,
                                  double *out_q_bar);

/*
 Maximal-acceptance optimal plan; `constrained` fixes λ̄₁ = 1.
 */
enum DgStatus dg_optimal_plan(enum DgScoreKind kind,
                              double c0,
                              bool constrained,
                              struct DgPlan *out_plan);

/*
 Monte Carlo game against the ideal POVM of (λ̄₀, λ̄₁).
 */
enum DgStatus dg_run_game(enum DgScoreKind kind,
                          double c0,
                          double lambda_bar_0,
                          double lambda_bar_1,
                          uint64_t trials,
                          uint64_t seed,
                          struct DgGameResult *out_result);

/*
 Mean and standard deviation of the overall reconstruction fidelity over
 seeded repetitions of simulated tomography of `povm`.
 */
enum DgStatus dg_tomography(const struct DgPovm *povm,
                            uint64_t shots,
                            size_t repetitions,
                            uint64_t seed,
                            double *out_mean,
                            double *out_std);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRGUESS_H */
