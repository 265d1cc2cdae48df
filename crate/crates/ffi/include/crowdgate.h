#ifndef CROWDGATE_H
#define CROWDGATE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define CROWDGATE_OK 0

#define CROWDGATE_ERR_NULL_POINTER 1

#define CROWDGATE_ERR_INVALID_UTF8 2

#define CROWDGATE_ERR_PANIC 3

#define CROWDGATE_ERR_INVALID_ARGUMENT 4

#define CROWDGATE_STATE_COLLECTING 0

#define CROWDGATE_STATE_TERMINATED 1

#define CROWDGATE_STATE_EXHAUSTED 2

/**
 * Opaque online verification session.
 */
typedef struct CrowdgateSession CrowdgateSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *crowdgate_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void crowdgate_string_free(char *s);

/**
 * Probability that a majority of `n` (odd) workers of accuracy `mu` is
 * right.
 */
int32_t crowdgate_expected_majority_prob(size_t n, double mu, double *result);

/**
 * Majority-correct probability for `len` workers of individual accuracy.
 */
int32_t crowdgate_exact_majority_prob(const double *accuracies, size_t len, double *result);

int32_t crowdgate_conservative_worker_count(double target, double mu, size_t *result);

/**
 * Both worker counts and the expected accuracy at the refined count.
 */
int32_t crowdgate_refined_worker_count(double target,
                                       double mu,
                                       size_t *conservative_n,
                                       size_t *refined_n,
                                       double *expected_accuracy);

int32_t crowdgate_worker_confidence(double accuracy, size_t m, double *result);

int32_t crowdgate_estimate_domain_size(size_t k, double epsilon, size_t *result);

/**
 * `(worker_fee + platform_fee) * n`.
 */
int32_t crowdgate_hit_cost(double worker_fee, double platform_fee, size_t n, double *result);

/**
 * Verifies a JSON document `{domain, observation, profiles}` and writes a
 * JSON report to `*report`, to be released with `crowdgate_string_free`.
 */
int32_t crowdgate_verify_json(const char *document, char **report);

/**
 * Opens a session. `domain_json` is an answer domain such as
 * `{"labels":["yes","no"],"mode":"fixed"}`; `strategy` is one of `none`,
 * `minmax`, `minexp`, `expmax`.
 */
int32_t crowdgate_session_new(const char *question_id,
                              const char *domain_json,
                              size_t n_total,
                              double mu_remaining,
                              const char *strategy,
                              struct CrowdgateSession **session);

void crowdgate_session_free(struct CrowdgateSession *session);

/**
 * Records one answer from a worker of the given accuracy.
 */
int32_t crowdgate_session_push(struct CrowdgateSession *session,
                               const char *worker_id,
                               const char *answer,
                               double accuracy);

int32_t crowdgate_session_confidence(const struct CrowdgateSession *session,
                                     const char *label,
                                     double *result);

/**
 * Current confidence table as JSON; `null` before the first answer.
 */
int32_t crowdgate_session_table_json(const struct CrowdgateSession *session, char **table);

/**
 * Evaluates the stopping bracket, writing it as JSON and whether the
 * session's strategy would stop.
 */
int32_t crowdgate_session_evaluate(const struct CrowdgateSession *session,
                                   bool *should_stop,
                                   char **evaluation);

/**
 * One of the `CROWDGATE_STATE_*` values.
 */
int32_t crowdgate_session_state(const struct CrowdgateSession *session, int32_t *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDGATE_H */
