/* C interface of the dynamic frame aloha estimation laboratory. */

#ifndef DFA_H
#define DFA_H

/* Generated from the dfa-ffi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Zero is success; anything else leaves a
 * message readable through `dfa_last_error_message`.
 */
typedef enum DfaStatus {
  /**
   * The call succeeded and out-parameters are valid.
   */
  DFA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DFA_STATUS_NULL_POINTER = 1,
  /**
   * An argument failed validation (range, grammar, consistency).
   */
  DFA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  DFA_STATUS_INVALID_UTF8 = 3,
  /**
   * The computation itself failed (no convergence, overflow).
   */
  DFA_STATUS_RUN_FAILED = 4,
  /**
   * An internal invariant was violated; the library state is still
   * consistent, but the call did nothing.
   */
  DFA_STATUS_PANIC = 5,
} DfaStatus;

/**
 * Opaque Monte Carlo experiment description. Create with
 * `dfa_simulation_new`, configure with the setters, run with
 * `dfa_simulation_run_batch` or `dfa_simulation_run_single`, release with
 * `dfa_simulation_free`. Handles are cheap; they hold no OS resources.
 */
typedef struct DfaSimulation DfaSimulation;

/**
 * Aggregate result of a batch of independent runs.
 */
typedef struct DfaBatchSummary {
  /**
   * Mean of per-run efficiency (population / slots used).
   */
  double mean_efficiency;
  /**
   * Half-width of the 95% confidence interval on the efficiency mean.
   */
  double efficiency_ci_half_width;
  /**
   * Mean number of slots to resolve the whole population.
   */
  double mean_slots;
  /**
   * Half-width of the 95% confidence interval on the slot mean.
   */
  double slots_ci_half_width;
  /**
   * Runs that resolved every station within the frame cap.
   */
  uint64_t completed_runs;
  /**
   * Runs cut off by the frame cap (excluded from the means).
   */
  uint64_t non_terminating_runs;
} DfaBatchSummary;

/**
 * Result of one simulated identification round.
 */
typedef struct DfaRunSummary {
  /**
   * Slots executed until the backlog reached zero.
   */
  uint64_t total_slots;
  /**
   * Frames executed.
   */
  uint64_t frames;
  /**
   * Population / total_slots.
   */
  double efficiency;
  /**
   * False when the run hit the frame cap before resolving everyone.
   */
  bool terminated;
} DfaRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the message of the most recent failure on this thread into `buf`
 * (NUL-terminated, truncated to `cap` bytes) and return the byte length
 * of the full message including its NUL terminator. Call with a null
 * `buf` or zero `cap` to query the required capacity. An empty message
 * (length 1) means the last call on this thread succeeded.
 */
size_t dfa_last_error_message(char *buf, size_t cap);

/**
 * Version of the library as a static NUL-terminated string.
 */
const char *dfa_version(void);

/**
 * Allocate a simulation handle with library defaults (population 0,
 * full-frame estimator, initial frame 1, seed 0, 2000 runs). Returns null
 * only on allocation failure. Free with `dfa_simulation_free`.
 */
struct DfaSimulation *dfa_simulation_new(void);

/**
 * Release a handle created by `dfa_simulation_new`. Null is a no-op.
 */
void dfa_simulation_free(struct DfaSimulation *sim);

/**
 * Set the number of stations to resolve.
 */
enum DfaStatus dfa_simulation_set_population(struct DfaSimulation *sim, uint64_t population);

/**
 * Select the backlog estimator from its textual spec: `schoute`,
 * `lower_bound`, `ae2`, `ae2(b)`, `ae2_opt`, `ae2_opt(m1,m2,...)`,
 * `ae2_pow2` or `perfect`.
 */
enum DfaStatus dfa_simulation_set_estimator(struct DfaSimulation *sim, const char *spec);

/**
 * Set the length of the first announced frame (must be >= 1).
 */
enum DfaStatus dfa_simulation_set_initial_frame(struct DfaSimulation *sim, uint64_t r0);

/**
 * Set the master seed. Runs are decorrelated streams of this seed, so a
 * batch is reproducible bit for bit given (population, estimator, r0,
 * seed, runs).
 */
enum DfaStatus dfa_simulation_set_seed(struct DfaSimulation *sim, uint64_t seed);

/**
 * Set the number of independent runs per batch (must be >= 2).
 */
enum DfaStatus dfa_simulation_set_runs(struct DfaSimulation *sim, uint64_t runs);

/**
 * Run the configured batch and write its summary into `out`.
 */
enum DfaStatus dfa_simulation_run_batch(const struct DfaSimulation *sim,
                                        struct DfaBatchSummary *out);

/**
 * Run a single identification round (stream 0 of the seed) and write its
 * summary into `out`.
 */
enum DfaStatus dfa_simulation_run_single(const struct DfaSimulation *sim,
                                         struct DfaRunSummary *out);

/**
 * Exact expected number of slots to resolve `population` stations from an
 * initial frame of `r0` slots under a memoryless estimator (`schoute`,
 * `lower_bound` or `perfect`). Stateful estimators are rejected.
 */
enum DfaStatus dfa_exact_expected_slots(uint64_t population,
                                        const char *estimator,
                                        uint64_t r0,
                                        double *out);

/**
 * Asymptotic efficiency of the full-frame policy started at traffic
 * `k_u` (stations per slot), from the three-phase decomposition.
 * Requires `k_u >= 10`.
 */
enum DfaStatus dfa_phase_efficiency(double k_u, double *out);

/**
 * Efficiency of the deterministic mean-value traffic recursion started
 * at traffic `k0 >= 1`.
 */
enum DfaStatus dfa_traffic_recursion_efficiency(double k0, double *out);

/**
 * Most likely per-slot traffic at the end of a doubling approach phase
 * whose probes each executed `frame_width` slots (1 or 2) and all
 * collided until the last.
 */
enum DfaStatus dfa_posterior_traffic(uint32_t frame_width, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFA_H */
