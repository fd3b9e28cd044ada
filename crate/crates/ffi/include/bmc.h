#ifndef BMC_H
#define BMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BmcStatus {
  BMC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BMC_STATUS_NULL_POINTER = 1,
  /**
   * Bad arguments: malformed names, invalid lengths, out-of-range widths.
   */
  BMC_STATUS_USAGE = 2,
  /**
   * Well-formed input that exceeds the stack cap.
   */
  BMC_STATUS_INFEASIBLE = 3,
  /**
   * A broken internal invariant.
   */
  BMC_STATUS_INTERNAL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  BMC_STATUS_PANIC = 5,
  /**
   * An output buffer is too small; nothing was written to it.
   */
  BMC_STATUS_BUFFER_TOO_SMALL = 6,
} BmcStatus;

/**
 * An immutable arrival sequence.
 */
typedef struct BmcInstance BmcInstance;

/**
 * An online policy driving its own stack simulator.
 */
typedef struct BmcPolicy BmcPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *bmc_last_error(void);

/**
 * Builds an instance from `n` lengths and read rates.
 *
 * # Safety
 * `lengths` and `reads` must be valid for `n` reads; `out` must be valid for one write.
 */
enum BmcStatus bmc_instance_new(const double *lengths,
                                const double *reads,
                                size_t n,
                                struct BmcInstance **out);

/**
 * Number of arrivals in `instance`; 0 for null.
 *
 * # Safety
 * `instance` must be null or a live handle from [`bmc_instance_new`].
 */
size_t bmc_instance_len(const struct BmcInstance *instance);

/**
 * Releases an instance. Null is ignored.
 *
 * # Safety
 * `instance` must be null or a live handle that is not used afterwards.
 */
void bmc_instance_free(struct BmcInstance *instance);

/**
 * Total cost of running the merge widths `widths[0..n]` on `instance` under `model`.
 *
 * # Safety
 * `instance` must be a live handle, `model` a NUL-terminated string, `widths`
 * valid for `n` reads and `out_cost` valid for one write.
 */
enum BmcStatus bmc_simulate(const struct BmcInstance *instance,
                            const char *model,
                            const size_t *widths,
                            size_t n,
                            double *out_cost);

/**
 * Optimal offline cost of `instance` under `model` by dynamic programming. When
 * `out_widths` is non-null, an optimal schedule is written to it; it must hold at
 * least `bmc_instance_len(instance)` entries (`widths_cap`).
 *
 * # Safety
 * Pointers must be valid as described; `out_widths` may be null.
 */
enum BmcStatus bmc_opt_dp(const struct BmcInstance *instance,
                          const char *model,
                          double *out_cost,
                          size_t *out_widths,
                          size_t widths_cap);

/**
 * Creates an online policy (`spec`, e.g. `brb:5`) with its own stack simulator
 * under `model`. `horizon` is only read by `doubling-known`.
 *
 * # Safety
 * `spec` and `model` must be NUL-terminated strings; `out` valid for one write.
 */
enum BmcStatus bmc_policy_new(const char *spec,
                              const char *model,
                              size_t horizon,
                              struct BmcPolicy **out);

/**
 * Feeds one arrival to the policy, applies its decision and reports the chosen
 * width and that step's cost (merge plus read). Either output may be null.
 *
 * # Safety
 * `policy` must be a live handle; outputs must be null or valid for one write.
 */
enum BmcStatus bmc_policy_step(struct BmcPolicy *policy,
                               double length,
                               double read_rate,
                               size_t *out_width,
                               double *out_step_cost);

/**
 * Files currently on the policy's stack; 0 for null.
 *
 * # Safety
 * `policy` must be null or a live handle.
 */
size_t bmc_policy_stack_size(const struct BmcPolicy *policy);

/**
 * Cost accumulated by the policy so far; 0 for null.
 *
 * # Safety
 * `policy` must be null or a live handle.
 */
double bmc_policy_total_cost(const struct BmcPolicy *policy);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` must be null or a live handle that is not used afterwards.
 */
void bmc_policy_free(struct BmcPolicy *policy);

/**
 * Runs policy `spec` over the whole instance (horizon = instance length) and
 * reports its total cost; the widths go to `out_widths` when it is non-null.
 *
 * # Safety
 * Pointers must be valid as described; `out_widths` may be null.
 */
enum BmcStatus bmc_run_policy(const struct BmcInstance *instance,
                              const char *spec,
                              const char *model,
                              double *out_cost,
                              size_t *out_widths,
                              size_t widths_cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BMC_H */
