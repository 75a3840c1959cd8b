/* C interface to the deleveraging toolkit. All entry points return a status
 * code: 0 success, 2 input error, 3 infeasible allocation, 4 data-quality
 * failure in strict mode. The context handle is opaque and not thread-safe;
 * create one per thread. */
#ifndef ADL_CAPI_H
#define ADL_CAPI_H

#include <stdint.h>

#if defined(_WIN32)
#  define ADL_API __declspec(dllexport)
#else
#  define ADL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct adl_ctx adl_ctx;

ADL_API adl_ctx* adl_ctx_new(void);
ADL_API void adl_ctx_free(adl_ctx* ctx);

/* Overrides the config seed for subsequent runs. */
ADL_API void adl_ctx_set_seed(adl_ctx* ctx, uint64_t seed);

/* Message describing the last failure on this context; empty on success.
 * The pointer stays valid until the next call on the same context. */
ADL_API const char* adl_last_error(const adl_ctx* ctx);

ADL_API const char* adl_version(void);

/* Scenario run: per-tick funding, liquidation, insurance fund, ADL. Writes
 * equities.csv, funding.csv, liquidations.csv, fund.csv, allocations.json. */
ADL_API int adl_simulate(adl_ctx* ctx, const char* config_path, const char* out_dir);

/* Runs every configured policy at one severity on the same book and writes
 * policy_compare.csv. Needs at least two policies in the config. */
ADL_API int adl_policy_compare(adl_ctx* ctx, const char* config_path,
                               const char* out_dir);

/* Seed-parallel experiments (scaling, regret, adverse selection). */
ADL_API int adl_sweep(adl_ctx* ctx, const char* config_path, const char* out_dir,
                      int jobs);

typedef struct adl_replay_opts {
  int64_t gap_ms;            /* wave gap; <= 0 means the 5000 ms default */
  const char* horizons_ms;   /* comma-separated, NULL means "0" */
  const char* policies;      /* comma-separated benchmark names, NULL = all */
  int equity_numeraire;      /* nonzero: equity-mode diagnostic capacities */
  int strict;                /* nonzero: reject unknown columns / bad rows */
} adl_replay_opts;

/* Fill-stream replay: wave partition, deficits, needed budgets, two-pass
 * counterfactual, benchmark allocations. snapshots_csv may be NULL. */
ADL_API int adl_replay(adl_ctx* ctx, const char* fills_csv, const char* snapshots_csv,
                       const char* out_dir, const adl_replay_opts* opts);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ADL_CAPI_H */
