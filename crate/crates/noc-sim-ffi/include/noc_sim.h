#ifndef NOC_SIM_H
#define NOC_SIM_H

/* Generated by cbindgen from noc-sim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum NocStatus {
  NOC_STATUS_OK = 0,
  NOC_STATUS_NULL_POINTER = 1,
  NOC_STATUS_INVALID_ARGUMENT = 2,
  NOC_STATUS_PARSE_ERROR = 3,
  NOC_STATUS_MODEL_ERROR = 4,
  NOC_STATUS_IO_ERROR = 5,
} NocStatus;

/**
 * Opaque simulator handle: a parsed netlist plus its configuration.
 */
typedef struct NocSim NocSim;

/**
 * Topology metrics of the fullerene routing domain.
 */
typedef struct NocTopologyStats {
  uint32_t nodes;
  uint32_t edges;
  double mean_degree;
  double degree_variance;
  double mean_core_pair_hops;
  uint32_t diameter_hops;
} NocTopologyStats;

/**
 * Run telemetry totals, C-friendly.
 */
typedef struct NocRunTelemetry {
  uint64_t sops;
  uint64_t hops_p2p;
  uint64_t bcast_deliveries;
  uint64_t hops_merge;
  uint64_t drops;
  uint64_t cycles;
  double energy_pj;
  double gsops;
  double pj_per_sop;
  uint64_t output_spikes;
} NocRunTelemetry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap`). Returns the full message length in
 * bytes, so callers can size a retry; 0 means no pending error.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (query mode).
 */
size_t noc_sim_last_error(char *buf, size_t cap);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *noc_sim_version(void);

/**
 * Fill `out` with the fullerene domain's published metrics.
 *
 * # Safety
 * `out` must point to a writable `NocTopologyStats`.
 */
enum NocStatus noc_topology_fullerene_stats(struct NocTopologyStats *out);

/**
 * Create a simulator from a netlist file. `config_path` may be null for
 * the shipped defaults. Returns null on failure; see
 * [`noc_sim_last_error`].
 *
 * # Safety
 * Both pointers must be null or NUL-terminated strings.
 */
struct NocSim *noc_sim_new(const char *netlist_path, const char *config_path);

/**
 * Destroy a simulator handle. Null is tolerated.
 *
 * # Safety
 * `sim` must be null or a pointer from [`noc_sim_new`], freed once.
 */
void noc_sim_free(struct NocSim *sim);

/**
 * Run inference: read the input trace CSV, advance `timesteps`, write
 * the output spike trace and telemetry CSVs, and optionally report the
 * totals through `telemetry_out` (nullable).
 *
 * # Safety
 * `sim` must come from [`noc_sim_new`]; path pointers must be
 * NUL-terminated; `telemetry_out` may be null.
 */
enum NocStatus noc_sim_run(struct NocSim *sim,
                           const char *trace_path,
                           uint32_t timesteps,
                           uint32_t threads,
                           const char *spikes_out_path,
                           const char *telemetry_out_path,
                           struct NocRunTelemetry *telemetry_out);

/**
 * Lloyd-Max quantization of `len` weights into an `n`-entry codebook of
 * `w`-bit integers. `out_levels` receives `n` values; `out_scale` the
 * real weight per integer unit.
 *
 * # Safety
 * `weights` must point to `len` doubles and `out_levels` to `n` writable
 * i32 slots; `out_scale` to one writable double.
 */
enum NocStatus noc_quantize(const double *weights,
                            size_t len,
                            uint8_t n,
                            uint8_t w,
                            int32_t *out_levels,
                            double *out_scale);

/**
 * Compile a network description file straight to a netlist file.
 *
 * # Safety
 * Both paths must be NUL-terminated strings.
 */
enum NocStatus noc_compile(const char *network_path,
                           const char *netlist_out_path,
                           uint8_t n,
                           uint8_t w,
                           uint32_t neurons_per_core);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOC_SIM_H */
