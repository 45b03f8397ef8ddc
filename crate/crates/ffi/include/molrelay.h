#ifndef MOLRELAY_H
#define MOLRELAY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrStatus {
  MR_STATUS_OK = 0,
  MR_STATUS_NULL_POINTER = 1,
  // Enum value, index, string encoding or similar argument is invalid.
  MR_STATUS_INVALID_ARGUMENT = 2,
  // A model parameter was rejected by validation.
  MR_STATUS_INVALID_PARAMETER = 3,
  MR_STATUS_UNUSABLE_LINK = 4,
  MR_STATUS_PARSE = 5,
  MR_STATUS_IO = 6,
  // Accessor does not match the kind of experiment output.
  MR_STATUS_WRONG_RESULT_KIND = 7,
  MR_STATUS_PANIC = 8,
} MrStatus;

typedef enum MrDetector {
  MR_DETECTOR_FIXED = 0,
  MR_DETECTOR_DFE_THRESHOLD = 1,
  MR_DETECTOR_PROPOSED_ML = 2,
} MrDetector;

typedef enum MrNode {
  MR_NODE_A = 0,
  MR_NODE_B = 1,
} MrNode;

typedef enum MrExperiment {
  MR_EXPERIMENT_BER_VS_SNR = 0,
  MR_EXPERIMENT_BER_VS_SYMBOL_DURATION = 1,
  MR_EXPERIMENT_SINGLE_POINT = 2,
  MR_EXPERIMENT_CHANNEL_PROFILE = 3,
} MrExperiment;

typedef enum MrSweepHold {
  MR_SWEEP_HOLD_Q = 0,
  MR_SWEEP_HOLD_SNR = 1,
} MrSweepHold;

// Opaque experiment output.
typedef struct MrResults MrResults;

// Opaque experiment specification.
typedef struct MrSpec MrSpec;

// One BER estimate.
typedef struct MrBerRow {
  enum MrDetector detector;
  enum MrNode node;
  double x_value;
  double ber;
  double ci_low;
  double ci_high;
  uint64_t symbols;
  uint64_t errors;
  uint64_t seed;
} MrBerRow;

// One sample of a continuous channel response.
typedef struct MrProfileSample {
  double diffusion;
  double distance;
  double t;
  double h;
} MrProfileSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mr_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next library call on the same thread.
const char *mr_last_error(void);

// Creates a spec for `kind` (an `MrExperiment` value) with every default set.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum MrStatus mr_spec_new(int32_t kind, struct MrSpec **out);

// Loads a spec from a configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid writable storage.
enum MrStatus mr_spec_load(const char *path, struct MrSpec **out);

// Parses a spec from configuration text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid writable storage.
enum MrStatus mr_spec_parse(const char *text, struct MrSpec **out);

// Releases a spec. NULL is ignored.
//
// # Safety
// `spec` must be NULL or a handle from this library not yet freed.
void mr_spec_free(struct MrSpec *spec);

// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_seed(struct MrSpec *spec, uint64_t seed);

// Symbols simulated per point.
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_symbols(struct MrSpec *spec, size_t symbols);

// Sweep range and point count (dB for SNR sweeps, seconds for Ts sweeps).
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_sweep(struct MrSpec *spec, double start, double stop, size_t points);

// What a symbol-duration sweep holds fixed (an `MrSweepHold` value).
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_sweep_hold(struct MrSpec *spec, int32_t hold);

// Operating SNR in dB; NaN clears it.
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_snr_db(struct MrSpec *spec, double snr_db);

// Symbol duration in seconds and number of taps.
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_set_channel(struct MrSpec *spec, double symbol_duration, size_t taps);

// Detectors to evaluate, as `MrDetector` values in output order.
//
// # Safety
// `spec` must be NULL or a live handle; `detectors` must point to `len` values.
enum MrStatus mr_spec_set_detectors(struct MrSpec *spec, const int32_t *detectors, size_t len);

// Checks every parameter without running anything.
//
// # Safety
// `spec` must be NULL or a live spec handle.
enum MrStatus mr_spec_validate(const struct MrSpec *spec);

// Normalized configuration text; release with `mr_string_free`.
//
// # Safety
// `spec` must be NULL or a live handle and `out` valid writable storage.
enum MrStatus mr_spec_to_string(const struct MrSpec *spec, char **out);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void mr_string_free(char *s);

// Runs the experiment. `threads == 0` uses every core.
//
// # Safety
// `spec` must be NULL or a live handle and `out` valid writable storage.
enum MrStatus mr_run(const struct MrSpec *spec, size_t threads, struct MrResults **out);

// Releases results. NULL is ignored.
//
// # Safety
// `results` must be NULL or a handle from this library not yet freed.
void mr_results_free(struct MrResults *results);

// Number of rows (BER rows or profile samples); 0 for NULL.
//
// # Safety
// `results` must be NULL or a live results handle.
size_t mr_results_len(const struct MrResults *results);

// Copies BER row `index` into `row`.
//
// # Safety
// `results` must be NULL or a live handle and `row` valid writable storage.
enum MrStatus mr_results_ber_row(const struct MrResults *results,
                                 size_t index,
                                 struct MrBerRow *row);

// Copies profile sample `index` into `sample`.
//
// # Safety
// `results` must be NULL or a live handle and `sample` valid writable storage.
enum MrStatus mr_results_profile_sample(const struct MrResults *results,
                                        size_t index,
                                        struct MrProfileSample *sample);

// Writes results as CSV, identical to the command-line output.
//
// # Safety
// `results` must be NULL or a live handle; `path` a NUL-terminated string.
enum MrStatus mr_results_write_csv(const struct MrResults *results, const char *path);

// Standard normal upper-tail probability.
double mr_q_function(double x);

// Expected concentration at distance `d` and time `t` after releasing `q`
// molecules with diffusion coefficient `diffusion`.
//
// # Safety
// `out` must be valid writable storage.
enum MrStatus mr_fick_response(double q, double diffusion, double d, double t, double *out);

// SNR (linear) of one link sampled with `taps` taps at symbol duration `ts`,
// seen by a receiver of radius `radius`.
//
// # Safety
// `out` must be valid writable storage.
enum MrStatus mr_link_snr(double q,
                          double diffusion,
                          double d,
                          double ts,
                          size_t taps,
                          double radius,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOLRELAY_H */
