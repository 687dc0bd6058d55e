#ifndef DIFFAGG_H
#define DIFFAGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DiffaggStatus {
  DIFFAGG_STATUS_OK = 0,
  DIFFAGG_STATUS_NULL_POINTER = 1,
  DIFFAGG_STATUS_INVALID_CONFIG = 2,
  DIFFAGG_STATUS_DOMAIN = 3,
  DIFFAGG_STATUS_STEP_SIZE = 4,
  DIFFAGG_STATUS_PARSE = 5,
  DIFFAGG_STATUS_IO = 6,
  /**
   * The macro solver stopped early; the run handle is still returned.
   */
  DIFFAGG_STATUS_BLOW_UP = 7,
  DIFFAGG_STATUS_BUFFER_TOO_SMALL = 8,
  DIFFAGG_STATUS_INVALID_UTF8 = 9,
  DIFFAGG_STATUS_PANIC = 10,
} DiffaggStatus;

/**
 * Mixture of Barenblatt profiles.
 */
typedef struct DiffaggDensity DiffaggDensity;

/**
 * Finished (or blown-up) grid solver run.
 */
typedef struct DiffaggMacroRun DiffaggMacroRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *diffagg_last_error_message(void);

/**
 * `V_eps(x)` of the Gaussian kernel with weight `b` in one dimension.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum DiffaggStatus diffagg_kernel_value(double b, double eps, double x, double *out);

/**
 * `V_eps'(x)`.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum DiffaggStatus diffagg_kernel_grad(double b, double eps, double x, double *out);

/**
 * Unit-mass Barenblatt profile at time `t`, centred at `x0`.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum DiffaggStatus diffagg_barenblatt_pdf(double x, double t, double x0, double *out);

/**
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum DiffaggStatus diffagg_barenblatt_cdf(double z, double t, double *out);

/**
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum DiffaggStatus diffagg_barenblatt_inv_cdf(double v, double t, double *out);

/**
 * Smallest particle count whose mean-field bound is below `threshold`.
 *
 * # Safety
 * `out` must be valid for a write of one `size_t`.
 */
enum DiffaggStatus diffagg_min_particle_count(double eps,
                                              double t,
                                              double b,
                                              double threshold,
                                              size_t *out);

/**
 * Built-in initial density `"initial1"` or `"initial2"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum DiffaggStatus diffagg_density_preset(const char *name, struct DiffaggDensity **out);

/**
 * Mixture of `n` components given as parallel arrays.
 *
 * # Safety
 * Each array must hold `n` readable doubles; `out` valid for one pointer
 * write.
 */
enum DiffaggStatus diffagg_density_new(const double *alpha,
                                       const double *beta,
                                       const double *t,
                                       const double *x0,
                                       size_t n,
                                       struct DiffaggDensity **out);

/**
 * # Safety
 * `density` must come from this library and not be freed already; NULL is
 * ignored.
 */
void diffagg_density_free(struct DiffaggDensity *density);

/**
 * # Safety
 * `density` must be a live handle; `out` valid for one write.
 */
enum DiffaggStatus diffagg_density_pdf(const struct DiffaggDensity *density, double x, double *out);

/**
 * # Safety
 * `density` must be a live handle; `out` valid for one write.
 */
enum DiffaggStatus diffagg_density_cdf(const struct DiffaggDensity *density, double x, double *out);

/**
 * `||u0||_inf`.
 *
 * # Safety
 * `density` must be a live handle; `out` valid for one write.
 */
enum DiffaggStatus diffagg_density_sup_norm(const struct DiffaggDensity *density, double *out);

/**
 * Fills `out[0..count]` with draws; the same seed gives the same draws as
 * the initial positions of replica 0 in a particle run.
 *
 * # Safety
 * `density` must be a live handle; `out` must hold `count` doubles.
 */
enum DiffaggStatus diffagg_density_sample(const struct DiffaggDensity *density,
                                          uint64_t seed,
                                          double *out,
                                          size_t count);

/**
 * Runs the grid solver from `density` with `a = 2 b ||u0||_inf eta` on
 * cells of width `dx` covering the padded support. Returns `BlowUp` with a
 * valid handle when the run stopped early.
 *
 * # Safety
 * `density` must be a live handle; `out` valid for one pointer write.
 */
enum DiffaggStatus diffagg_macro_solve(const struct DiffaggDensity *density,
                                       double eta,
                                       double b,
                                       double horizon,
                                       double dx,
                                       double safety,
                                       struct DiffaggMacroRun **out);

/**
 * # Safety
 * `run` must come from this library and not be freed already; NULL is
 * ignored.
 */
void diffagg_macro_run_free(struct DiffaggMacroRun *run);

/**
 * Grid of the final state: left edge, cell width and cell count.
 *
 * # Safety
 * `run` must be a live handle; out pointers valid for one write each.
 */
enum DiffaggStatus diffagg_macro_run_grid(const struct DiffaggMacroRun *run,
                                          double *x_min,
                                          double *dx,
                                          size_t *cells);

/**
 * Copies the final cell averages into `buf`; `len` must be at least the
 * cell count.
 *
 * # Safety
 * `run` must be a live handle; `buf` must hold `len` doubles; `time` valid
 * for one write.
 */
enum DiffaggStatus diffagg_macro_run_final_state(const struct DiffaggMacroRun *run,
                                                 double *buf,
                                                 size_t len,
                                                 double *time);

/**
 * Largest cell value seen over the run.
 *
 * # Safety
 * `run` must be a live handle; `out` valid for one write.
 */
enum DiffaggStatus diffagg_macro_run_running_sup(const struct DiffaggMacroRun *run, double *out);

/**
 * Runs a scenario file like `diffagg run`. `output` may be NULL to keep the
 * file's `output` key. `exit_code` receives the command-line exit code.
 *
 * # Safety
 * `path` and a non-NULL `output` must be NUL-terminated strings;
 * `exit_code` valid for one write.
 */
enum DiffaggStatus diffagg_run_scenario(const char *path,
                                        const char *output,
                                        size_t workers,
                                        int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIFFAGG_H */
