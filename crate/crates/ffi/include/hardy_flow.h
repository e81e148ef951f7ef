#ifndef HARDY_FLOW_H
#define HARDY_FLOW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_GRID = 2,
  HF_STATUS_NON_FINITE = 3,
  HF_STATUS_GRID_MISMATCH = 4,
  HF_STATUS_INVALID_ARGUMENT = 5,
  HF_STATUS_DEGENERATE = 6,
  HF_STATUS_BLOW_UP = 7,
  HF_STATUS_IO = 8,
  HF_STATUS_PANIC = 9,
} HfStatus;

/**
 * Opaque scalar field on an `n × n` periodic grid, row-major.
 */
typedef struct HfField HfField;

typedef struct HfNorms {
  double l1;
  double l2;
  double linf;
  double lp_sigma;
  double bmo;
  double hardy;
  double llogl;
} HfNorms;

/**
 * Both sides of the BMO–L1 inequality. `ratio` is NaN when the right side vanishes.
 */
typedef struct HfIneqTrial {
  double lhs;
  double bmo_f;
  double l1_g;
  double linf_g;
  double bracket;
  double ratio;
} HfIneqTrial;

/**
 * Majorant endpoint. `blow_up_time` is NaN when the solution stayed finite.
 */
typedef struct HfMajorant {
  double final_value;
  double blow_up_time;
  size_t steps;
  bool converged;
} HfMajorant;

/**
 * Summary of a flow run. `blow_up_time` is NaN for a completed run.
 */
typedef struct HfFlowSummary {
  size_t steps;
  double dt;
  size_t samples;
  double final_time;
  double final_energy;
  double final_enstrophy;
  double blow_up_time;
} HfFlowSummary;

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *hf_last_error_message(void);

/**
 * Copies `n * n` row-major samples into a new field.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` must be writable.
 */
enum HfStatus hf_field_new(size_t n, const double *values, size_t len, struct HfField **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void hf_field_free(struct HfField *field);

/**
 * Points per axis of the field, or 0 for null.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t hf_field_points_per_axis(const struct HfField *field);

/**
 * Copies the samples into `out`, which must hold exactly `n * n` doubles.
 *
 * # Safety
 * `field` must be a live handle and `out` must point to `len` writable doubles.
 */
enum HfStatus hf_field_values(const struct HfField *field, double *out, size_t len);

/**
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum HfStatus hf_norms(const struct HfField *field, double sigma, struct HfNorms *out);

/**
 * Riesz transform along `axis` (0 or 1) as a new handle.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum HfStatus hf_riesz_transform(const struct HfField *field, uint32_t axis, struct HfField **out);

/**
 * # Safety
 * `f` and `g` must be live handles and `out` writable.
 */
enum HfStatus hf_ineq_trial(const struct HfField *f,
                            const struct HfField *g,
                            struct HfIneqTrial *out);

/**
 * Limiting rate exponent `e^{-2 m T}`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HfStatus hf_rate_exponent(double m, double horizon, double *out);

/**
 * Integrates the logarithmic majorant with constant coefficients to `horizon`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HfStatus hf_osgood_constant(double f,
                                 double g,
                                 double g0,
                                 double nu,
                                 double horizon,
                                 struct HfMajorant *out);

/**
 * Evolves the vorticity `omega` to `horizon` at viscosity `nu` (0 for Euler).
 * `final_vorticity` may be null; otherwise it receives a new handle.
 *
 * # Safety
 * `omega` must be a live handle, `summary` writable, and `final_vorticity`
 * null or writable.
 */
enum HfStatus hf_flow_run(const struct HfField *omega,
                          double nu,
                          double horizon,
                          double cfl,
                          struct HfFlowSummary *summary,
                          struct HfField **final_vorticity);

#endif  /* HARDY_FLOW_H */
