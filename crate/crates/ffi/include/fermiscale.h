#ifndef FERMISCALE_H
#define FERMISCALE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_INVALID_GRID = 3,
  FS_STATUS_NON_CONVERGENCE = 4,
  FS_STATUS_INDEFINITE = 5,
  FS_STATUS_CONFIG = 6,
  FS_STATUS_IO = 7,
  FS_STATUS_INSUFFICIENT_DATA = 8,
  FS_STATUS_MEMORY_CAP = 9,
  FS_STATUS_CHECK_FAILED = 10,
  FS_STATUS_PANIC = 98,
  FS_STATUS_OTHER = 99,
} FsStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct FsConfig FsConfig;

/**
 * Opaque periodic grid.
 */
typedef struct FsGrid FsGrid;

/**
 * Opaque pair potential.
 */
typedef struct FsPotential FsPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated to `len`).
 * Returns the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fs_last_error_message(char *buf, size_t len);

/**
 * `amplitude · exp(−r²/width²)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_potential_gaussian(double amplitude, double width, struct FsPotential **out);

/**
 * `2/r − 1` inside the unit ball.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_potential_coulombic_cutoff(struct FsPotential **out);

/**
 * `sup_r V₊(r) r²`.
 *
 * # Safety
 * `pot` must come from an `fs_potential_*` constructor; `out` must be valid.
 */
enum FsStatus fs_potential_cv(const struct FsPotential *pot, double *out);

/**
 * # Safety
 * `pot` must be null or come from an `fs_potential_*` constructor, and not be used afterwards.
 */
void fs_potential_free(struct FsPotential *pot);

/**
 * Grid of `m` blocks in `d` dimensions on `[−L, L)` with `n` nodes per axis.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_grid_new(size_t d,
                          size_t m,
                          double half_length,
                          size_t points_per_axis,
                          double offset,
                          struct FsGrid **out);

/**
 * Total node count.
 *
 * # Safety
 * `grid` must come from [`fs_grid_new`]; `out` must be valid.
 */
enum FsStatus fs_grid_len(const struct FsGrid *grid, size_t *out);

/**
 * # Safety
 * `grid` must be null or come from [`fs_grid_new`], and not be used afterwards.
 */
void fs_grid_free(struct FsGrid *grid);

/**
 * `‖v_ε (−Δ + z)^{-1}‖` on the odd sector of a relative grid.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum FsStatus fs_odd_norm(const struct FsPotential *pot,
                          const struct FsGrid *grid,
                          double eps,
                          double z,
                          double tol,
                          double *out);

/**
 * Two-particle `‖(H + z)^{-1} − (H₀ + z)^{-1}‖` on the relative odd sector.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum FsStatus fs_pair_resolvent_difference(const struct FsPotential *pot,
                                           const struct FsGrid *grid,
                                           double eps,
                                           double lambda,
                                           double z,
                                           double tol,
                                           double *out);

/**
 * Relative residual of the factorized resolvent identity on the antisymmetric
 * subspace of an `N`-block grid (dense; keep grids small).
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum FsStatus fs_kk_residual(const struct FsPotential *pot,
                             const struct FsGrid *grid,
                             double eps,
                             double lambda,
                             double z,
                             double *out);

/**
 * Log–log fit; `power_log != 0` selects `C ε^p |log ε|`.
 *
 * # Safety
 * `eps` and `values` must point to `len` readable doubles; outputs must be valid.
 */
enum FsStatus fs_fit_rate(const double *eps,
                          const double *values,
                          size_t len,
                          int32_t power_log,
                          uint64_t seed,
                          double *exponent,
                          double *prefactor,
                          double *half_width);

/**
 * Parses an experiment file's text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid.
 */
enum FsStatus fs_config_parse(const char *text, struct FsConfig **out);

/**
 * # Safety
 * `cfg` must be null or come from [`fs_config_parse`], and not be used afterwards.
 */
void fs_config_free(struct FsConfig *cfg);

/**
 * Runs the experiment and writes artifacts under `out_dir/<label>`.
 * Returns `CheckFailed` when all artifacts were written but the experiment's check failed.
 *
 * # Safety
 * `cfg` must be live and `out_dir` a NUL-terminated path.
 */
enum FsStatus fs_run_experiment(const struct FsConfig *cfg,
                                const char *out_dir,
                                size_t workers,
                                uint64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FERMISCALE_H */
