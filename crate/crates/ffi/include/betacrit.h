#ifndef BETACRIT_H
#define BETACRIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BC_OK 0

#define BC_NULL_POINTER 1

#define BC_INVALID_ARGUMENT 2

#define BC_NON_SYMPLECTIC 3

#define BC_COS_FLOOR_VIOLATED 4

#define BC_MAX_ITERS 5

#define BC_STALLED 6

#define BC_SINGULAR_JACOBIAN 7

#define BC_BALL_ESCAPES 8

#define BC_PANIC 9

#define BC_INTERNAL 10

#define BC_LINEAR_BANDED 0

#define BC_LINEAR_DENSE 1

/**
 * Opaque graph patch.
 */
typedef struct BcPatch BcPatch;

typedef struct BcSolverConfig {
  double beta;
  double tol_residual;
  uint32_t max_newton_iters;
  double damping;
  uint32_t max_backtracks;
  double jacobian_fd_eps;
  double cos_floor;
  /**
   * `BC_LINEAR_BANDED` or `BC_LINEAR_DENSE`.
   */
  int32_t linear_solver;
} BcSolverConfig;

typedef struct BcSolveReport {
  uint32_t iterations;
  double residual_sup;
  double residual_l2;
  double min_cos_alpha;
  bool converged;
} BcSolveReport;

typedef struct BcDiagnostics {
  double beta;
  double min_cos_alpha;
  double lq_mass;
  double total_a2;
  double total_h2;
  double sup_a;
  double area;
  double l_beta;
  double gauss_res;
  double ealpha_res;
} BcDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bc_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 */
size_t bc_last_error_message(char *buf, size_t len);

/**
 * Sample a named surface family, e.g. `"shear(0.3)+bump(0.3,1)"`, on
 * `[xmin, xmax] × [ymin, ymax]` with `nx × ny` nodes.
 */
int32_t bc_patch_from_family(const char *spec,
                             size_t nx,
                             size_t ny,
                             double xmin,
                             double xmax,
                             double ymin,
                             double ymax,
                             struct BcPatch **out_patch);

/**
 * Build a patch from row-major nodal arrays of length `nx * ny`.
 */
int32_t bc_patch_from_arrays(size_t nx,
                             size_t ny,
                             double hx,
                             double hy,
                             double x0,
                             double y0,
                             const double *f,
                             const double *g,
                             struct BcPatch **out_patch);

/**
 * Release a patch. Null is ignored.
 */
void bc_patch_free(struct BcPatch *patch);

int32_t bc_patch_dims(const struct BcPatch *patch, size_t *nx, size_t *ny);

/**
 * Copy nodal values into caller buffers of length `len`, which must equal `nx * ny`.
 */
int32_t bc_patch_get_values(const struct BcPatch *patch, double *f, double *g, size_t len);

/**
 * Replace the interior by the discrete harmonic extension of the boundary values.
 */
int32_t bc_harmonic_extension(const struct BcPatch *patch, struct BcPatch **out_patch);

/**
 * Default solver settings at the given beta.
 */
struct BcSolverConfig bc_solver_config_default(double beta);

/**
 * Newton solve from `patch` as the initial iterate. `report` (optional) is
 * filled even when the solve fails; `out_patch` is set only on success.
 */
int32_t bc_solve(const struct BcPatch *patch,
                 const struct BcSolverConfig *config,
                 struct BcPatch **out_patch,
                 struct BcSolveReport *report);

/**
 * One diagnostics record at `beta` with mass exponent `q`.
 */
int32_t bc_diagnostics(const struct BcPatch *patch,
                       double beta,
                       double q,
                       struct BcDiagnostics *out_diag);

/**
 * Sup and L² norms of the Euler-Lagrange residual over interior nodes.
 */
int32_t bc_residual_norms(const struct BcPatch *patch, double beta, double *sup, double *l2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETACRIT_H */
