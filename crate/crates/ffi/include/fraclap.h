#ifndef FRACLAP_H
#define FRACLAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_ARGUMENT = 2,
  FL_STATUS_DIMENSION = 3,
  FL_STATUS_NOT_CONVERGED = 4,
  FL_STATUS_BREAKDOWN = 5,
  FL_STATUS_FACTORIZATION = 6,
  FL_STATUS_INTERNAL = 7,
  FL_STATUS_PANIC = 8,
} FlStatus;

// Grid handle.
typedef struct FlGrid FlGrid;

// Operator handle. Owns its grid.
typedef struct FlOperator FlOperator;

// Preconditioner handle.
typedef struct FlPreconditioner FlPreconditioner;

// Operator constants for one `(α, d, h)` triple.
typedef struct FlConstants {
  double alpha;
  uint32_t d;
  double h;
  double delta;
  double c;
  double a1;
  double a2;
  double a3;
} FlConstants;

// Outcome of a linear solve.
typedef struct FlSolveInfo {
  uint64_t iterations;
  bool converged;
  double relative_residual;
  double wall_time;
} FlSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fl_version(void);

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next `fl_*` call on the same thread.
const char *fl_last_error(void);

// Full grid with `m` interior points per axis on the box given by `lo[k]`,
// `hi[k]` for `k < d`.
//
// # Safety
// `lo` and `hi` point to `d` doubles; `out` is writable.
enum FlStatus fl_grid_new(uint32_t d,
                          uint64_t m,
                          const double *lo,
                          const double *hi,
                          struct FlGrid **out);

// L-shaped grid on `[0, 1]^2`.
//
// # Safety
// `out` is writable.
enum FlStatus fl_grid_l_shape(uint64_t m, struct FlGrid **out);

// # Safety
// `grid` is null or came from `fl_grid_*` and is not used afterwards.
void fl_grid_free(struct FlGrid *grid);

// Number of unknowns, or 0 for a null grid.
//
// # Safety
// `grid` is null or valid.
uint64_t fl_grid_n_active(const struct FlGrid *grid);

// Grid spacing, or NaN for a null grid.
//
// # Safety
// `grid` is null or valid.
double fl_grid_spacing(const struct FlGrid *grid);

// Constants for order `alpha` on `grid`.
//
// # Safety
// `grid` is valid; `out` is writable.
enum FlStatus fl_constants(const struct FlGrid *grid, double alpha, struct FlConstants *out);

// Builds the discrete operator of order `alpha` on `grid`. The grid handle
// stays owned by the caller.
//
// # Safety
// `grid` is valid; `out` is writable.
enum FlStatus fl_operator_new(const struct FlGrid *grid, double alpha, struct FlOperator **out);

// # Safety
// `op` is null or came from `fl_operator_new` and is not used afterwards.
void fl_operator_free(struct FlOperator *op);

// `y = M x`, both of length `n`, which must equal the grid's unknown count.
//
// # Safety
// `x` and `y` point to `n` doubles and do not overlap.
enum FlStatus fl_operator_apply(const struct FlOperator *op,
                                const double *x,
                                double *y,
                                uint64_t n);

// Preconditioner `γ(-Δ_h)` for the elliptic system of `op`.
//
// # Safety
// `op` is valid; `out` is writable.
enum FlStatus fl_precond_new_elliptic(const struct FlOperator *op, struct FlPreconditioner **out);

// Preconditioner `I + (dt/2) γ(-Δ_h)` for Crank–Nicolson steps with `op`.
//
// # Safety
// `op` is valid; `out` is writable.
enum FlStatus fl_precond_new_time_step(const struct FlOperator *op,
                                       double dt,
                                       struct FlPreconditioner **out);

// Preconditioner `σI + γ(-Δ_h)` with explicit coefficients.
// `backend`: 0 automatic, 1 sine transform, 2 sparse Cholesky.
//
// # Safety
// `grid` is valid; `out` is writable.
enum FlStatus fl_precond_new(const struct FlGrid *grid,
                             double sigma,
                             double gamma,
                             uint32_t backend,
                             struct FlPreconditioner **out);

// # Safety
// `pc` is null or came from `fl_precond_new*` and is not used afterwards.
void fl_precond_free(struct FlPreconditioner *pc);

// `z = P⁻¹ r`.
//
// # Safety
// `r` and `z` point to `n` doubles and do not overlap.
enum FlStatus fl_precond_apply(const struct FlPreconditioner *pc,
                               const double *r,
                               double *z,
                               uint64_t n);

// Solves `M x = b` by PCG. `pc` may be null for plain CG. On entry `x`
// holds the initial guess. `max_iterations = 0` picks the default cap.
// Returns `NotConverged` (with `x` and `info` filled) when the cap is hit.
//
// # Safety
// `b` and `x` point to `n` doubles; `info` is null or writable.
enum FlStatus fl_solve(const struct FlOperator *op,
                       const struct FlPreconditioner *pc,
                       const double *b,
                       double *x,
                       uint64_t n,
                       double tol,
                       uint64_t max_iterations,
                       struct FlSolveInfo *info);

// One Crank–Nicolson step `u ← u_{k+1}` with sources `f_k`, `f_{k+1}`
// (either may be null for zero). `pc` may be null.
//
// # Safety
// `u` points to `n` doubles; `f_k` and `f_k1` are null or point to `n`
// doubles; `info` is null or writable.
enum FlStatus fl_cn_step(const struct FlOperator *op,
                         const struct FlPreconditioner *pc,
                         double *u,
                         const double *f_k,
                         const double *f_k1,
                         uint64_t n,
                         double dt,
                         double tol,
                         struct FlSolveInfo *info);

// Copies the last error into `buf` (NUL-terminated, truncated to `len`).
// Returns the full message length, or 0 when there is none.
//
// # Safety
// `buf` is null or points to `len` writable bytes.
uint64_t fl_last_error_copy(char *buf, uint64_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAP_H */
