#ifndef SRPCR_H
#define SRPCR_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SRPCR_PRECONDITIONER_KIND_IDENTITY = 0,
  SRPCR_PRECONDITIONER_KIND_JACOBI = 1,
  SRPCR_PRECONDITIONER_KIND_SIGNED_TRIDIAGONAL = 2,
  SRPCR_PRECONDITIONER_KIND_IC0 = 3,
} SrpcrPreconditionerKind;

/**
 * Result of every fallible call. `SRPCR_STATUS_OK` is zero.
 */
typedef enum {
  SRPCR_STATUS_OK = 0,
  SRPCR_STATUS_NULL_POINTER = 1,
  SRPCR_STATUS_INVALID_UTF8 = 2,
  SRPCR_STATUS_DIMENSION_MISMATCH = 3,
  SRPCR_STATUS_INVALID_INPUT = 4,
  SRPCR_STATUS_NOT_SPD = 5,
  SRPCR_STATUS_IC_BREAKDOWN = 6,
  SRPCR_STATUS_NUMERICAL_BREAKDOWN = 7,
  SRPCR_STATUS_BREAKDOWN = 8,
  SRPCR_STATUS_R_SINGULAR = 9,
  SRPCR_STATUS_ORTHOGONALITY_COLLAPSE = 10,
  SRPCR_STATUS_PARSE = 11,
  SRPCR_STATUS_ARCHIVE = 12,
  SRPCR_STATUS_IO = 13,
  SRPCR_STATUS_OTHER = 14,
  SRPCR_STATUS_PANIC = 15,
} SrpcrStatus;

/**
 * Short representations of recycled Krylov basis blocks.
 */
typedef struct SrpcrBasis SrpcrBasis;

/**
 * Symmetric sparse matrix in compressed rows.
 */
typedef struct SrpcrMatrix SrpcrMatrix;

/**
 * Symmetric positive definite preconditioner `M`.
 */
typedef struct SrpcrPreconditioner SrpcrPreconditioner;

/**
 * Counters of one solve. `mvec_a` counts applications of `A`.
 */
typedef struct {
  size_t iterations;
  uint64_t mvec_a;
  uint64_t mvec_m_inv;
  /**
   * `‖M⁻¹r‖₂ / ‖M⁻¹b‖₂` at exit.
   */
  double final_relres;
  bool converged;
  /**
   * Recycled solves only: MVecs spent projecting onto the basis.
   */
  uint64_t projection_mvec;
  size_t stored_columns;
} SrpcrSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, e.g. `"0.1.0"`.
 */
const char *srpcr_version(void);

/**
 * Copies a symmetric CSR matrix of order `n`; `row_offsets` has `n + 1`
 * entries and `row_offsets[n]` gives the length of the other two arrays.
 *
 * # Safety
 * The arrays must be valid for the lengths above; `out` must be writable.
 */
SrpcrStatus srpcr_matrix_from_csr(size_t n,
                                  const size_t *row_offsets,
                                  const size_t *col_indices,
                                  const double *values,
                                  SrpcrMatrix **out);

/**
 * 5-point Laplacian on a `grid × grid` interior grid.
 *
 * # Safety
 * `out` must be writable.
 */
SrpcrStatus srpcr_matrix_laplace_2d(size_t grid, SrpcrMatrix **out);

/**
 * `scale · tridiag(−1, 2, −1)` of order `n`.
 *
 * # Safety
 * `out` must be writable.
 */
SrpcrStatus srpcr_matrix_laplace_1d(size_t n, double scale, SrpcrMatrix **out);

/**
 * Reads a real symmetric (or symmetric general) coordinate Matrix Market file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
SrpcrStatus srpcr_matrix_read_matrix_market(const char *path, SrpcrMatrix **out);

/**
 * Order of the matrix, 0 for a null handle.
 *
 * # Safety
 * `a` must be null or a live handle.
 */
size_t srpcr_matrix_dim(const SrpcrMatrix *a);

/**
 * Stored entries, 0 for a null handle.
 *
 * # Safety
 * `a` must be null or a live handle.
 */
size_t srpcr_matrix_nnz(const SrpcrMatrix *a);

/**
 * `y = A·x`.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles.
 */
SrpcrStatus srpcr_matrix_spmv(const SrpcrMatrix *a, const double *x, double *y, size_t n);

/**
 * # Safety
 * `a` must be null or a handle not freed before.
 */
void srpcr_matrix_free(SrpcrMatrix *a);

/**
 * Builds `M` for `a`; `shift` is the initial diagonal shift of `ic0` and
 * ignored otherwise.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
SrpcrStatus srpcr_preconditioner_new(const SrpcrMatrix *a,
                                     SrpcrPreconditionerKind kind,
                                     double shift,
                                     SrpcrPreconditioner **out);

/**
 * `y = M⁻¹·x`.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles.
 */
SrpcrStatus srpcr_preconditioner_apply_inv(const SrpcrPreconditioner *m,
                                           const double *x,
                                           double *y,
                                           size_t n);

/**
 * # Safety
 * `m` must be null or a handle not freed before.
 */
void srpcr_preconditioner_free(SrpcrPreconditioner *m);

/**
 * Preconditioned conjugate residuals. `x0` may be null (zero start). The
 * solution goes to `x`; `info` may be null. Hitting `max_iter` is not an
 * error: check `info->converged`.
 *
 * # Safety
 * Vectors must hold `n` doubles; handles must be live.
 */
SrpcrStatus srpcr_pcr_solve(const SrpcrMatrix *a,
                            const SrpcrPreconditioner *m,
                            const double *b,
                            const double *x0,
                            double *x,
                            size_t n,
                            double tol,
                            size_t max_iter,
                            SrpcrSolveInfo *info);

/**
 * Preconditioned MINRES with the same stopping measure as PCR.
 *
 * # Safety
 * As [`srpcr_pcr_solve`].
 */
SrpcrStatus srpcr_pminres_solve(const SrpcrMatrix *a,
                                const SrpcrPreconditioner *m,
                                const double *b,
                                const double *x0,
                                double *x,
                                size_t n,
                                double tol,
                                size_t max_iter,
                                SrpcrSolveInfo *info);

/**
 * PCR solve that also harvests `blocks` basis blocks of `columns` stored
 * vectors and stride `stride`. With `complete_harvest` the solve keeps
 * iterating past `tol` until every block is taken (or `max_iter`).
 *
 * `*basis_out` receives a new basis, or null when the solve ended before the
 * first block was complete.
 *
 * # Safety
 * As [`srpcr_pcr_solve`]; `basis_out` must be writable.
 */
SrpcrStatus srpcr_pcr_solve_harvest(const SrpcrMatrix *a,
                                    const SrpcrPreconditioner *m,
                                    const double *b,
                                    const double *x0,
                                    double *x,
                                    size_t n,
                                    double tol,
                                    size_t max_iter,
                                    size_t blocks,
                                    size_t columns,
                                    size_t stride,
                                    bool complete_harvest,
                                    SrpcrSolveInfo *info,
                                    SrpcrBasis **basis_out);

/**
 * Recycled solve: projection onto every basis block, then deflated PCR
 * post-iterations from the projected iterate.
 *
 * # Safety
 * As [`srpcr_pcr_solve`]; `basis` must be live.
 */
SrpcrStatus srpcr_recycled_solve(const SrpcrBasis *basis,
                                 const SrpcrMatrix *a,
                                 const SrpcrPreconditioner *m,
                                 const double *b,
                                 const double *x0,
                                 double *x,
                                 size_t n,
                                 double tol,
                                 size_t max_iter,
                                 SrpcrSolveInfo *info);

/**
 * # Safety
 * `basis` must be live; `path` NUL-terminated.
 */
SrpcrStatus srpcr_basis_save(const SrpcrBasis *basis, const char *path);

/**
 * # Safety
 * `path` NUL-terminated; `out` writable.
 */
SrpcrStatus srpcr_basis_load(const char *path, SrpcrBasis **out);

/**
 * Problem order `N` of the basis, 0 for a null handle.
 *
 * # Safety
 * `basis` must be null or live.
 */
size_t srpcr_basis_dim(const SrpcrBasis *basis);

/**
 * Dimension of the recycled space, `Σ k·J` over blocks.
 *
 * # Safety
 * `basis` must be null or live.
 */
size_t srpcr_basis_recycled_dim(const SrpcrBasis *basis);

/**
 * Stored columns and projection MVecs of this basis.
 *
 * # Safety
 * `basis` must be live; the out pointers writable.
 */
SrpcrStatus srpcr_basis_ledger(const SrpcrBasis *basis,
                               size_t *stored_columns,
                               size_t *projection_mvec);

/**
 * # Safety
 * `basis` must be null or a handle not freed before.
 */
void srpcr_basis_free(SrpcrBasis *basis);

/**
 * `ℓ(k+2)` stored columns and `2ℓJ` projection MVecs.
 *
 * # Safety
 * The out pointers must be writable.
 */
SrpcrStatus srpcr_cost_ledger(size_t blocks,
                              size_t columns,
                              size_t stride,
                              size_t *stored_columns,
                              size_t *projection_mvec);

/**
 * Message of the last failed call on this thread, or null after a success.
 *
 * The pointer stays valid until the next `srpcr_*` call on the same thread.
 */
const char *srpcr_last_error_message(void);

/**
 * Static name of a status code, e.g. `"not-spd"`.
 */
const char *srpcr_status_name(SrpcrStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRPCR_H */
