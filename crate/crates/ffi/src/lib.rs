//! C interface to `srpcr`.
//!
//! Matrices, preconditioners and recycle bases are opaque handles created by
//! `srpcr_*_new`/`srpcr_*_load` style calls and released with the matching
//! `*_free`. Every fallible call returns an [`SrpcrStatus`]; on failure
//! [`srpcr_last_error_message`] describes it. Vectors are caller-owned arrays
//! of `n` doubles. Handles may be shared between threads for reading; a
//! single solve never spawns threads.

use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::ptr;

use srpcr::archive::{load_basis, save_basis};
use srpcr::operator::{MvecCounter, OperatorChain};
use srpcr::precond::Preconditioner;
use srpcr::problem::{gen_laplace_1d, gen_laplace_2d, read_matrix_market};
use srpcr::recycle::{cost_ledger, srpcr_ap_solve, RecycleBasis};
use srpcr::solver::{pcr_solve, pminres_solve, HarvestConfig, PcrOptions, SolveReport};
use srpcr::sparse::CsrMatrix;

mod status;

pub use status::{srpcr_last_error_message, srpcr_status_name, SrpcrStatus};
use status::{guard, invalid, null, Failure};

/// Symmetric sparse matrix in compressed rows.
pub struct SrpcrMatrix {
    inner: CsrMatrix,
}

/// Symmetric positive definite preconditioner `M`.
pub struct SrpcrPreconditioner {
    inner: Preconditioner,
}

/// Short representations of recycled Krylov basis blocks.
pub struct SrpcrBasis {
    inner: RecycleBasis,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrpcrPreconditionerKind {
    Identity = 0,
    Jacobi = 1,
    SignedTridiagonal = 2,
    Ic0 = 3,
}

/// Counters of one solve. `mvec_a` counts applications of `A`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SrpcrSolveInfo {
    pub iterations: usize,
    pub mvec_a: u64,
    pub mvec_m_inv: u64,
    /// `‖M⁻¹r‖₂ / ‖M⁻¹b‖₂` at exit.
    pub final_relres: f64,
    pub converged: bool,
    /// Recycled solves only: MVecs spent projecting onto the basis.
    pub projection_mvec: u64,
    pub stored_columns: usize,
}

impl SrpcrSolveInfo {
    fn from_report(r: &SolveReport) -> Self {
        SrpcrSolveInfo {
            iterations: r.iterations,
            mvec_a: r.mvec.a,
            mvec_m_inv: r.mvec.m_inv,
            final_relres: r.final_relres(),
            converged: r.converged(),
            projection_mvec: 0,
            stored_columns: r.stored_columns,
        }
    }
}

const VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();

/// Library version, e.g. `"0.1.0"`.
#[no_mangle]
pub extern "C" fn srpcr_version() -> *const c_char {
    VERSION.as_ptr().cast()
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Failure {
        status: SrpcrStatus::InvalidUtf8,
        message: "path is not valid UTF-8".into(),
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_info(info: *mut SrpcrSolveInfo, value: SrpcrSolveInfo) {
    if let Some(slot) = info.as_mut() {
        *slot = value;
    }
}

// ---- matrices ----

/// Copies a symmetric CSR matrix of order `n`; `row_offsets` has `n + 1`
/// entries and `row_offsets[n]` gives the length of the other two arrays.
///
/// # Safety
/// The arrays must be valid for the lengths above; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_from_csr(
    n: usize,
    row_offsets: *const usize,
    col_indices: *const usize,
    values: *const f64,
    out: *mut *mut SrpcrMatrix,
) -> SrpcrStatus {
    guard(|| {
        if row_offsets.is_null() {
            return Err(null("row_offsets"));
        }
        let offsets = std::slice::from_raw_parts(row_offsets, n + 1).to_vec();
        let nnz = offsets[n];
        let cols = if nnz == 0 {
            Vec::new()
        } else if col_indices.is_null() {
            return Err(null("col_indices"));
        } else {
            std::slice::from_raw_parts(col_indices, nnz).to_vec()
        };
        let vals = slice(values, nnz, "values")?.to_vec();
        let a = CsrMatrix::from_csr(n, n, offsets, cols, vals)?.into_symmetric()?;
        store(out, SrpcrMatrix { inner: a })
    })
}

/// 5-point Laplacian on a `grid × grid` interior grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_laplace_2d(grid: usize, out: *mut *mut SrpcrMatrix) -> SrpcrStatus {
    guard(|| store(out, SrpcrMatrix { inner: gen_laplace_2d(grid)? }))
}

/// `scale · tridiag(−1, 2, −1)` of order `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_laplace_1d(n: usize, scale: f64, out: *mut *mut SrpcrMatrix) -> SrpcrStatus {
    guard(|| store(out, SrpcrMatrix { inner: gen_laplace_1d(n, scale)? }))
}

/// Reads a real symmetric (or symmetric general) coordinate Matrix Market file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_read_matrix_market(
    path: *const c_char,
    out: *mut *mut SrpcrMatrix,
) -> SrpcrStatus {
    guard(|| {
        let p = path_arg(path)?;
        store(out, SrpcrMatrix { inner: read_matrix_market(p)? })
    })
}

/// Order of the matrix, 0 for a null handle.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_dim(a: *const SrpcrMatrix) -> usize {
    a.as_ref().map_or(0, |m| m.inner.n_rows())
}

/// Stored entries, 0 for a null handle.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_nnz(a: *const SrpcrMatrix) -> usize {
    a.as_ref().map_or(0, |m| m.inner.nnz())
}

/// `y = A·x`.
///
/// # Safety
/// `x` and `y` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_spmv(a: *const SrpcrMatrix, x: *const f64, y: *mut f64, n: usize) -> SrpcrStatus {
    guard(|| {
        let a = handle(a, "matrix")?;
        let x = slice(x, n, "x")?;
        let y = slice_mut(y, n, "y")?;
        y.copy_from_slice(&a.inner.spmv(x)?);
        Ok(())
    })
}

/// # Safety
/// `a` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn srpcr_matrix_free(a: *mut SrpcrMatrix) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

// ---- preconditioners ----

/// Builds `M` for `a`; `shift` is the initial diagonal shift of `ic0` and
/// ignored otherwise.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_preconditioner_new(
    a: *const SrpcrMatrix,
    kind: SrpcrPreconditionerKind,
    shift: f64,
    out: *mut *mut SrpcrPreconditioner,
) -> SrpcrStatus {
    guard(|| {
        let a = &handle(a, "matrix")?.inner;
        let m = match kind {
            SrpcrPreconditionerKind::Identity => Preconditioner::identity(a.n_rows()),
            SrpcrPreconditionerKind::Jacobi => Preconditioner::jacobi(a)?,
            SrpcrPreconditionerKind::SignedTridiagonal => Preconditioner::signed_tridiagonal(a)?,
            SrpcrPreconditionerKind::Ic0 => Preconditioner::ic0(a, shift)?,
        };
        store(out, SrpcrPreconditioner { inner: m })
    })
}

/// `y = M⁻¹·x`.
///
/// # Safety
/// `x` and `y` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn srpcr_preconditioner_apply_inv(
    m: *const SrpcrPreconditioner,
    x: *const f64,
    y: *mut f64,
    n: usize,
) -> SrpcrStatus {
    guard(|| {
        let m = handle(m, "preconditioner")?;
        let x = slice(x, n, "x")?;
        let y = slice_mut(y, n, "y")?;
        y.copy_from_slice(&m.inner.apply_inv(x)?);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn srpcr_preconditioner_free(m: *mut SrpcrPreconditioner) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---- solves ----

struct SolveArgs<'a> {
    a: &'a CsrMatrix,
    m: &'a Preconditioner,
    b: &'a [f64],
    x0: Option<&'a [f64]>,
    x: &'a mut [f64],
}

unsafe fn solve_args<'a>(
    a: *const SrpcrMatrix,
    m: *const SrpcrPreconditioner,
    b: *const f64,
    x0: *const f64,
    x: *mut f64,
    n: usize,
) -> Result<SolveArgs<'a>, Failure> {
    let a = &handle(a, "matrix")?.inner;
    let m = &handle(m, "preconditioner")?.inner;
    if a.n_rows() != n || m.dim() != n {
        return Err(Failure::from(srpcr::Error::DimensionMismatch {
            context: "solve arguments",
            expected: a.n_rows(),
            actual: if a.n_rows() != n { n } else { m.dim() },
        }));
    }
    Ok(SolveArgs {
        a,
        m,
        b: slice(b, n, "b")?,
        x0: if x0.is_null() { None } else { Some(slice(x0, n, "x0")?) },
        x: slice_mut(x, n, "x")?,
    })
}

/// Preconditioned conjugate residuals. `x0` may be null (zero start). The
/// solution goes to `x`; `info` may be null. Hitting `max_iter` is not an
/// error: check `info->converged`.
///
/// # Safety
/// Vectors must hold `n` doubles; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn srpcr_pcr_solve(
    a: *const SrpcrMatrix,
    m: *const SrpcrPreconditioner,
    b: *const f64,
    x0: *const f64,
    x: *mut f64,
    n: usize,
    tol: f64,
    max_iter: usize,
    info: *mut SrpcrSolveInfo,
) -> SrpcrStatus {
    guard(|| {
        let args = solve_args(a, m, b, x0, x, n)?;
        let counter = MvecCounter::default();
        let op = OperatorChain::new(args.a, args.m, &counter)?;
        let out = pcr_solve(&op, args.b, args.x0, &PcrOptions::new(tol, max_iter))?;
        args.x.copy_from_slice(&out.report.x);
        write_info(info, SrpcrSolveInfo::from_report(&out.report));
        Ok(())
    })
}

/// Preconditioned MINRES with the same stopping measure as PCR.
///
/// # Safety
/// As [`srpcr_pcr_solve`].
#[no_mangle]
pub unsafe extern "C" fn srpcr_pminres_solve(
    a: *const SrpcrMatrix,
    m: *const SrpcrPreconditioner,
    b: *const f64,
    x0: *const f64,
    x: *mut f64,
    n: usize,
    tol: f64,
    max_iter: usize,
    info: *mut SrpcrSolveInfo,
) -> SrpcrStatus {
    guard(|| {
        let args = solve_args(a, m, b, x0, x, n)?;
        let counter = MvecCounter::default();
        let op = OperatorChain::new(args.a, args.m, &counter)?;
        let report = pminres_solve(&op, args.b, args.x0, tol, max_iter)?;
        args.x.copy_from_slice(&report.x);
        write_info(info, SrpcrSolveInfo::from_report(&report));
        Ok(())
    })
}

/// PCR solve that also harvests `blocks` basis blocks of `columns` stored
/// vectors and stride `stride`. With `complete_harvest` the solve keeps
/// iterating past `tol` until every block is taken (or `max_iter`).
///
/// `*basis_out` receives a new basis, or null when the solve ended before the
/// first block was complete.
///
/// # Safety
/// As [`srpcr_pcr_solve`]; `basis_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_pcr_solve_harvest(
    a: *const SrpcrMatrix,
    m: *const SrpcrPreconditioner,
    b: *const f64,
    x0: *const f64,
    x: *mut f64,
    n: usize,
    tol: f64,
    max_iter: usize,
    blocks: usize,
    columns: usize,
    stride: usize,
    complete_harvest: bool,
    info: *mut SrpcrSolveInfo,
    basis_out: *mut *mut SrpcrBasis,
) -> SrpcrStatus {
    guard(|| {
        if basis_out.is_null() {
            return Err(null("basis_out"));
        }
        *basis_out = ptr::null_mut();
        let args = solve_args(a, m, b, x0, x, n)?;
        let counter = MvecCounter::default();
        let op = OperatorChain::new(args.a, args.m, &counter)?;
        let h = HarvestConfig::new(blocks, columns, stride)?.run_to_limit(complete_harvest);
        let out = pcr_solve(&op, args.b, args.x0, &PcrOptions::new(tol, max_iter).with_harvest(h))?;
        args.x.copy_from_slice(&out.report.x);
        write_info(info, SrpcrSolveInfo::from_report(&out.report));
        match out.harvest.as_ref() {
            Some(h) if !h.blocks.is_empty() => store(basis_out, SrpcrBasis { inner: RecycleBasis::from_harvest(h)? }),
            _ => Ok(()),
        }
    })
}

/// Recycled solve: projection onto every basis block, then deflated PCR
/// post-iterations from the projected iterate.
///
/// # Safety
/// As [`srpcr_pcr_solve`]; `basis` must be live.
#[no_mangle]
pub unsafe extern "C" fn srpcr_recycled_solve(
    basis: *const SrpcrBasis,
    a: *const SrpcrMatrix,
    m: *const SrpcrPreconditioner,
    b: *const f64,
    x0: *const f64,
    x: *mut f64,
    n: usize,
    tol: f64,
    max_iter: usize,
    info: *mut SrpcrSolveInfo,
) -> SrpcrStatus {
    guard(|| {
        let basis = &handle(basis, "basis")?.inner;
        let args = solve_args(a, m, b, x0, x, n)?;
        let counter = MvecCounter::default();
        let op = OperatorChain::new(args.a, args.m, &counter)?;
        let out = srpcr_ap_solve(basis, &op, args.b, args.x0, &PcrOptions::new(tol, max_iter))?;
        args.x.copy_from_slice(&out.report.x);
        let mut i = SrpcrSolveInfo::from_report(&out.report);
        i.projection_mvec = out.recycle.projection_mvec.a;
        i.iterations = out.recycle.post_iterations;
        write_info(info, i);
        Ok(())
    })
}

// ---- bases ----

/// # Safety
/// `basis` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_save(basis: *const SrpcrBasis, path: *const c_char) -> SrpcrStatus {
    guard(|| {
        let basis = handle(basis, "basis")?;
        save_basis(path_arg(path)?, &basis.inner)?;
        Ok(())
    })
}

/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_load(path: *const c_char, out: *mut *mut SrpcrBasis) -> SrpcrStatus {
    guard(|| {
        let basis = load_basis(path_arg(path)?)?;
        store(out, SrpcrBasis { inner: basis })
    })
}

/// Problem order `N` of the basis, 0 for a null handle.
///
/// # Safety
/// `basis` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_dim(basis: *const SrpcrBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.dim())
}

/// Dimension of the recycled space, `Σ k·J` over blocks.
///
/// # Safety
/// `basis` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_recycled_dim(basis: *const SrpcrBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.total_dim())
}

/// Stored columns and projection MVecs of this basis.
///
/// # Safety
/// `basis` must be live; the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_ledger(
    basis: *const SrpcrBasis,
    stored_columns: *mut usize,
    projection_mvec: *mut usize,
) -> SrpcrStatus {
    guard(|| {
        let basis = handle(basis, "basis")?;
        let (c, v) = basis.inner.cost_ledger();
        if stored_columns.is_null() || projection_mvec.is_null() {
            return Err(null("ledger output"));
        }
        *stored_columns = c;
        *projection_mvec = v;
        Ok(())
    })
}

/// # Safety
/// `basis` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn srpcr_basis_free(basis: *mut SrpcrBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// `ℓ(k+2)` stored columns and `2ℓJ` projection MVecs.
///
/// # Safety
/// The out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn srpcr_cost_ledger(
    blocks: usize,
    columns: usize,
    stride: usize,
    stored_columns: *mut usize,
    projection_mvec: *mut usize,
) -> SrpcrStatus {
    guard(|| {
        if blocks == 0 || columns == 0 || stride == 0 {
            return Err(invalid(format!("ledger needs l, k, J >= 1, got ({blocks}, {columns}, {stride})")));
        }
        if stored_columns.is_null() || projection_mvec.is_null() {
            return Err(null("ledger output"));
        }
        let (c, v) = cost_ledger(blocks, columns, stride);
        *stored_columns = c;
        *projection_mvec = v;
        Ok(())
    })
}
