//! Stability maps for choosing basis block sizes, and a 2-norm condition estimate.
//!
//! `Q = VᵀMV` exposes the loss of M-orthogonality of the Lanczos images and
//! `G[i][j] = κ₂(T_{i:j,i:j})` the conditioning of tridiagonal sections; the
//! band in which both stay small bounds a usable block size.

use crate::error::{Error, Result};
use crate::linalg::{kernels, DenseVector, TridiagonalMatrix};
use crate::operator::{MvecCounter, OperatorChain};
use crate::precond::Preconditioner;
use crate::solver::{pcr_solve_observed, pminres_solve, HarvestConfig, PcrOptions};
use crate::sparse::CsrMatrix;

/// Largest basis the diagnostics keep in memory.
pub const MAX_DIAGNOSTIC_COLUMNS: usize = 2000;
/// Default `j − i` limit for [`compute_g`].
pub const DEFAULT_G_BAND: usize = 200;

/// Explicit Lanczos basis of a PCR run, for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct FullBasis {
    pub u: Vec<DenseVector>,
    pub v: Vec<DenseVector>,
    pub t: TridiagonalMatrix,
}

/// Runs PCR on `b` for `m` basis columns (plus the one step that completes
/// `T`) and keeps every column.
pub fn capture_basis(op: &OperatorChain<'_>, b: &[f64], m: usize) -> Result<FullBasis> {
    if m > MAX_DIAGNOSTIC_COLUMNS {
        return Err(Error::MemoryGuard {
            requested: m,
            limit: MAX_DIAGNOSTIC_COLUMNS,
        });
    }
    let harvest = HarvestConfig::new(1, m, 1)?.run_to_limit(true);
    let opts = PcrOptions::new(f64::MIN_POSITIVE, m + 1).with_harvest(harvest);
    let mut u = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut observer = |s: &crate::solver::PcrStep<'_>| {
        if u.len() < m {
            u.push(DenseVector::from_vec_unchecked(s.u.to_vec()));
            v.push(DenseVector::from_vec_unchecked(s.v.to_vec()));
        }
    };
    let out = pcr_solve_observed(op, b, None, &opts, &mut observer)?;
    let t = out.harvest.map(|h| h.t).unwrap_or_default();
    if u.len() < m || t.dim() < m {
        return Err(Error::InvalidInput(format!(
            "Krylov space exhausted after {} of {m} columns",
            u.len().min(t.dim())
        )));
    }
    Ok(FullBasis { u, v, t })
}

/// `Q[i][j] = ⟨M·vᵢ, vⱼ⟩`.
pub fn compute_q(m: &Preconditioner, v: &[DenseVector]) -> Result<Vec<Vec<f64>>> {
    if v.len() > MAX_DIAGNOSTIC_COLUMNS {
        return Err(Error::MemoryGuard {
            requested: v.len(),
            limit: MAX_DIAGNOSTIC_COLUMNS,
        });
    }
    let mv: Vec<DenseVector> = v.iter().map(|x| m.apply_fwd(x)).collect::<Result<_>>()?;
    let k = v.len();
    let mut q = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let g = kernels::dot(&mv[i], &v[j]);
            q[i][j] = g;
            q[j][i] = g;
        }
    }
    Ok(q)
}

/// Elementwise `log₁₀|·|`.
pub fn log10_abs(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().map(|row| row.iter().map(|x| x.abs().log10()).collect()).collect()
}

/// Number of eigenvalues of the section `alpha[i..=j]` smaller than `x`.
fn sturm_count(t: &TridiagonalMatrix, i: usize, j: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for r in i..=j {
        let b2 = if r > i { t.beta[r - 1] * t.beta[r - 1] } else { 0.0 };
        q = (t.alpha[r] - x) - if r > i { b2 / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (t.alpha[r].abs() + x.abs() + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest (0-based) eigenvalue of the section by bisection.
fn section_eigenvalue(t: &TridiagonalMatrix, i: usize, j: usize, k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return mid;
        }
        if sturm_count(t, i, j, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// 2-norm condition number of the symmetric tridiagonal section `i..=j`.
pub fn section_condition(t: &TridiagonalMatrix, i: usize, j: usize) -> f64 {
    let n = j - i + 1;
    if n == 1 {
        return if t.alpha[i] == 0.0 { f64::INFINITY } else { 1.0 };
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in i..=j {
        let mut rad = 0.0;
        if r > i {
            rad += t.beta[r - 1].abs();
        }
        if r < j {
            rad += t.beta[r].abs();
        }
        lo = lo.min(t.alpha[r] - rad);
        hi = hi.max(t.alpha[r] + rad);
    }
    let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let (lo, hi) = (lo - pad, hi + pad);
    let l_min = section_eigenvalue(t, i, j, 0, lo, hi);
    let l_max = section_eigenvalue(t, i, j, n - 1, lo, hi);
    let negatives = sturm_count(t, i, j, 0.0);
    let mut small = f64::INFINITY;
    if negatives > 0 {
        small = small.min(section_eigenvalue(t, i, j, negatives - 1, lo, 0.0).abs());
    }
    if negatives < n {
        small = small.min(section_eigenvalue(t, i, j, negatives, 0.0, hi).abs());
    }
    let big = l_min.abs().max(l_max.abs());
    if small == 0.0 {
        f64::INFINITY
    } else {
        big / small
    }
}

/// `G[i][j] = κ₂(T_{i:j,i:j})` for `|i − j| ≤ band`, `NaN` outside the band.
///
/// Rows are distributed over `threads` workers; every entry is computed
/// independently, so the result does not depend on the thread count.
pub fn compute_g(t: &TridiagonalMatrix, band: usize, threads: usize) -> Vec<Vec<f64>> {
    let m = t.dim();
    let threads = threads.max(1).min(m.max(1));
    let mut g = vec![vec![f64::NAN; m]; m];
    let rows: Vec<Vec<(usize, f64)>> = if threads == 1 {
        (0..m).map(|i| g_row(t, i, band)).collect()
    } else {
        let mut rows = vec![Vec::new(); m];
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|w| s.spawn(move || (w..m).step_by(threads).map(|i| (i, g_row(t, i, band))).collect::<Vec<_>>()))
                .collect();
            for h in handles {
                for (i, row) in h.join().expect("worker panicked") {
                    rows[i] = row;
                }
            }
        });
        rows
    };
    for (i, row) in rows.into_iter().enumerate() {
        for (j, kappa) in row {
            g[i][j] = kappa;
            g[j][i] = kappa;
        }
    }
    g
}

fn g_row(t: &TridiagonalMatrix, i: usize, band: usize) -> Vec<(usize, f64)> {
    let end = (i + band).min(t.dim() - 1);
    (i..=end).map(|j| (j, section_condition(t, i, j))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondEstimate {
    pub kappa: f64,
    pub abs_max: f64,
    pub abs_min: f64,
    /// False when either iteration had not settled to `1e-6` relative change.
    pub confident: bool,
}

/// Estimates `κ₂(A)` for symmetric `A` as the ratio of the largest and
/// smallest eigenvalue magnitudes, from power iteration on `A` and inverse
/// iteration through MINRES solves, `iters` steps each at most.
pub fn condest_2norm(a: &CsrMatrix, iters: usize) -> Result<CondEstimate> {
    let n = a.n_rows();
    let m = Preconditioner::identity(n);
    let counter = MvecCounter::default();
    let op = OperatorChain::new(a, &m, &counter)?;
    let start = || {
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin()).collect();
        let nx = kernels::norm2(&x);
        kernels::scale(&mut x, 1.0 / nx);
        x
    };
    let settle = 1e-6;

    let mut x = start();
    let mut abs_max = 0.0;
    let mut max_change = f64::INFINITY;
    for _ in 0..iters.max(1) {
        let mut y = a.spmv(&x)?.into_vec();
        let ny = kernels::norm2(&y);
        if ny == 0.0 {
            return Err(Error::InvalidInput("matrix annihilates the start vector".into()));
        }
        max_change = (ny - abs_max).abs() / ny;
        abs_max = ny;
        kernels::scale(&mut y, 1.0 / ny);
        x = y;
        if max_change <= 1e-15 {
            break;
        }
    }

    let mut x = start();
    let mut abs_min = f64::INFINITY;
    let mut min_change = f64::INFINITY;
    for _ in 0..iters.max(1) {
        let report = pminres_solve(&op, &x, None, 1e-12, 20 * n)?;
        let mut y = report.x.into_vec();
        let ny = kernels::norm2(&y);
        let est = 1.0 / ny;
        min_change = (est - abs_min).abs() / est;
        abs_min = est;
        kernels::scale(&mut y, 1.0 / ny);
        x = y;
        if min_change <= 1e-12 {
            break;
        }
    }
    Ok(CondEstimate {
        kappa: abs_max / abs_min,
        abs_max,
        abs_min,
        confident: max_change <= settle && min_change <= settle,
    })
}
