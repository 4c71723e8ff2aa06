//! Symmetric positive definite preconditioners `M` with `M⁻¹` and `M` applications.

use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::linalg::DenseVector;
use crate::sparse::CsrMatrix;

/// Number of doubled-shift retries the incomplete Cholesky factorization attempts.
pub const IC0_MAX_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Identity,
    Jacobi,
    SignedTridiagonal,
    Ic0,
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreconditionerKind::Identity => "identity",
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::SignedTridiagonal => "signed-tridiagonal",
            PreconditionerKind::Ic0 => "ic0",
        })
    }
}

#[derive(Debug, Clone)]
enum Factors {
    Identity,
    Diagonal(Vec<f64>),
    /// Band of `M` plus its `LDLᵀ` factorization: `l[i]` sits at `(i+1, i)`.
    Tridiagonal {
        diag: Vec<f64>,
        off: Vec<f64>,
        d: Vec<f64>,
        l: Vec<f64>,
    },
    /// Lower triangular factor with the diagonal stored last in each row.
    Cholesky { lower: CsrMatrix, shift: f64 },
}

#[derive(Debug, Clone)]
pub struct Preconditioner {
    n: usize,
    factors: Factors,
}

impl Preconditioner {
    pub fn identity(n: usize) -> Self {
        Preconditioner {
            n,
            factors: Factors::Identity,
        }
    }

    /// Diagonal scaling with `|aᵢᵢ|`, so indefinite matrices still give an SPD `M`.
    pub fn jacobi(a: &CsrMatrix) -> Result<Self> {
        require_square(a)?;
        let diag: Vec<f64> = a.diagonal().iter().map(|d| d.abs()).collect();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::NotSpd(format!("zero diagonal entry at row {}", i + 1)));
        }
        Ok(Preconditioner {
            n: a.n_rows(),
            factors: Factors::Diagonal(diag),
        })
    }

    /// `M = sign(diag(A)) · tridiag(A)`, factorized as `LDLᵀ`.
    pub fn signed_tridiagonal(a: &CsrMatrix) -> Result<Self> {
        require_square(a)?;
        let n = a.n_rows();
        let signs: Vec<f64> = a
            .diagonal()
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d == 0.0 {
                    Err(Error::InvalidInput(format!(
                        "zero diagonal entry at row {} makes sign(diag(A)) singular",
                        i + 1
                    )))
                } else {
                    Ok(d.signum())
                }
            })
            .collect::<Result<_>>()?;
        let diag: Vec<f64> = (0..n).map(|i| signs[i] * a.get(i, i)).collect();
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n.saturating_sub(1) {
            let upper = signs[i] * a.get(i, i + 1);
            let lower = signs[i + 1] * a.get(i + 1, i);
            if upper != lower {
                return Err(Error::NotSpd(format!(
                    "signed band is not symmetric between rows {} and {}",
                    i + 1,
                    i + 2
                )));
            }
            off.push(upper);
        }
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = diag[0];
        for i in 0..n {
            if d[i] <= 0.0 || !d[i].is_finite() {
                return Err(Error::NotSpd(format!(
                    "LDLᵀ pivot {:e} at row {}",
                    d[i],
                    i + 1
                )));
            }
            if i + 1 < n {
                l[i] = off[i] / d[i];
                d[i + 1] = diag[i + 1] - l[i] * off[i];
            }
        }
        Ok(Preconditioner {
            n,
            factors: Factors::Tridiagonal { diag, off, d, l },
        })
    }

    /// Zero-fill incomplete Cholesky `M = L·Lᵀ` on the lower pattern of `A + shift·I`.
    ///
    /// On a non-positive pivot the factorization restarts with an extra diagonal
    /// shift of `1e-3·mean|diag(A)|`, doubled on each of up to
    /// [`IC0_MAX_RETRIES`] retries.
    pub fn ic0(a: &CsrMatrix, shift: f64) -> Result<Self> {
        require_square(a)?;
        if !(shift >= 0.0) {
            return Err(Error::InvalidInput(format!("negative IC shift {shift}")));
        }
        let n = a.n_rows();
        if let Some(lower) = ic0_factor(a, shift) {
            return Ok(Preconditioner {
                n,
                factors: Factors::Cholesky { lower, shift },
            });
        }
        let mean_diag = a.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
        let mut extra = 1e-3 * mean_diag;
        let mut last = shift;
        for retry in 0..IC0_MAX_RETRIES {
            last = shift + extra;
            log::debug!("ic0 breakdown, retry {} with shift {:e}", retry + 1, last);
            if let Some(lower) = ic0_factor(a, last) {
                return Ok(Preconditioner {
                    n,
                    factors: Factors::Cholesky { lower, shift: last },
                });
            }
            extra *= 2.0;
        }
        Err(Error::IcBreakdown {
            retries: IC0_MAX_RETRIES,
            shift: last,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> PreconditionerKind {
        match self.factors {
            Factors::Identity => PreconditionerKind::Identity,
            Factors::Diagonal(_) => PreconditionerKind::Jacobi,
            Factors::Tridiagonal { .. } => PreconditionerKind::SignedTridiagonal,
            Factors::Cholesky { .. } => PreconditionerKind::Ic0,
        }
    }

    /// Diagonal shift the incomplete Cholesky factorization ended up using.
    pub fn ic_shift(&self) -> Option<f64> {
        match self.factors {
            Factors::Cholesky { shift, .. } => Some(shift),
            _ => None,
        }
    }

    /// Lower triangular incomplete Cholesky factor, if this is an `ic0` preconditioner.
    pub fn ic_factor(&self) -> Option<&CsrMatrix> {
        match &self.factors {
            Factors::Cholesky { lower, .. } => Some(lower),
            _ => None,
        }
    }

    /// `M⁻¹·x`.
    pub fn apply_inv(&self, x: &[f64]) -> Result<DenseVector> {
        check_len("preconditioner apply_inv", self.n, x.len())?;
        let mut y = x.to_vec();
        self.apply_inv_in_place(&mut y);
        DenseVector::from_vec_unchecked(y).ensure_finite("preconditioner apply_inv")
    }

    /// `M·x`.
    pub fn apply_fwd(&self, x: &[f64]) -> Result<DenseVector> {
        check_len("preconditioner apply_fwd", self.n, x.len())?;
        let y = match &self.factors {
            Factors::Identity => x.to_vec(),
            Factors::Diagonal(diag) => x.iter().zip(diag).map(|(v, d)| v * d).collect(),
            Factors::Tridiagonal { diag, off, .. } => {
                let n = self.n;
                (0..n)
                    .map(|i| {
                        let mut s = diag[i] * x[i];
                        if i > 0 {
                            s += off[i - 1] * x[i - 1];
                        }
                        if i + 1 < n {
                            s += off[i] * x[i + 1];
                        }
                        s
                    })
                    .collect()
            }
            Factors::Cholesky { lower, .. } => {
                let mut t = vec![0.0; self.n];
                for (i, &xi) in x.iter().enumerate() {
                    for (j, v) in lower.row(i) {
                        t[j] += v * xi;
                    }
                }
                let mut y = vec![0.0; self.n];
                lower.spmv_into(&t, &mut y);
                y
            }
        };
        DenseVector::from_vec_unchecked(y).ensure_finite("preconditioner apply_fwd")
    }

    /// Unchecked in-place `x ← M⁻¹·x`.
    pub(crate) fn apply_inv_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        match &self.factors {
            Factors::Identity => {}
            Factors::Diagonal(diag) => {
                for (v, d) in x.iter_mut().zip(diag) {
                    *v /= d;
                }
            }
            Factors::Tridiagonal { d, l, .. } => {
                let n = self.n;
                for i in 1..n {
                    x[i] -= l[i - 1] * x[i - 1];
                }
                for i in 0..n {
                    x[i] /= d[i];
                }
                for i in (0..n.saturating_sub(1)).rev() {
                    x[i] -= l[i] * x[i + 1];
                }
            }
            Factors::Cholesky { lower, .. } => {
                let offsets = lower.row_offsets();
                let cols = lower.col_indices();
                let vals = lower.values();
                // L y = x
                for i in 0..self.n {
                    let (lo, hi) = (offsets[i], offsets[i + 1]);
                    let mut s = x[i];
                    for p in lo..hi - 1 {
                        s -= vals[p] * x[cols[p]];
                    }
                    x[i] = s / vals[hi - 1];
                }
                // Lᵀ z = y
                for i in (0..self.n).rev() {
                    let (lo, hi) = (offsets[i], offsets[i + 1]);
                    let zi = x[i] / vals[hi - 1];
                    x[i] = zi;
                    for p in lo..hi - 1 {
                        x[cols[p]] -= vals[p] * zi;
                    }
                }
            }
        }
    }
}

fn require_square(a: &CsrMatrix) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::InvalidInput(format!(
            "preconditioner needs a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    Ok(())
}

/// IC(0) of `A + shift·I`; `None` on a non-positive pivot.
fn ic0_factor(a: &CsrMatrix, shift: f64) -> Option<CsrMatrix> {
    let n = a.n_rows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    row_offsets.push(0);
    // Scratch holding the row of L being built, indexed by column.
    let mut work = vec![0.0; n];
    let mut in_row = vec![usize::MAX; n];
    for i in 0..n {
        let start = col_indices.len();
        let mut diag = shift;
        for (j, v) in a.row(i) {
            if j < i {
                col_indices.push(j);
                values.push(0.0);
                work[j] = v;
                in_row[j] = i;
            } else if j == i {
                diag += v;
            }
        }
        for p in start..col_indices.len() {
            let k = col_indices[p];
            let mut s = work[k];
            let (klo, khi) = (row_offsets[k], row_offsets[k + 1]);
            for q in klo..khi - 1 {
                let j = col_indices[q];
                if in_row[j] == i {
                    s -= work[j] * values[q];
                }
            }
            let lkk = values[khi - 1];
            let lik = s / lkk;
            work[k] = lik;
            values[p] = lik;
            diag -= lik * lik;
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        col_indices.push(i);
        values.push(diag.sqrt());
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::from_csr(n, n, row_offsets, col_indices, values).ok()
}
