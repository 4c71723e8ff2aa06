//! Orthonormal right-hand side sequences built from Krylov spaces of `A⁻¹`,
//! `M·A⁻¹` and `A·M⁻¹`, and the symmetric/antisymmetric counterexample pair.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::linalg::{kernels, DenseVector};
use crate::operator::{MvecCounter, OperatorChain};
use crate::precond::Preconditioner;
use crate::problem::gen_laplace_1d;
use crate::solver::pminres_solve;
use crate::sparse::CsrMatrix;

/// Default tolerance of the inner `A⁻¹` solves.
pub const DEFAULT_INNER_TOL: f64 = 1e-12;
/// Orthogonalized vectors shorter than this fraction of their original norm
/// signal a rank deficient sequence.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    /// `span{d, A⁻¹d, A⁻²d, …}`
    A,
    /// `span{M⁻¹d, M·A⁻¹·M⁻¹d, …}`
    B,
    /// `span{d, A·M⁻¹d, …}`
    C,
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::A => "A",
            SequenceKind::B => "B",
            SequenceKind::C => "C",
        })
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SequenceKind::A),
            "B" | "b" => Ok(SequenceKind::B),
            "C" | "c" => Ok(SequenceKind::C),
            other => Err(Error::InvalidInput(format!("unknown sequence kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RhsSequence {
    pub kind: SequenceKind,
    pub vectors: Vec<DenseVector>,
    pub d: DenseVector,
    pub inner_tol: f64,
}

impl RhsSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Generates `q` Euclidean-orthonormal right-hand sides.
///
/// Each new vector is the sequence operator applied to the previous
/// orthonormalized vector, then orthogonalized by modified Gram–Schmidt with
/// one reorthogonalization pass. The span equals that of the raw generator
/// chain. Inner `A⁻¹` applications use preconditioned MINRES to `inner_tol`.
pub fn gen_sequence(
    kind: SequenceKind,
    a: &CsrMatrix,
    m: &Preconditioner,
    d: &[f64],
    q: usize,
    inner_tol: f64,
) -> Result<RhsSequence> {
    let n = a.n_rows();
    check_len("sequence start vector", n, d.len())?;
    if q == 0 || q > n {
        return Err(Error::InvalidInput(format!("sequence length {q} outside 1..={n}")));
    }
    let counter = MvecCounter::default();
    let op = OperatorChain::new(a, m, &counter)?;
    let start = match kind {
        SequenceKind::A | SequenceKind::C => d.to_vec(),
        SequenceKind::B => m.apply_inv(d)?.into_vec(),
    };
    let mut vectors: Vec<DenseVector> = Vec::with_capacity(q);
    let mut next = start;
    for index in 1..=q {
        let original = kernels::norm2(&next);
        for _ in 0..2 {
            for b in &vectors {
                let c = kernels::dot(b, &next);
                kernels::axpy(&mut next, -c, b);
            }
        }
        let nrm = kernels::norm2(&next);
        if !(nrm > DEGENERACY_THRESHOLD * original) || nrm == 0.0 {
            return Err(Error::SequenceDegenerate { index });
        }
        kernels::scale(&mut next, 1.0 / nrm);
        let b = DenseVector::from_vec_unchecked(next);
        if index < q {
            next = match kind {
                SequenceKind::A => solve_inner(&op, &b, inner_tol, index + 1)?,
                SequenceKind::B => m.apply_fwd(&solve_inner(&op, &b, inner_tol, index + 1)?)?.into_vec(),
                SequenceKind::C => a.spmv(&m.apply_inv(&b)?)?.into_vec(),
            };
        } else {
            next = Vec::new();
        }
        vectors.push(b);
    }
    Ok(RhsSequence {
        kind,
        vectors,
        d: DenseVector::new(d.to_vec())?,
        inner_tol,
    })
}

fn solve_inner(op: &OperatorChain<'_>, b: &[f64], tol: f64, index: usize) -> Result<Vec<f64>> {
    let max_iter = (10 * op.dim()).max(1000);
    let report = pminres_solve(op, b, None, tol, max_iter)?;
    if !report.converged() {
        return Err(Error::InnerSolveFailed {
            index,
            relres: report.final_relres(),
        });
    }
    Ok(report.x.into_vec())
}

/// `A = tridiag(−1, 2, −1)/(N+1)²` with `b1 = (𝟙, 𝟙)` and `b2 = (−𝟙, 𝟙)`.
pub fn gen_mirror_pair(n: usize) -> Result<(CsrMatrix, DenseVector, DenseVector)> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("mirror pair needs an even N >= 2, got {n}")));
    }
    let scale = 1.0 / ((n + 1) as f64).powi(2);
    let a = gen_laplace_1d(n, scale)?;
    let b1 = DenseVector::ones(n);
    let b2 = DenseVector::from_fn(n, |i| if i < n / 2 { -1.0 } else { 1.0 });
    Ok((a, b1, b2))
}
