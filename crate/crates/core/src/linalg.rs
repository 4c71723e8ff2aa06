//! Dense vector kernels and the small tridiagonal type shared by the solvers.
//!
//! All reductions run strictly left to right so that repeated runs of a solve
//! produce bit-identical histories.

use std::ops::{Deref, DerefMut};

use crate::error::{check_len, Error, Result};
use crate::precond::Preconditioner;

/// A real vector of the ambient problem dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    /// Wraps `values`, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("vector of length 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("vector construction"));
        }
        Ok(DenseVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        DenseVector(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        DenseVector(vec![1.0; n])
    }

    /// Canonical unit vector `e_index` (0-based).
    pub fn unit(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        DenseVector(v)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        DenseVector((0..n).map(f).collect())
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        DenseVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        kernels::norm2(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(self, context: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NumericalBreakdown(context))
        }
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AsRef<[f64]> for DenseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean inner product.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("dot", x.len(), y.len())?;
    Ok(kernels::dot(x, y))
}

/// Returns `y + a·x`.
pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Result<DenseVector> {
    check_len("axpy", y.len(), x.len())?;
    let mut out = y.to_vec();
    kernels::axpy(&mut out, a, x);
    DenseVector::from_vec_unchecked(out).ensure_finite("axpy")
}

/// `⟨M x, y⟩` using the forward preconditioner application.
///
/// Solver code never calls this: the M-products it needs are rewritten as
/// Euclidean products with already available vectors. It exists for tests
/// and diagnostics.
pub fn m_dot(m: &Preconditioner, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("m_dot", x.len(), y.len())?;
    let mx = m.apply_fwd(x)?;
    Ok(kernels::dot(&mx, y))
}

/// Unchecked slice kernels used on hot paths after dimensions were validated.
pub(crate) mod kernels {
    #[inline]
    pub fn dot(x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let mut s = 0.0;
        for (a, b) in x.iter().zip(y) {
            s += a * b;
        }
        s
    }

    #[inline]
    pub fn norm2(x: &[f64]) -> f64 {
        dot(x, x).sqrt()
    }

    /// y += a·x
    #[inline]
    pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
    }

    /// y = x + b·y
    #[inline]
    pub fn xpby(y: &mut [f64], x: &[f64], b: f64) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi + b * *yi;
        }
    }

    #[inline]
    pub fn scale(y: &mut [f64], a: f64) {
        for yi in y.iter_mut() {
            *yi *= a;
        }
    }

    pub fn all_finite(x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }
}

/// Symmetric tridiagonal matrix with one trailing sub-diagonal coefficient.
///
/// `alpha[i]` is the diagonal entry of row `i`; `beta[i]` couples rows `i` and
/// `i + 1`. The last `beta` is the trailing Lanczos coefficient that sits below
/// the square part, so `beta.len() == alpha.len()`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TridiagonalMatrix {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_len("tridiagonal beta", alpha.len(), beta.len())?;
        Ok(TridiagonalMatrix { alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Square section of rows/columns `start..end`; the trailing coefficient of
    /// the section is the coupling to row `end` (zero past the last row).
    pub fn section(&self, start: usize, end: usize) -> TridiagonalMatrix {
        assert!(start <= end && end <= self.dim());
        TridiagonalMatrix {
            alpha: self.alpha[start..end].to_vec(),
            beta: self.beta[start..end].to_vec(),
        }
    }

    /// Product of the square part with a short dense vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.alpha[i] * x[i];
            if i > 0 {
                s += self.beta[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.beta[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(matches!(
            dot(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn axpy_examples() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(axpy(0.0, &[9.0, 9.0, 9.0], &y).unwrap().as_slice(), &y);
        assert_eq!(axpy(1.0, &y, &y).unwrap().as_slice(), &[2.0, -4.0, 7.0]);
        assert_eq!(axpy(-1.0, &y, &y).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
        assert!(axpy(1.0, &[1.0], &y).is_err());
    }

    #[test]
    fn m_dot_identity_and_diagonal() {
        let id = Preconditioner::identity(2);
        let x = [1.5, -2.0];
        let y = [0.25, 4.0];
        assert_eq!(m_dot(&id, &x, &y).unwrap(), dot(&x, &y).unwrap());
        let diag = crate::sparse::CsrMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        let jac = Preconditioner::jacobi(&diag).unwrap();
        assert_eq!(m_dot(&jac, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn vector_rejects_degenerate() {
        assert!(DenseVector::new(vec![]).is_err());
        assert!(matches!(
            DenseVector::new(vec![1.0, f64::NAN]),
            Err(Error::NumericalBreakdown(_))
        ));
    }

    #[test]
    fn tridiagonal_section_and_matvec() {
        let t = TridiagonalMatrix::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.matvec(&[1.0, 1.0, 1.0]), vec![5.0, 11.0, 8.0]);
        let s = t.section(1, 3);
        assert_eq!(s.alpha, vec![2.0, 3.0]);
        assert_eq!(s.beta, vec![5.0, 6.0]);
        assert!(TridiagonalMatrix::new(vec![1.0], vec![]).is_err());
    }
}
