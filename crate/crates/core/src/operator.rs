//! The preconditioned system operator `M⁻¹A`, its deflated variants and MVec accounting.

use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{kernels, DenseVector};
use crate::precond::Preconditioner;
use crate::sparse::CsrMatrix;

/// Counts applications of `A` and of `M⁻¹` for one solve context.
#[derive(Debug, Default)]
pub struct MvecCounter {
    a: AtomicU64,
    m_inv: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MvecCount {
    pub a: u64,
    pub m_inv: u64,
}

impl Sub for MvecCount {
    type Output = MvecCount;

    fn sub(self, rhs: MvecCount) -> MvecCount {
        MvecCount {
            a: self.a - rhs.a,
            m_inv: self.m_inv - rhs.m_inv,
        }
    }
}

impl MvecCounter {
    pub fn snapshot(&self) -> MvecCount {
        MvecCount {
            a: self.a.load(Ordering::Relaxed),
            m_inv: self.m_inv.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.a.store(0, Ordering::Relaxed);
        self.m_inv.store(0, Ordering::Relaxed);
    }

    fn bump_a(&self) {
        self.a.fetch_add(1, Ordering::Relaxed);
    }

    fn bump_m_inv(&self) {
        self.m_inv.fetch_add(1, Ordering::Relaxed);
    }
}

/// A normalized basis column `u_m` and its image `v_m = M⁻¹A·u_m`.
///
/// The column `d_m = A·u_m` is never stored; every formula that needs it is
/// rewritten through `v_m = M⁻¹d_m` and the symmetry of `A` and `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationPair {
    u: DenseVector,
    v: DenseVector,
}

impl DeflationPair {
    pub fn new(u: DenseVector, v: DenseVector) -> Result<Self> {
        check_len("deflation pair", u.len(), v.len())?;
        Ok(DeflationPair { u, v })
    }

    pub fn u(&self) -> &DenseVector {
        &self.u
    }

    pub fn v(&self) -> &DenseVector {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

/// Output of [`OperatorChain::a_func`]: `(v̂, d̂, û)`.
#[derive(Debug, Clone)]
pub struct AFuncOutput {
    pub v_hat: DenseVector,
    pub d_hat: DenseVector,
    pub u_hat: DenseVector,
}

/// `M⁻¹Ã` with `Ã = (I − Σ d_mⱼ v_mⱼᵀ)·A` for an ordered list of deflation pairs.
///
/// With no pairs this is plain `M⁻¹A`. Every application of `A` and `M⁻¹`
/// made through the chain is recorded in the attached [`MvecCounter`].
#[derive(Debug, Clone)]
pub struct OperatorChain<'a> {
    a: &'a CsrMatrix,
    m: &'a Preconditioner,
    counter: &'a MvecCounter,
    deflations: Vec<Arc<DeflationPair>>,
}

impl<'a> OperatorChain<'a> {
    pub fn new(a: &'a CsrMatrix, m: &'a Preconditioner, counter: &'a MvecCounter) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidInput("system matrix must be symmetric".into()));
        }
        check_len("preconditioner dimension", a.n_rows(), m.dim())?;
        Ok(OperatorChain {
            a,
            m,
            counter,
            deflations: Vec::new(),
        })
    }

    /// Same `A`, `M` and counter with a different deflation list.
    pub fn with_deflations(&self, deflations: Vec<Arc<DeflationPair>>) -> Result<Self> {
        for p in &deflations {
            check_len("deflation pair", self.dim(), p.dim())?;
        }
        Ok(OperatorChain {
            deflations,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.a.n_rows()
    }

    pub fn matrix(&self) -> &'a CsrMatrix {
        self.a
    }

    pub fn preconditioner(&self) -> &'a Preconditioner {
        self.m
    }

    pub fn counter(&self) -> &'a MvecCounter {
        self.counter
    }

    pub fn deflations(&self) -> &[Arc<DeflationPair>] {
        &self.deflations
    }

    /// Counted `A·x`.
    pub fn apply_a(&self, x: &[f64]) -> Result<DenseVector> {
        check_len("operator A", self.dim(), x.len())?;
        let mut y = vec![0.0; self.dim()];
        self.a_into(x, &mut y)?;
        Ok(DenseVector::from_vec_unchecked(y))
    }

    /// Counted `M⁻¹·x`.
    pub fn apply_m_inv(&self, x: &[f64]) -> Result<DenseVector> {
        check_len("operator M⁻¹", self.dim(), x.len())?;
        let mut y = x.to_vec();
        self.m_inv_in_place(&mut y)?;
        Ok(DenseVector::from_vec_unchecked(y))
    }

    pub(crate) fn a_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.counter.bump_a();
        self.a.spmv_into(x, y);
        finite(y, "A application")
    }

    pub(crate) fn m_inv_in_place(&self, x: &mut [f64]) -> Result<()> {
        self.counter.bump_m_inv();
        self.m.apply_inv_in_place(x);
        finite(x, "M⁻¹ application")
    }

    /// `û = r̂`, `d̂ = A·r̂`, `v̂ = M⁻¹·d̂`; ignores the deflation list.
    pub fn a_func(&self, r_hat: &[f64]) -> Result<AFuncOutput> {
        check_len("a_func", self.dim(), r_hat.len())?;
        let d_hat = self.apply_a(r_hat)?;
        let v_hat = self.apply_m_inv(&d_hat)?;
        Ok(AFuncOutput {
            v_hat,
            d_hat,
            u_hat: DenseVector::from_vec_unchecked(r_hat.to_vec()),
        })
    }

    /// [`a_func`](Self::a_func) followed by `v̂ −= γ·v_m`, `û −= γ·u_m` with
    /// `γ = ⟨v_m, d̂⟩` for each pair; `d̂` is returned unmodified.
    ///
    /// The caller guarantees that `r̂` is M-orthogonal to every `v_m`; this is
    /// not checked.
    pub fn mod_a_func(&self, r_hat: &[f64]) -> Result<AFuncOutput> {
        let mut out = self.a_func(r_hat)?;
        self.deflate(&out.d_hat, &mut out.v_hat, &mut out.u_hat);
        Ok(out)
    }

    /// In-place variant of [`mod_a_func`](Self::mod_a_func) used by the solver loop.
    pub(crate) fn mod_a_func_into(
        &self,
        r_hat: &[f64],
        v_hat: &mut [f64],
        d_hat: &mut [f64],
        u_hat: &mut [f64],
    ) -> Result<()> {
        self.a_into(r_hat, d_hat)?;
        v_hat.copy_from_slice(d_hat);
        self.m_inv_in_place(v_hat)?;
        u_hat.copy_from_slice(r_hat);
        self.deflate(d_hat, v_hat, u_hat);
        Ok(())
    }

    fn deflate(&self, d_hat: &[f64], v_hat: &mut [f64], u_hat: &mut [f64]) {
        for p in &self.deflations {
            let gamma = kernels::dot(&p.v, d_hat);
            kernels::axpy(v_hat, -gamma, &p.v);
            kernels::axpy(u_hat, -gamma, &p.u);
        }
    }

    /// `M⁻¹Ã·w = M⁻¹A·w − Σ ⟨v_mⱼ, A·w⟩·v_mⱼ`.
    pub fn chain_forward(&self, w: &[f64]) -> Result<DenseVector> {
        check_len("chain_forward", self.dim(), w.len())?;
        let mut out = vec![0.0; self.dim()];
        self.forward_into(w, &mut out)?;
        Ok(DenseVector::from_vec_unchecked(out))
    }

    pub(crate) fn forward_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        self.a_into(w, out)?;
        let gammas: Vec<f64> = self.deflations.iter().map(|p| kernels::dot(&p.v, out)).collect();
        self.m_inv_in_place(out)?;
        for (p, g) in self.deflations.iter().zip(gammas) {
            kernels::axpy(out, -g, &p.v);
        }
        Ok(())
    }

    /// `(M⁻¹Ã)ᵀ·z = A·(M⁻¹z − Σ ⟨v_mⱼ, z⟩·v_mⱼ)`.
    pub fn chain_adjoint(&self, z: &[f64]) -> Result<DenseVector> {
        check_len("chain_adjoint", self.dim(), z.len())?;
        let mut out = vec![0.0; self.dim()];
        self.adjoint_into(z, &mut out)?;
        Ok(DenseVector::from_vec_unchecked(out))
    }

    pub(crate) fn adjoint_into(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let mut w = z.to_vec();
        self.m_inv_in_place(&mut w)?;
        for p in &self.deflations {
            kernels::axpy(&mut w, -kernels::dot(&p.v, z), &p.v);
        }
        self.a_into(&w, out)
    }
}

fn finite(x: &[f64], context: &'static str) -> Result<()> {
    if kernels::all_finite(x) {
        Ok(())
    } else {
        Err(Error::NumericalBreakdown(context))
    }
}
