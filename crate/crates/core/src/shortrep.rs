//! Short representations `U·R = K_J(M⁻¹Ã; Ũ)·Π` of Lanczos basis blocks.
//!
//! A block of `m = k·J` basis columns is kept as its `k` strided columns `Ũ`,
//! a banded upper triangular `R` built from the block's tridiagonal section,
//! and the index permutation `Π` (implicit in `k`, `J`). Products with `U`
//! and `Uᵀ` then cost `J − 1` operator applications each, through a Horner
//! scheme and a power scheme over the block Krylov matrix
//! `K_J(Z; Ũ) = [Ũ, Z·Ũ, …, Z^{J−1}·Ũ]`.

use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{kernels, DenseVector, TridiagonalMatrix};
use crate::operator::{DeflationPair, OperatorChain};
use crate::solver::HarvestedBlock;

/// The permutation `Π·e_{iJ+j} = e_{jk+i}` (0-based), never materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationDescriptor {
    pub k: usize,
    pub j: usize,
}

impl PermutationDescriptor {
    pub fn new(k: usize, j: usize) -> Result<Self> {
        if k == 0 || j == 0 {
            return Err(Error::InvalidInput(format!("permutation needs k, J >= 1, got ({k}, {j})")));
        }
        Ok(PermutationDescriptor { k, j })
    }

    pub fn dim(&self) -> usize {
        self.k * self.j
    }

    /// Position that slot `iJ + j` moves to.
    pub fn map(&self, slot: usize) -> usize {
        let (i, j) = (slot / self.j, slot % self.j);
        j * self.k + i
    }

    /// `Π·y`.
    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("permutation", self.dim(), y.len())?;
        let mut out = vec![0.0; y.len()];
        for (slot, &v) in y.iter().enumerate() {
            out[self.map(slot)] = v;
        }
        Ok(out)
    }

    /// `Πᵀ·y`.
    pub fn back(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("permutation", self.dim(), y.len())?;
        Ok((0..y.len()).map(|slot| y[self.map(slot)]).collect())
    }
}

/// Banded upper triangular factor with column `iJ + j` equal to `T^j·e_{iJ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RFactor {
    dim: usize,
    /// Per column: first stored row and the values down to the diagonal.
    columns: Vec<(usize, Vec<f64>)>,
}

impl RFactor {
    /// Builds `R` from the leading `k·J` square part of `t`.
    pub fn build(t: &TridiagonalMatrix, k: usize, j_stride: usize) -> Result<Self> {
        let m = k * j_stride;
        if k == 0 || j_stride == 0 {
            return Err(Error::InvalidInput("R needs k, J >= 1".into()));
        }
        if t.dim() < m {
            return Err(Error::dim("tridiagonal section for R", m, t.dim()));
        }
        let mut columns = Vec::with_capacity(m);
        for i in 0..k {
            let base = i * j_stride;
            // Current T^j e_base on rows lo..=hi.
            let mut lo = base;
            let mut vals = vec![1.0];
            for j in 0..j_stride {
                let col = base + j;
                if j > 0 {
                    let hi = lo + vals.len() - 1;
                    let new_lo = lo.saturating_sub(1);
                    let new_hi = (hi + 1).min(m - 1);
                    let mut next = vec![0.0; new_hi - new_lo + 1];
                    for (off, &x) in vals.iter().enumerate() {
                        let r = lo + off;
                        next[r - new_lo] += t.alpha[r] * x;
                        if r > 0 {
                            next[r - 1 - new_lo] += t.beta[r - 1] * x;
                        }
                        if r + 1 < m {
                            next[r + 1 - new_lo] += t.beta[r] * x;
                        }
                    }
                    lo = new_lo;
                    vals = next;
                }
                debug_assert_eq!(lo + vals.len() - 1, col);
                let diag = *vals.last().unwrap();
                if diag == 0.0 || !diag.is_finite() {
                    return Err(Error::RSingular { column: col + 1 });
                }
                columns.push((lo, vals.clone()));
            }
        }
        Ok(RFactor { dim: m, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored rows of column `c`: `(first_row, values)`.
    pub fn column(&self, c: usize) -> (usize, &[f64]) {
        let (lo, v) = &self.columns[c];
        (*lo, v)
    }

    pub(crate) fn from_columns(dim: usize, columns: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        check_len("R columns", dim, columns.len())?;
        for (c, (lo, v)) in columns.iter().enumerate() {
            if v.is_empty() || lo + v.len() - 1 != c {
                return Err(Error::Archive(format!("R column {c} does not end on the diagonal")));
            }
            if *v.last().unwrap() == 0.0 {
                return Err(Error::RSingular { column: c + 1 });
            }
        }
        Ok(RFactor { dim, columns })
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (c, (lo, v)) in self.columns.iter().enumerate() {
            for (off, &x) in v.iter().enumerate() {
                d[lo + off][c] = x;
            }
        }
        d
    }

    /// Solves `R·c = y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("R solve", self.dim, y.len())?;
        let mut c = y.to_vec();
        for col in (0..self.dim).rev() {
            let (lo, v) = &self.columns[col];
            let diag = v[v.len() - 1];
            let x = c[col] / diag;
            c[col] = x;
            for (off, &r) in v[..v.len() - 1].iter().enumerate() {
                c[lo + off] -= r * x;
            }
        }
        Ok(c)
    }

    /// Solves `Rᵀ·w = c`.
    pub fn solve_transpose(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_len("Rᵀ solve", self.dim, c.len())?;
        let mut w = vec![0.0; self.dim];
        for col in 0..self.dim {
            let (lo, v) = &self.columns[col];
            let mut s = c[col];
            for (off, &r) in v[..v.len() - 1].iter().enumerate() {
                s -= r * w[lo + off];
            }
            w[col] = s / v[v.len() - 1];
        }
        Ok(w)
    }
}

/// Short representation of one basis block.
///
/// `deflations` are the pairs whose operator `M⁻¹Ã` powers the block Krylov
/// matrix: the harvesting run's own deflations, plus the previous block's
/// boundary pair for every block but the first of a run. `boundary` is this
/// block's last column and its image.
#[derive(Debug, Clone)]
pub struct ShortRepresentation {
    u_tilde: Vec<DenseVector>,
    r: RFactor,
    perm: PermutationDescriptor,
    deflations: Vec<Arc<DeflationPair>>,
    boundary: Arc<DeflationPair>,
}

impl ShortRepresentation {
    pub fn new(
        u_tilde: Vec<DenseVector>,
        r: RFactor,
        perm: PermutationDescriptor,
        deflations: Vec<Arc<DeflationPair>>,
        boundary: Arc<DeflationPair>,
    ) -> Result<Self> {
        check_len("short representation columns", perm.k, u_tilde.len())?;
        check_len("short representation R", perm.dim(), r.dim())?;
        let n = boundary.dim();
        for u in &u_tilde {
            check_len("short representation column length", n, u.len())?;
        }
        for d in &deflations {
            check_len("deflation pair length", n, d.dim())?;
        }
        Ok(ShortRepresentation {
            u_tilde,
            r,
            perm,
            deflations,
            boundary,
        })
    }

    /// Builds the representation of a harvested block.
    pub fn from_block(block: &HarvestedBlock, k: usize, j: usize, deflations: Vec<Arc<DeflationPair>>) -> Result<Self> {
        let perm = PermutationDescriptor::new(k, j)?;
        let r = RFactor::build(&block.t, k, j)?;
        Self::new(block.strided.clone(), r, perm, deflations, block.boundary.clone())
    }

    pub fn k(&self) -> usize {
        self.perm.k
    }

    pub fn stride(&self) -> usize {
        self.perm.j
    }

    /// `m = k·J`.
    pub fn block_dim(&self) -> usize {
        self.perm.dim()
    }

    pub fn dim(&self) -> usize {
        self.boundary.dim()
    }

    pub fn u_tilde(&self) -> &[DenseVector] {
        &self.u_tilde
    }

    pub fn r(&self) -> &RFactor {
        &self.r
    }

    pub fn perm(&self) -> PermutationDescriptor {
        self.perm
    }

    pub fn deflations(&self) -> &[Arc<DeflationPair>] {
        &self.deflations
    }

    pub fn boundary(&self) -> &Arc<DeflationPair> {
        &self.boundary
    }

    /// `k + 2` dense vectors: `Ũ` and the boundary pair.
    pub fn stored_columns(&self) -> usize {
        self.perm.k + 2
    }

    /// The block's operator: `base` with this block's deflation list.
    pub fn chain<'a>(&self, base: &OperatorChain<'a>) -> Result<OperatorChain<'a>> {
        check_len("short representation dimension", base.dim(), self.dim())?;
        base.with_deflations(self.deflations.clone())
    }

    /// `K_J(M⁻¹Ã; Ũ)·ỹ` for `ỹ = (ỹ_1, …, ỹ_J)`, `ỹ_j ∈ ℝᵏ`; `J − 1` operator applications.
    pub fn horner_apply(&self, base: &OperatorChain<'_>, y: &[f64]) -> Result<DenseVector> {
        check_len("horner_apply coefficients", self.block_dim(), y.len())?;
        let chain = self.chain(base)?;
        let k = self.perm.k;
        let mut z = vec![0.0; self.dim()];
        self.add_u_tilde(&mut z, &y[(self.perm.j - 1) * k..]);
        let mut tmp = vec![0.0; self.dim()];
        for jj in (0..self.perm.j - 1).rev() {
            chain.forward_into(&z, &mut tmp)?;
            std::mem::swap(&mut z, &mut tmp);
            self.add_u_tilde(&mut z, &y[jj * k..(jj + 1) * k]);
        }
        Ok(DenseVector::from_vec_unchecked(z))
    }

    /// `K_J(M⁻¹Ã; Ũ)ᵀ·z`; `J − 1` adjoint operator applications.
    pub fn power_apply(&self, base: &OperatorChain<'_>, z: &[f64]) -> Result<Vec<f64>> {
        check_len("power_apply vector", self.dim(), z.len())?;
        let chain = self.chain(base)?;
        let mut out = Vec::with_capacity(self.block_dim());
        let mut z = z.to_vec();
        let mut tmp = vec![0.0; self.dim()];
        for jj in 0..self.perm.j {
            out.extend(self.u_tilde.iter().map(|u| kernels::dot(u, &z)));
            if jj + 1 < self.perm.j {
                chain.adjoint_into(&z, &mut tmp)?;
                std::mem::swap(&mut z, &mut tmp);
            }
        }
        Ok(out)
    }

    /// `K_J·Π·R⁻¹·y`, i.e. `U·y` up to components along the deflated columns.
    pub(crate) fn apply_u_uncorrected(&self, base: &OperatorChain<'_>, y: &[f64]) -> Result<DenseVector> {
        let c = self.r.solve(y)?;
        let p = self.perm.forward(&c)?;
        self.horner_apply(base, &p)
    }

    /// `U·y` over the block's basis columns.
    ///
    /// With a non-empty deflation list the block Krylov matrix also picks up
    /// multiples of the deflated columns `u_m`; they are removed with
    /// `γ = ⟨v_m, A·h⟩`, which costs one extra application of `A`.
    pub fn apply_u(&self, base: &OperatorChain<'_>, y: &[f64]) -> Result<DenseVector> {
        let mut h = self.apply_u_uncorrected(base, y)?;
        if !self.deflations.is_empty() {
            let g = base.apply_a(&h)?;
            for p in &self.deflations {
                let gamma = kernels::dot(p.v(), &g);
                kernels::axpy(&mut h, -gamma, p.u());
            }
        }
        Ok(h)
    }

    /// `Uᵀ·z`.
    ///
    /// Exact when `z` is orthogonal to every deflated column `u_m`, which holds
    /// for `z = A·r̂` with `r̂` M-orthogonal to the deflated images; that is the
    /// only way the recycling projection calls it.
    pub fn apply_uh(&self, base: &OperatorChain<'_>, z: &[f64]) -> Result<Vec<f64>> {
        let q = self.power_apply(base, z)?;
        let c = self.perm.back(&q)?;
        self.r.solve_transpose(&c)
    }

    fn add_u_tilde(&self, z: &mut [f64], coeffs: &[f64]) {
        for (u, &c) in self.u_tilde.iter().zip(coeffs) {
            kernels::axpy(z, c, u);
        }
    }
}
