//! Recycling driver: block projections onto short-represented basis blocks,
//! followed by deflated post-iterations.

use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{kernels, DenseVector};
use crate::operator::{DeflationPair, MvecCount, OperatorChain};
use crate::shortrep::ShortRepresentation;
use crate::solver::{run_pcr, LanczosHarvest, PcrOptions, PcrStart, SolveReport};

/// Largest relative growth of `‖M⁻¹r‖_M` a block projection may cause.
pub const COLLAPSE_THRESHOLD: f64 = 1e-8;

/// `(stored_columns, projection_mvecs) = (ℓ(k+2), 2ℓJ)`.
pub fn cost_ledger(blocks: usize, k: usize, j: usize) -> (usize, usize) {
    (blocks * (k + 2), 2 * blocks * j)
}

/// Ordered basis blocks plus the deflation pairs for post-iterations.
#[derive(Debug, Clone)]
pub struct RecycleBasis {
    blocks: Vec<ShortRepresentation>,
    post_deflations: Vec<Arc<DeflationPair>>,
}

impl RecycleBasis {
    /// Basis from the complete blocks of one harvesting solve.
    pub fn from_harvest(harvest: &LanczosHarvest) -> Result<Self> {
        let mut basis = RecycleBasis {
            blocks: Vec::new(),
            post_deflations: harvest.run_deflations.clone(),
        };
        basis.append(harvest)?;
        Ok(basis)
    }

    /// Adds the blocks harvested during post-iterations that ran with this
    /// basis' deflation pairs; later post-iterations then deflate the last
    /// boundary pair of every source run.
    pub fn extend_with(&mut self, harvest: &LanczosHarvest) -> Result<()> {
        let same = harvest.run_deflations.len() == self.post_deflations.len()
            && harvest
                .run_deflations
                .iter()
                .zip(&self.post_deflations)
                .all(|(a, b)| Arc::ptr_eq(a, b) || a == b);
        if !same {
            return Err(Error::InvalidInput(
                "harvest did not run with this basis' deflation pairs".into(),
            ));
        }
        self.append(harvest)
    }

    fn append(&mut self, harvest: &LanczosHarvest) -> Result<()> {
        if harvest.blocks.is_empty() {
            return Err(Error::InvalidInput("harvest contains no complete block".into()));
        }
        let (k, j) = (harvest.config.columns, harvest.config.stride);
        let mut prev: Option<Arc<DeflationPair>> = None;
        let mut new_blocks = Vec::with_capacity(harvest.blocks.len());
        for blk in &harvest.blocks {
            let mut defl = harvest.run_deflations.clone();
            defl.extend(prev.take());
            new_blocks.push(ShortRepresentation::from_block(blk, k, j, defl)?);
            prev = Some(blk.boundary.clone());
        }
        self.blocks.extend(new_blocks);
        self.post_deflations.extend(prev);
        Ok(())
    }

    pub fn from_parts(blocks: Vec<ShortRepresentation>, post_deflations: Vec<Arc<DeflationPair>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("recycle basis without blocks".into()));
        }
        let n = blocks[0].dim();
        for b in &blocks {
            check_len("recycle block dimension", n, b.dim())?;
        }
        for p in &post_deflations {
            check_len("post deflation dimension", n, p.dim())?;
        }
        Ok(RecycleBasis {
            blocks,
            post_deflations,
        })
    }

    pub fn blocks(&self) -> &[ShortRepresentation] {
        &self.blocks
    }

    pub fn post_deflations(&self) -> &[Arc<DeflationPair>] {
        &self.post_deflations
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    /// Dimension of the recycled space, `Σ k·J`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.block_dim()).sum()
    }

    /// `(stored_columns, projection_mvecs)` summed over blocks.
    pub fn cost_ledger(&self) -> (usize, usize) {
        self.blocks
            .iter()
            .map(|b| cost_ledger(1, b.k(), b.stride()))
            .fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1))
    }
}

/// Iterate, preconditioned residual `r̂ = M⁻¹(b − A·x)` and `ρ = ‖r̂‖²_M`.
#[derive(Debug, Clone)]
pub struct RecycleState {
    pub x: DenseVector,
    pub r_hat: DenseVector,
    pub rho: f64,
}

impl RecycleState {
    /// State for the initial guess `x0` (zero when `None`); counted on `op`.
    pub fn initial(op: &OperatorChain<'_>, b: &[f64], x0: Option<&[f64]>) -> Result<Self> {
        let n = op.dim();
        check_len("right-hand side", n, b.len())?;
        let (x, r) = match x0.filter(|x| x.iter().any(|&v| v != 0.0)) {
            Some(x0) => {
                check_len("initial guess", n, x0.len())?;
                let ax = op.apply_a(x0)?;
                let r: Vec<f64> = b.iter().zip(ax.iter()).map(|(p, q)| p - q).collect();
                (x0.to_vec(), r)
            }
            None => (vec![0.0; n], b.to_vec()),
        };
        let r_hat = op.apply_m_inv(&r)?;
        Ok(RecycleState {
            x: DenseVector::from_vec_unchecked(x),
            rho: kernels::dot(&r, &r_hat),
            r_hat,
        })
    }

    pub fn m_norm(&self) -> f64 {
        self.rho.max(0.0).sqrt()
    }
}

/// Residual-optimal update of `state` over `x + range(U_block)`.
///
/// Computes `s = U·Uᵀ·A·r̂`, `x' = x + s`, `r̂' = r̂ − M⁻¹A·s`, using `2J`
/// applications of `A` and `2J − 1` of `M⁻¹`. `block` is the 0-based index
/// used in error reports.
pub fn recycle_project(
    rep: &ShortRepresentation,
    base: &OperatorChain<'_>,
    state: &RecycleState,
    block: usize,
) -> Result<RecycleState> {
    let n = base.dim();
    check_len("recycle state", n, state.r_hat.len())?;
    let mut w = vec![0.0; n];
    base.a_into(&state.r_hat, &mut w)?;
    let y = rep.apply_uh(base, &w)?;
    let mut s = rep.apply_u_uncorrected(base, &y)?;
    let mut g = vec![0.0; n];
    base.a_into(&s, &mut g)?;
    let gammas: Vec<f64> = rep.deflations().iter().map(|p| kernels::dot(p.v(), &g)).collect();
    for (p, &gamma) in rep.deflations().iter().zip(&gammas) {
        kernels::axpy(&mut s, -gamma, p.u());
    }
    let ws = kernels::dot(&w, &s);
    let mut m_g = g.clone();
    base.m_inv_in_place(&mut m_g)?;
    let gmg = kernels::dot(&g, &m_g);
    let mut r_hat = state.r_hat.to_vec();
    kernels::axpy(&mut r_hat, -1.0, &m_g);
    for (p, &gamma) in rep.deflations().iter().zip(&gammas) {
        kernels::axpy(&mut r_hat, gamma, p.v());
    }
    let rho = state.rho - 2.0 * ws + gmg - gammas.iter().map(|g| g * g).sum::<f64>();
    let mut x = state.x.to_vec();
    kernels::axpy(&mut x, 1.0, &s);
    if !kernels::all_finite(&x) || !kernels::all_finite(&r_hat) || !rho.is_finite() {
        return Err(Error::NumericalBreakdown("block projection"));
    }
    let before = state.m_norm();
    let after = rho.max(0.0).sqrt();
    if after > before * (1.0 + COLLAPSE_THRESHOLD) {
        return Err(Error::OrthogonalityCollapse { block, before, after });
    }
    Ok(RecycleState {
        x: DenseVector::from_vec_unchecked(x),
        r_hat: DenseVector::from_vec_unchecked(r_hat),
        rho,
    })
}

/// Projection-phase record of one recycled solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RecycleReport {
    /// `‖r̂‖₂` before the first block and after each block.
    pub projection_residuals: Vec<f64>,
    /// `‖r̂‖_M` at the same points.
    pub projection_m_norms: Vec<f64>,
    /// Cumulative `A` applications at the same points.
    pub projection_mvec_points: Vec<u64>,
    pub projection_mvec: MvecCount,
    pub post_mvec: MvecCount,
    pub post_iterations: usize,
    pub stored_columns: usize,
    pub recycled_dim: usize,
}

#[derive(Debug, Clone)]
pub struct SrpcrOutcome {
    /// Post-iteration phase; `mvec` covers the whole solve.
    pub report: SolveReport,
    pub recycle: RecycleReport,
    /// Blocks harvested during the post-iterations, if requested.
    pub harvest: Option<LanczosHarvest>,
}

/// Recycled solve of `A·x = b`: project onto every block of `basis` in order,
/// then run deflated conjugate residual post-iterations from the projected
/// iterate.
pub fn srpcr_ap_solve(
    basis: &RecycleBasis,
    base: &OperatorChain<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcrOptions,
) -> Result<SrpcrOutcome> {
    check_len("recycle basis dimension", base.dim(), basis.dim())?;
    if !base.deflations().is_empty() {
        return Err(Error::InvalidInput("recycling starts from the undeflated operator".into()));
    }
    if !kernels::all_finite(b) {
        return Err(Error::NumericalBreakdown("right-hand side"));
    }
    let counter = base.counter();
    let start = counter.snapshot();
    let x0 = x0.filter(|x| x.iter().any(|&v| v != 0.0));
    let mut state = RecycleState::initial(base, b, x0)?;
    let reference_norm = if x0.is_some() {
        kernels::norm2(&base.apply_m_inv(b)?)
    } else {
        kernels::norm2(&state.r_hat)
    };

    let mut projection_residuals = vec![kernels::norm2(&state.r_hat)];
    let mut projection_m_norms = vec![state.m_norm()];
    let mut projection_mvec_points = vec![(counter.snapshot() - start).a];
    for (i, rep) in basis.blocks().iter().enumerate() {
        state = recycle_project(rep, base, &state, i)?;
        projection_residuals.push(kernels::norm2(&state.r_hat));
        projection_m_norms.push(state.m_norm());
        projection_mvec_points.push((counter.snapshot() - start).a);
    }
    let after_projection = counter.snapshot();

    let post_op = base.with_deflations(basis.post_deflations().to_vec())?;
    let pcr_start = PcrStart {
        x: state.x.into_vec(),
        r_hat: state.r_hat.into_vec(),
        rho: state.rho,
        reference_norm,
    };
    let finish = |report: &mut SolveReport| {
        report.mvec = counter.snapshot() - start;
        report.stored_columns = basis.cost_ledger().0;
    };
    let post = match run_pcr(&post_op, pcr_start, opts, None) {
        Ok(p) => p,
        Err(Error::Breakdown {
            iteration,
            reason,
            mut partial,
        }) => {
            finish(&mut partial);
            return Err(Error::Breakdown {
                iteration,
                reason,
                partial,
            });
        }
        Err(e) => return Err(e),
    };
    let mut report = post.report;
    finish(&mut report);
    let recycle = RecycleReport {
        projection_residuals,
        projection_m_norms,
        projection_mvec_points,
        projection_mvec: after_projection - start,
        post_mvec: counter.snapshot() - after_projection,
        post_iterations: report.iterations,
        stored_columns: basis.cost_ledger().0,
        recycled_dim: basis.total_dim(),
    };
    Ok(SrpcrOutcome {
        report,
        recycle,
        harvest: post.harvest,
    })
}
