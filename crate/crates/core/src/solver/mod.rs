//! Minimal-residual Krylov solvers: the conjugate residual variant with
//! basis harvesting, and preconditioned MINRES as reference.

mod pcr;
mod pminres;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{DenseVector, TridiagonalMatrix};
use crate::operator::{DeflationPair, MvecCount};

pub use pcr::{pcr_solve, pcr_solve_observed, PcrOutcome, PcrStep};
pub(crate) use pcr::{run_pcr, PcrStart};
pub use pminres::pminres_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceMet,
    MaxIter,
    Breakdown,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ToleranceMet => "tolerance-met",
            Termination::MaxIter => "max-iter",
            Termination::Breakdown => "breakdown",
        }
    }
}

/// Result of one solve.
///
/// `residual_history[j]` is `‖M⁻¹r_j‖₂`, `m_norm_history[j]` is the minimized
/// quantity `‖M⁻¹r_j‖_M`; both have `iterations + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub mvec: MvecCount,
    pub residual_history: Vec<f64>,
    pub m_norm_history: Vec<f64>,
    /// Estimator `θ_j = ‖M⁻¹A·r̂_j‖²_M`, one entry per iteration (PCR only).
    pub theta_history: Vec<f64>,
    /// `‖M⁻¹b‖₂`, the denominator of relative residuals.
    pub reference_norm: f64,
    pub termination: Termination,
    pub x: DenseVector,
    /// Dense `N`-vectors kept after the solve (recycling data only).
    pub stored_columns: usize,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::ToleranceMet
    }

    pub fn relative_residuals(&self) -> Vec<f64> {
        self.residual_history.iter().map(|&r| relative(r, self.reference_norm)).collect()
    }

    pub fn final_relres(&self) -> f64 {
        relative(*self.residual_history.last().unwrap_or(&0.0), self.reference_norm)
    }
}

pub(crate) fn relative(r: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        r
    } else {
        r / reference
    }
}

/// Which Lanczos data a PCR solve retains: `blocks` blocks of `columns · stride`
/// basis vectors each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarvestConfig {
    pub stride: usize,
    pub columns: usize,
    pub blocks: usize,
    /// Keep iterating past the tolerance until every block is complete.
    pub run_to_limit: bool,
}

impl HarvestConfig {
    pub fn new(blocks: usize, columns: usize, stride: usize) -> Result<Self> {
        if blocks == 0 || columns == 0 || stride == 0 {
            return Err(Error::InvalidInput(format!(
                "harvest needs l, k, J >= 1, got ({blocks}, {columns}, {stride})"
            )));
        }
        Ok(HarvestConfig {
            stride,
            columns,
            blocks,
            run_to_limit: false,
        })
    }

    pub fn run_to_limit(mut self, yes: bool) -> Self {
        self.run_to_limit = yes;
        self
    }

    pub fn block_dim(&self) -> usize {
        self.columns * self.stride
    }

    /// `ℓ·k·J`.
    pub fn limit(&self) -> usize {
        self.blocks * self.block_dim()
    }
}

#[derive(Debug, Clone)]
pub struct PcrOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub harvest: Option<HarvestConfig>,
}

impl PcrOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        PcrOptions {
            tol,
            max_iter,
            harvest: None,
        }
    }

    pub fn with_harvest(mut self, harvest: HarvestConfig) -> Self {
        self.harvest = Some(harvest);
        self
    }
}

/// One completed basis block of a harvest.
#[derive(Debug, Clone)]
pub struct HarvestedBlock {
    /// Normalized columns `u_{s}, u_{s+J}, …` where `s` is the block's first index.
    pub strided: Vec<DenseVector>,
    /// The block's diagonal section of `T`.
    pub t: TridiagonalMatrix,
    /// `(u_end, v_end)` of the block's last column.
    pub boundary: Arc<DeflationPair>,
}

/// Lanczos data collected during a PCR solve.
#[derive(Debug, Clone)]
pub struct LanczosHarvest {
    pub config: HarvestConfig,
    /// Complete blocks only, in order.
    pub blocks: Vec<HarvestedBlock>,
    /// `T` over every harvested index, including unfinished trailing entries.
    pub t: TridiagonalMatrix,
    /// Deflation pairs of the operator the harvesting run iterated with.
    pub run_deflations: Vec<Arc<DeflationPair>>,
}

impl LanczosHarvest {
    pub fn is_complete(&self) -> bool {
        self.blocks.len() == self.config.blocks
    }
}
