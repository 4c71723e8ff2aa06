use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{kernels, DenseVector, TridiagonalMatrix};
use crate::operator::{DeflationPair, OperatorChain};

use super::{HarvestConfig, HarvestedBlock, LanczosHarvest, PcrOptions, SolveReport, Termination};

/// What an observer sees in iteration `j`, before `x` and `r̂` are updated.
#[derive(Debug)]
pub struct PcrStep<'a> {
    pub iteration: usize,
    pub x: &'a [f64],
    pub r_hat: &'a [f64],
    /// Normalized basis column `u_{j+1}`.
    pub u: &'a [f64],
    /// Its normalized image `v_{j+1}`.
    pub v: &'a [f64],
    pub theta: f64,
    pub tau_hat: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct PcrOutcome {
    pub report: SolveReport,
    pub harvest: Option<LanczosHarvest>,
}

/// Starting state of the PCR loop.
pub(crate) struct PcrStart {
    pub x: Vec<f64>,
    pub r_hat: Vec<f64>,
    /// `‖r̂‖²_M`
    pub rho: f64,
    pub reference_norm: f64,
}

/// Preconditioned conjugate residual solve of `A·x = b`.
///
/// Minimizes `‖M⁻¹(b − A·x)‖_M` over `x0 + M⁻¹·K_j(A·M⁻¹; r0)`, terminating
/// once `‖M⁻¹r‖₂ ≤ tol·‖M⁻¹b‖₂`. With deflation pairs on `op` the loop runs
/// with the modified operator and the caller must supply an `x0` whose
/// preconditioned residual is M-orthogonal to every pair's `v_m`.
pub fn pcr_solve(
    op: &OperatorChain<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcrOptions,
) -> Result<PcrOutcome> {
    pcr_solve_inner(op, b, x0, opts, None)
}

/// [`pcr_solve`] calling `observer` once per iteration.
pub fn pcr_solve_observed(
    op: &OperatorChain<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcrOptions,
    observer: &mut dyn FnMut(&PcrStep<'_>),
) -> Result<PcrOutcome> {
    pcr_solve_inner(op, b, x0, opts, Some(observer))
}

fn pcr_solve_inner(
    op: &OperatorChain<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcrOptions,
    observer: Option<&mut dyn FnMut(&PcrStep<'_>)>,
) -> Result<PcrOutcome> {
    let n = op.dim();
    check_len("right-hand side", n, b.len())?;
    if !kernels::all_finite(b) {
        return Err(Error::NumericalBreakdown("right-hand side"));
    }
    let start_count = op.counter().snapshot();
    let x0 = match x0 {
        Some(x) => {
            check_len("initial guess", n, x.len())?;
            Some(x).filter(|x| x.iter().any(|&v| v != 0.0))
        }
        None => None,
    };
    let start = match x0 {
        None => {
            let mut r_hat = b.to_vec();
            op.m_inv_in_place(&mut r_hat)?;
            PcrStart {
                x: vec![0.0; n],
                rho: kernels::dot(b, &r_hat),
                reference_norm: kernels::norm2(&r_hat),
                r_hat,
            }
        }
        Some(x0) => {
            let mut r = vec![0.0; n];
            op.a_into(x0, &mut r)?;
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            let mut r_hat = r.clone();
            op.m_inv_in_place(&mut r_hat)?;
            let mut b_hat = b.to_vec();
            op.m_inv_in_place(&mut b_hat)?;
            PcrStart {
                x: x0.to_vec(),
                rho: kernels::dot(&r, &r_hat),
                reference_norm: kernels::norm2(&b_hat),
                r_hat,
            }
        }
    };
    let mut out = run_pcr(op, start, opts, observer);
    let fix = |report: &mut SolveReport| report.mvec = op.counter().snapshot() - start_count;
    match &mut out {
        Ok(o) => fix(&mut o.report),
        Err(Error::Breakdown { partial, .. }) => fix(partial),
        Err(_) => {}
    }
    out
}

struct Harvester {
    config: HarvestConfig,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    strided: Vec<DenseVector>,
    blocks: Vec<HarvestedBlock>,
    pending_boundary: Option<Arc<DeflationPair>>,
    run_deflations: Vec<Arc<DeflationPair>>,
}

impl Harvester {
    fn new(config: HarvestConfig, run_deflations: Vec<Arc<DeflationPair>>) -> Self {
        let m = config.limit();
        Harvester {
            config,
            alpha: Vec::with_capacity(m),
            beta: Vec::with_capacity(m),
            strided: Vec::new(),
            blocks: Vec::new(),
            pending_boundary: None,
            run_deflations,
        }
    }

    /// True while some block still misses columns or `T` entries.
    fn pending(&self) -> bool {
        self.blocks.len() < self.config.blocks
    }

    /// Records `α_j`, `β_{j+1}` (1-based `j`) and closes a block when its last
    /// `α` arrives.
    fn push_t(&mut self, alpha: f64, beta: f64) {
        if !self.pending() {
            return;
        }
        self.alpha.push(alpha);
        self.beta.push(beta);
        let j = self.alpha.len();
        let dim = self.config.block_dim();
        if j.is_multiple_of(dim) {
            let start = j - dim;
            let boundary = self
                .pending_boundary
                .take()
                .expect("boundary column is captured before its α");
            let strided = std::mem::take(&mut self.strided);
            self.blocks.push(HarvestedBlock {
                strided,
                t: TridiagonalMatrix {
                    alpha: self.alpha[start..j].to_vec(),
                    beta: self.beta[start..j].to_vec(),
                },
                boundary,
            });
        }
    }

    /// Captures the normalized column with 1-based index `idx` if it is needed.
    fn capture(&mut self, idx: usize, u: &[f64], v: &[f64]) {
        if idx > self.config.limit() {
            return;
        }
        if (idx - 1).is_multiple_of(self.config.stride) {
            self.strided.push(DenseVector::from_vec_unchecked(u.to_vec()));
        }
        if idx.is_multiple_of(self.config.block_dim()) {
            self.pending_boundary = Some(Arc::new(DeflationPair::new(
                DenseVector::from_vec_unchecked(u.to_vec()),
                DenseVector::from_vec_unchecked(v.to_vec()),
            ).expect("equal lengths")));
        }
    }

    fn finish(self) -> LanczosHarvest {
        LanczosHarvest {
            config: self.config,
            blocks: self.blocks,
            t: TridiagonalMatrix {
                alpha: self.alpha,
                beta: self.beta,
            },
            run_deflations: self.run_deflations,
        }
    }
}

/// The PCR loop proper, shared by plain solves and recycling post-iterations.
pub(crate) fn run_pcr(
    op: &OperatorChain<'_>,
    start: PcrStart,
    opts: &PcrOptions,
    mut observer: Option<&mut dyn FnMut(&PcrStep<'_>)>,
) -> Result<PcrOutcome> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = op.dim();
    let PcrStart {
        mut x,
        mut r_hat,
        mut rho,
        reference_norm,
    } = start;
    let mut harvester = opts
        .harvest
        .map(|h| Harvester::new(h, op.deflations().to_vec()));
    let run_to_limit = opts.harvest.is_some_and(|h| h.run_to_limit);

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut u_hat = vec![0.0; n];
    let mut v_hat = vec![0.0; n];
    let mut d_hat = vec![0.0; n];
    let mut tau = 1.0;
    let mut eta = 0.0;
    let needs_columns = observer.is_some() || harvester.is_some();
    let (mut u_col, mut v_col) = if needs_columns {
        (vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new())
    };

    let mut residual_history = vec![kernels::norm2(&r_hat)];
    let mut m_norm_history = vec![rho.max(0.0).sqrt()];
    let mut theta_history = Vec::new();
    let mut converged_once = false;

    let report = |x: Vec<f64>,
                  residual_history: Vec<f64>,
                  m_norm_history: Vec<f64>,
                  theta_history: Vec<f64>,
                  termination| SolveReport {
        iterations: theta_history.len(),
        mvec: Default::default(),
        residual_history,
        m_norm_history,
        theta_history,
        reference_norm,
        termination,
        x: DenseVector::from_vec_unchecked(x),
        stored_columns: 0,
    };

    let mut j = 0usize;
    let termination = loop {
        let res = *residual_history.last().unwrap();
        let converged = res <= opts.tol * reference_norm;
        converged_once |= converged;
        let harvesting = run_to_limit && harvester.as_ref().is_some_and(|h| h.pending());
        if converged && !harvesting {
            break Termination::ToleranceMet;
        }
        if j >= opts.max_iter {
            break if converged_once {
                Termination::ToleranceMet
            } else {
                Termination::MaxIter
            };
        }

        op.mod_a_func_into(&r_hat, &mut v_hat, &mut d_hat, &mut u_hat)?;
        let xi = kernels::dot(&d_hat, &v);
        kernels::xpby(&mut u, &u_hat, -xi / tau);
        kernels::xpby(&mut v, &v_hat, -xi / tau);
        let tau_hat = kernels::dot(&d_hat, &v);
        let theta = tau_hat + xi * xi / tau;
        if !(tau_hat > 0.0) {
            if !tau_hat.is_finite() {
                return Err(Error::NumericalBreakdown("pcr direction norm"));
            }
            if converged_once {
                break Termination::ToleranceMet;
            }
            return Err(Error::Breakdown {
                iteration: j,
                reason: "non-positive direction norm tau_hat",
                partial: Box::new(report(
                    x,
                    residual_history,
                    m_norm_history,
                    theta_history,
                    Termination::Breakdown,
                )),
            });
        }
        if let Some(h) = harvester.as_mut() {
            if j >= 1 {
                h.push_t((tau - xi) / eta, -(tau * tau_hat).sqrt() / eta);
            }
        }
        if needs_columns {
            let s = 1.0 / tau_hat.sqrt();
            for i in 0..n {
                u_col[i] = s * u[i];
                v_col[i] = s * v[i];
            }
        }
        let new_eta = kernels::dot(&d_hat, &r_hat);
        if let Some(obs) = observer.as_mut() {
            obs(&PcrStep {
                iteration: j,
                x: &x,
                r_hat: &r_hat,
                u: &u_col,
                v: &v_col,
                theta,
                tau_hat,
                eta: new_eta,
            });
        }
        if let Some(h) = harvester.as_mut() {
            h.capture(j + 1, &u_col, &v_col);
        }
        eta = new_eta;
        tau = tau_hat;
        if eta == 0.0 || !eta.is_finite() {
            if !eta.is_finite() {
                return Err(Error::NumericalBreakdown("pcr step length"));
            }
            if converged_once {
                break Termination::ToleranceMet;
            }
            theta_history.push(theta);
            residual_history.push(*residual_history.last().unwrap());
            m_norm_history.push(*m_norm_history.last().unwrap());
            return Err(Error::Breakdown {
                iteration: j,
                reason: "zero step coefficient eta",
                partial: Box::new(report(
                    x,
                    residual_history,
                    m_norm_history,
                    theta_history,
                    Termination::Breakdown,
                )),
            });
        }
        let step = eta / tau;
        kernels::axpy(&mut x, step, &u);
        kernels::axpy(&mut r_hat, -step, &v);
        rho -= eta * step;
        theta_history.push(theta);
        residual_history.push(kernels::norm2(&r_hat));
        m_norm_history.push(rho.max(0.0).sqrt());
        j += 1;
    };

    if !kernels::all_finite(&x) {
        return Err(Error::NumericalBreakdown("pcr iterate"));
    }
    let mut report = report(x, residual_history, m_norm_history, theta_history, termination);
    let harvest = harvester.map(Harvester::finish);
    if let Some(h) = &harvest {
        report.stored_columns = h
            .blocks
            .iter()
            .map(|b| b.strided.len() + 2)
            .sum();
    }
    Ok(PcrOutcome { report, harvest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::MvecCounter;
    use crate::precond::Preconditioner;
    use crate::problem::gen_laplace_2d;
    use crate::solver::PcrOptions;
    use crate::sparse::CsrMatrix;

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let a = gen_laplace_2d(3).unwrap();
        let m = Preconditioner::identity(9);
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        let out = pcr_solve(&op, &[0.0; 9], None, &PcrOptions::new(1e-8, 10)).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert!(out.report.converged());
        assert!(out.report.x.iter().all(|&v| v == 0.0));
        assert_eq!(out.report.residual_history.len(), 1);
    }

    #[test]
    fn identity_system_converges_in_one_step() {
        let a = CsrMatrix::identity(4).unwrap();
        let m = Preconditioner::identity(4);
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5];
        let out = pcr_solve(&op, &b, None, &PcrOptions::new(1e-12, 10)).unwrap();
        assert_eq!(out.report.iterations, 1);
        assert_eq!(out.report.x.as_slice(), &b);
        assert_eq!(out.report.mvec.a, 1);
    }

    #[test]
    fn diagonal_system_is_exact_after_three_steps() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let m = Preconditioner::identity(3);
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        let out = pcr_solve(&op, &[1.0; 3], None, &PcrOptions::new(1e-12, 10)).unwrap();
        assert!(out.report.iterations <= 3);
        let expect = [1.0, 0.5, 1.0 / 3.0];
        for (x, e) in out.report.x.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn max_iter_is_reported() {
        let a = gen_laplace_2d(6).unwrap();
        let m = Preconditioner::identity(36);
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        let out = pcr_solve(&op, &[1.0; 36], None, &PcrOptions::new(1e-14, 3)).unwrap();
        assert_eq!(out.report.termination, Termination::MaxIter);
        assert_eq!(out.report.iterations, 3);
        assert_eq!(out.report.residual_history.len(), 4);
    }

    #[test]
    fn indefinite_breakdown_is_typed() {
        // ⟨A r̂, r̂⟩ = 0 for r̂ = (1, 1) and A = diag(1, −1).
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        let m = Preconditioner::identity(2);
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        match pcr_solve(&op, &[1.0, 1.0], None, &PcrOptions::new(1e-10, 10)) {
            Err(Error::Breakdown { iteration, partial, .. }) => {
                assert_eq!(iteration, 0);
                assert_eq!(partial.termination, Termination::Breakdown);
                assert_eq!(partial.x.as_slice(), &[0.0, 0.0]);
            }
            other => panic!("expected breakdown, got {other:?}"),
        }
    }

    #[test]
    fn harvest_collects_complete_blocks() {
        let a = gen_laplace_2d(8).unwrap();
        let m = Preconditioner::jacobi(&a).unwrap();
        let c = MvecCounter::default();
        let op = OperatorChain::new(&a, &m, &c).unwrap();
        let h = HarvestConfig::new(2, 3, 2).unwrap().run_to_limit(true);
        let b: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = pcr_solve(&op, &b, None, &PcrOptions::new(1e-6, 100).with_harvest(h)).unwrap();
        let harvest = out.harvest.unwrap();
        assert!(harvest.is_complete());
        assert_eq!(harvest.blocks[0].strided.len(), 3);
        assert_eq!(harvest.blocks[1].t.dim(), 6);
        assert_eq!(out.report.stored_columns, 10);
        for blk in &harvest.blocks {
            // ⟨A u_end, v_end⟩ = ‖v_end‖²_M = 1
            let au = a.spmv(blk.boundary.u()).unwrap();
            let w = kernels::dot(&au, blk.boundary.v());
            assert!((w - 1.0).abs() < 1e-6);
        }
    }
}
