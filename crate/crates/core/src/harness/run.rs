//! The experiment protocol: the first right-hand side is solved by PCR while
//! the basis blocks are harvested, every later one by the recycled solver.
//! Each right-hand side is also solved by preconditioned MINRES as baseline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use super::config::{ExperimentConfig, Generator, PreconditionerChoice, StartVector};
use super::csv::{format_f64, save_history, save_matrix, HistoryRow, Phase};
use super::plot::write_plot_script;
use crate::archive::save_basis;
use crate::diagnostics::{capture_basis, compute_g, compute_q, log10_abs};
use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::operator::{MvecCounter, OperatorChain};
use crate::precond::Preconditioner;
use crate::problem::{gen_laplace_1d, gen_laplace_2d, gen_shifted_laplace, read_matrix_market, Origin, ProblemInstance};
use crate::recycle::{srpcr_ap_solve, RecycleBasis};
use crate::sequence::{gen_mirror_pair, gen_sequence};
use crate::solver::{pcr_solve, pminres_solve, HarvestConfig, PcrOptions, SolveReport};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const BASIS_FILE: &str = "basis.srpcr";
pub const SEQUENCE_FILE: &str = "sequence.csv";
pub const Q_MAP_FILE: &str = "q_map.csv";
pub const G_MAP_FILE: &str = "g_map.csv";

/// Problem, preconditioner and right-hand sides of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: ProblemInstance,
    pub m: Preconditioner,
    pub rhs: Vec<DenseVector>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let p = &cfg.problem;
    let mut example_rhs = None;
    let (a, label, origin) = match (&p.matrix_market, p.generator) {
        (Some(path), _) => (read_matrix_market(path)?, path.display().to_string(), Origin::MatrixMarketFile),
        (None, Some(g)) => {
            let n = p.n.unwrap_or_default();
            let a = match g {
                Generator::Laplace1d => {
                    let scale = p.scale.unwrap_or(1.0 / ((n + 1) as f64).powi(2));
                    gen_laplace_1d(n, scale)?
                }
                Generator::Laplace2d => gen_laplace_2d(n)?,
                Generator::ShiftedLaplace => gen_shifted_laplace(n, p.sigma.unwrap_or_default())?,
                Generator::MirrorPair => {
                    let (a, b1, b2) = gen_mirror_pair(n)?;
                    example_rhs = Some(vec![b1, b2]);
                    a
                }
            };
            (a, format!("{g:?}({n})").to_lowercase(), Origin::Generator)
        }
        (None, None) => return Err(Error::Config("no problem source".into())),
    };
    let d = match p.d {
        StartVector::AOnes => None,
        StartVector::Ones => Some(DenseVector::ones(a.n_rows())),
    };
    let problem = ProblemInstance::new(a, label, origin, d)?;
    let m = match cfg.preconditioner.kind {
        PreconditionerChoice::Identity => Preconditioner::identity(problem.dim()),
        PreconditionerChoice::Jacobi => Preconditioner::jacobi(&problem.a)?,
        PreconditionerChoice::SignedTridiagonal => Preconditioner::signed_tridiagonal(&problem.a)?,
        PreconditionerChoice::Ic0 => Preconditioner::ic0(&problem.a, cfg.preconditioner.shift)?,
    };
    let rhs = match example_rhs {
        Some(r) => r,
        None => {
            let s = &cfg.sequence;
            gen_sequence(s.parsed_kind()?, &problem.a, &m, &problem.d, s.q, s.inner_tol)?.vectors
        }
    };
    Ok(Experiment { problem, m, rhs })
}

/// Per right-hand side totals; `mvec` counts applications of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsSummary {
    pub rhs_index: usize,
    pub pminres_mvec: u64,
    pub srpcr_mvec: u64,
    pub projection_mvec: u64,
    pub post_iterations: usize,
    pub stored_columns: usize,
    pub pminres_converged: bool,
    pub srpcr_converged: bool,
}

impl RhsSummary {
    pub fn speedup(&self) -> f64 {
        self.pminres_mvec as f64 / self.srpcr_mvec as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<RhsSummary>,
    /// Mean baseline/recycled MVec ratio over right-hand sides 2..q.
    pub average_speedup: Option<f64>,
    pub pminres_histories: Vec<Vec<HistoryRow>>,
    pub srpcr_histories: Vec<Vec<HistoryRow>>,
}

impl RunSummary {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.pminres_converged && r.srpcr_converged)
    }

    /// Average relative MVec saving `1 − srpcr/pminres` over right-hand sides 2..q.
    pub fn average_reduction(&self) -> Option<f64> {
        let later = &self.rows[1.min(self.rows.len())..];
        if later.is_empty() {
            return None;
        }
        let s: f64 = later
            .iter()
            .map(|r| 1.0 - r.srpcr_mvec as f64 / r.pminres_mvec as f64)
            .sum();
        Some(s / later.len() as f64)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "rhs_index,pminres_mvec,srpcr_mvec,projection_mvec,post_iterations,stored_columns,speedup,pminres_converged,srpcr_converged\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.rhs_index,
                r.pminres_mvec,
                r.srpcr_mvec,
                r.projection_mvec,
                r.post_iterations,
                r.stored_columns,
                format_f64(r.speedup()),
                r.pminres_converged,
                r.srpcr_converged
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>4} {:>10} {:>10} {:>10} {:>6} {:>7} {:>8}\n",
            "rhs", "pminres", "srpcr", "project", "post", "stored", "speedup"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>10} {:>10} {:>6} {:>7} {:>8.3}",
                r.rhs_index,
                r.pminres_mvec,
                r.srpcr_mvec,
                r.projection_mvec,
                r.post_iterations,
                r.stored_columns,
                r.speedup()
            );
        }
        if let Some(a) = self.average_speedup {
            let _ = writeln!(s, "average speedup over rhs 2..{}: {a:.3}", self.rows.len());
        }
        s
    }
}

fn baseline_rows(rhs_index: usize, report: &SolveReport) -> Vec<HistoryRow> {
    report
        .relative_residuals()
        .into_iter()
        .enumerate()
        .map(|(j, relres)| HistoryRow {
            rhs_index,
            phase: Phase::Baseline,
            iteration: j,
            mvec_cumulative: j as u64,
            relres,
        })
        .collect()
}

fn post_rows(rhs_index: usize, report: &SolveReport, offset: u64) -> Vec<HistoryRow> {
    report
        .relative_residuals()
        .into_iter()
        .enumerate()
        .map(|(j, relres)| HistoryRow {
            rhs_index,
            phase: Phase::Post,
            iteration: j,
            mvec_cumulative: offset + j as u64,
            relres,
        })
        .collect()
}

/// Solves every right-hand side with both methods and returns the records
/// without touching the file system.
pub fn solve_all(cfg: &ExperimentConfig, exp: &Experiment) -> Result<(RunSummary, RecycleBasis)> {
    let (tol, max_iter) = (cfg.solver.tol, cfg.solver.max_iter);
    let r = cfg.recycle;
    let a = &exp.problem.a;
    let mut rows = Vec::with_capacity(exp.rhs.len());
    let mut pminres_histories = Vec::with_capacity(exp.rhs.len());
    let mut srpcr_histories = Vec::with_capacity(exp.rhs.len());
    let mut basis: Option<RecycleBasis> = None;

    for (i, b) in exp.rhs.iter().enumerate() {
        let rhs_index = i + 1;

        let counter = MvecCounter::default();
        let op = OperatorChain::new(a, &exp.m, &counter)?;
        let base = pminres_solve(&op, b, None, tol, max_iter)?;
        if !base.converged() {
            warn!("rhs {rhs_index}: PMINRES stopped at relres {:e}", base.final_relres());
        }
        pminres_histories.push(baseline_rows(rhs_index, &base));

        let counter = MvecCounter::default();
        let op = OperatorChain::new(a, &exp.m, &counter)?;
        let summary = match &basis {
            None => {
                let harvest = HarvestConfig::new(r.blocks, r.columns, r.stride)?.run_to_limit(r.complete_harvest);
                let out = pcr_solve(&op, b, None, &PcrOptions::new(tol, max_iter).with_harvest(harvest))?;
                let h = out.harvest.as_ref().expect("harvest was requested");
                if !h.is_complete() {
                    warn!(
                        "first solve converged after harvesting {} of {} blocks",
                        h.blocks.len(),
                        r.blocks
                    );
                }
                let new_basis = RecycleBasis::from_harvest(h)?;
                srpcr_histories.push(post_rows(rhs_index, &out.report, 0));
                let s = RhsSummary {
                    rhs_index,
                    pminres_mvec: base.mvec.a,
                    srpcr_mvec: out.report.mvec.a,
                    projection_mvec: 0,
                    post_iterations: out.report.iterations,
                    stored_columns: new_basis.cost_ledger().0,
                    pminres_converged: base.converged(),
                    srpcr_converged: out.report.converged(),
                };
                basis = Some(new_basis);
                s
            }
            Some(basis) => {
                let out = srpcr_ap_solve(basis, &op, b, None, &PcrOptions::new(tol, max_iter))?;
                let rep = &out.report;
                let mut hist: Vec<HistoryRow> = out
                    .recycle
                    .projection_residuals
                    .iter()
                    .zip(&out.recycle.projection_mvec_points)
                    .enumerate()
                    .map(|(blk, (&res, &mvec))| HistoryRow {
                        rhs_index,
                        phase: Phase::Projection,
                        iteration: blk,
                        mvec_cumulative: mvec,
                        relres: crate::solver::relative(res, rep.reference_norm),
                    })
                    .collect();
                hist.extend(post_rows(rhs_index, rep, out.recycle.projection_mvec.a));
                srpcr_histories.push(hist);
                RhsSummary {
                    rhs_index,
                    pminres_mvec: base.mvec.a,
                    srpcr_mvec: rep.mvec.a,
                    projection_mvec: out.recycle.projection_mvec.a,
                    post_iterations: out.recycle.post_iterations,
                    stored_columns: out.recycle.stored_columns,
                    pminres_converged: base.converged(),
                    srpcr_converged: rep.converged(),
                }
            }
        };
        info!(
            "rhs {rhs_index}: pminres {} mvec, srpcr {} mvec",
            summary.pminres_mvec, summary.srpcr_mvec
        );
        rows.push(summary);
    }

    let later: Vec<f64> = rows.iter().skip(1).map(RhsSummary::speedup).collect();
    let average_speedup = (!later.is_empty()).then(|| later.iter().sum::<f64>() / later.len() as f64);
    let basis = basis.ok_or_else(|| Error::InvalidInput("empty right-hand side sequence".into()))?;
    Ok((
        RunSummary {
            rows,
            average_speedup,
            pminres_histories,
            srpcr_histories,
        },
        basis,
    ))
}

pub fn history_path(dir: &Path, method: &str, rhs_index: usize) -> PathBuf {
    dir.join(format!("{method}_rhs{rhs_index}.csv"))
}

/// Full protocol with artifacts written to `cfg.output.dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let exp = prepare(cfg)?;
    info!(
        "problem {} (n = {}, nnz = {}), preconditioner {}, {} right-hand sides",
        exp.problem.label,
        exp.problem.dim(),
        exp.problem.a.nnz(),
        exp.m.kind(),
        exp.rhs.len()
    );
    let (summary, basis) = solve_all(cfg, &exp)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    for (i, h) in summary.pminres_histories.iter().enumerate() {
        save_history(history_path(dir, "pminres", i + 1), h)?;
    }
    for (i, h) in summary.srpcr_histories.iter().enumerate() {
        save_history(history_path(dir, "srpcr", i + 1), h)?;
    }
    std::fs::write(dir.join(SUMMARY_FILE), summary.summary_csv())?;
    save_basis(dir.join(BASIS_FILE), &basis)?;
    write_plot_script(dir, cfg.solver.tol)?;
    if cfg.output.maps {
        write_maps(cfg, &exp)?;
    }
    info!("finished in {:.2?}", started.elapsed());
    Ok(summary)
}

/// Q and G maps of the first right-hand side's Lanczos basis, `log10|·|`.
pub fn write_maps(cfg: &ExperimentConfig, exp: &Experiment) -> Result<()> {
    let r = cfg.recycle;
    let m = r.blocks * r.columns * r.stride;
    let counter = MvecCounter::default();
    let op = OperatorChain::new(&exp.problem.a, &exp.m, &counter)?;
    let full = capture_basis(&op, &exp.rhs[0], m)?;
    let q = compute_q(&exp.m, &full.v)?;
    let g = compute_g(&full.t, cfg.output.g_band, cfg.threads());
    std::fs::create_dir_all(&cfg.output.dir)?;
    save_matrix(cfg.output.dir.join(Q_MAP_FILE), &log10_abs(&q))?;
    save_matrix(cfg.output.dir.join(G_MAP_FILE), &log10_abs(&g))?;
    Ok(())
}

pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<()> {
    let exp = prepare(cfg)?;
    write_maps(cfg, &exp)
}

/// Writes the right-hand sides column-wise to `sequence.csv`.
pub fn dump_sequence(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let exp = prepare(cfg)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mut s = String::from("row");
    for i in 1..=exp.rhs.len() {
        let _ = write!(s, ",b{i}");
    }
    s.push('\n');
    for row in 0..exp.problem.dim() {
        let _ = write!(s, "{row}");
        for b in &exp.rhs {
            let _ = write!(s, ",{}", format_f64(b[row]));
        }
        s.push('\n');
    }
    let path = cfg.output.dir.join(SEQUENCE_FILE);
    std::fs::write(&path, s)?;
    Ok(path)
}
