//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [problem]
//! generator = "laplace_2d"     # laplace_1d | laplace_2d | shifted_laplace | mirror_pair
//! n = 64                       # grid size (2D) or order (1D, mirror_pair)
//! # scale = 1.0                # laplace_1d only, default 1/(n+1)^2
//! # sigma = 4.0                # shifted_laplace only
//! # matrix_market = "a.mtx"    # instead of generator
//! # d = "a_ones"               # a_ones (default) | ones
//!
//! [preconditioner]
//! kind = "ic0"                 # identity | jacobi | signed_tridiagonal | ic0
//! shift = 0.0                  # ic0 only
//!
//! [sequence]
//! kind = "B"                   # A | B | C; ignored for mirror_pair
//! q = 5
//! inner_tol = 1e-12
//!
//! [recycle]
//! blocks = 2                   # l
//! columns = 8                  # k
//! stride = 6                   # J
//! complete_harvest = false     # iterate the first solve past tol until all blocks are harvested
//!
//! [solver]
//! tol = 1e-8
//! max_iter = 2000
//!
//! [output]
//! dir = "out"
//! maps = false                 # also write Q and G maps of the first solve
//! g_band = 200
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sequence::{SequenceKind, DEFAULT_INNER_TOL};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub preconditioner: PreconditionerConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    pub recycle: RecycleConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    #[serde(rename = "laplace_1d")]
    Laplace1d,
    #[serde(rename = "laplace_2d")]
    Laplace2d,
    ShiftedLaplace,
    MirrorPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartVector {
    #[default]
    AOnes,
    Ones,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub generator: Option<Generator>,
    pub n: Option<usize>,
    pub scale: Option<f64>,
    pub sigma: Option<f64>,
    pub matrix_market: Option<PathBuf>,
    #[serde(default)]
    pub d: StartVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerChoice {
    Identity,
    Jacobi,
    SignedTridiagonal,
    #[default]
    Ic0,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreconditionerConfig {
    #[serde(default)]
    pub kind: PreconditionerChoice,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
}

fn default_kind() -> String {
    "B".into()
}

fn default_q() -> usize {
    5
}

fn default_inner_tol() -> f64 {
    DEFAULT_INNER_TOL
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            kind: default_kind(),
            q: default_q(),
            inner_tol: default_inner_tol(),
        }
    }
}

impl SequenceConfig {
    pub fn parsed_kind(&self) -> Result<SequenceKind> {
        self.kind.parse().map_err(|e: Error| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecycleConfig {
    pub blocks: usize,
    pub columns: usize,
    pub stride: usize,
    /// Keep the first solve iterating past the tolerance until every block
    /// is harvested. Blocks taken after convergence lose orthogonality.
    #[serde(default)]
    pub complete_harvest: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    5000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub maps: bool,
    #[serde(default = "default_band")]
    pub g_band: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_band() -> usize {
    crate::diagnostics::DEFAULT_G_BAND
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            maps: false,
            g_band: default_band(),
        }
    }
}

/// Environment variable overriding `output.dir`.
pub const ENV_OUTPUT_DIR: &str = "SRPCR_OUTPUT_DIR";
/// Environment variable setting the worker count for the G map.
pub const ENV_THREADS: &str = "SRPCR_THREADS";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, applies environment overrides, and validates. Relative paths
    /// are taken relative to the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(mm), Some(parent)) = (&cfg.problem.matrix_market, path.parent()) {
            if mm.is_relative() {
                cfg.problem.matrix_market = Some(parent.join(mm));
            }
        }
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            if !dir.is_empty() {
                cfg.output.dir = PathBuf::from(dir);
            }
        } else if cfg.output.dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output.dir = parent.join(&cfg.output.dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let p = &self.problem;
        match (p.generator, &p.matrix_market) {
            (Some(_), Some(_)) => return bad("problem: give either generator or matrix_market".into()),
            (None, None) => return bad("problem: generator or matrix_market is required".into()),
            (Some(g), None) => {
                let n = match p.n {
                    Some(n) => n,
                    None => return bad("problem.n is required for generators".into()),
                };
                if n < 2 {
                    return bad(format!("problem.n must be >= 2, got {n}"));
                }
                if g == Generator::MirrorPair && n % 2 != 0 {
                    return bad(format!("mirror_pair needs an even n, got {n}"));
                }
                if g == Generator::ShiftedLaplace && p.sigma.is_none() {
                    return bad("problem.sigma is required for shifted_laplace".into());
                }
            }
            (None, Some(_)) => {}
        }
        let r = &self.recycle;
        if r.blocks == 0 || r.columns == 0 || r.stride == 0 {
            return bad(format!(
                "recycle: blocks, columns and stride must be >= 1, got ({}, {}, {})",
                r.blocks, r.columns, r.stride
            ));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return bad(format!("solver.tol must lie in (0, 1), got {}", self.solver.tol));
        }
        let m = r.blocks * r.columns * r.stride;
        if m >= self.solver.max_iter {
            return bad(format!(
                "recycled dimension l*k*J = {m} must stay below solver.max_iter = {}",
                self.solver.max_iter
            ));
        }
        if self.sequence.q == 0 {
            return bad("sequence.q must be >= 1".into());
        }
        if !(self.sequence.inner_tol > 0.0) {
            return bad("sequence.inner_tol must be positive".into());
        }
        if self.problem.generator != Some(Generator::MirrorPair) {
            self.sequence.parsed_kind()?;
        }
        if self.preconditioner.shift < 0.0 {
            return bad("preconditioner.shift must be >= 0".into());
        }
        Ok(())
    }

    pub fn threads(&self) -> usize {
        std::env::var(ENV_THREADS)
            .ok()
            .and_then(|s| s.parse().ok())
            .filter(|&t: &usize| t > 0)
            .unwrap_or(1)
    }
}
