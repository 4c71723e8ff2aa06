//! Krylov subspace recycling for sequences of symmetric linear systems
//! `A·x⁽ⁱ⁾ = b⁽ⁱ⁾` with a fixed matrix.
//!
//! The first system is solved with a preconditioned conjugate residual method
//! ([`solver::pcr_solve`]) that harvests a compact description of its search
//! space: every `J`-th Lanczos basis column, the tridiagonal coefficients and
//! one boundary pair per basis block. Later systems project onto the recycled
//! blocks through [`shortrep::ShortRepresentation`] and continue with
//! deflated post-iterations that keep the iterate residual-optimal over the
//! combined space ([`recycle::srpcr_ap_solve`]).
//!
//! ```
//! use srpcr::{problem, precond::Preconditioner, operator::{MvecCounter, OperatorChain}};
//! use srpcr::solver::{pcr_solve, PcrOptions};
//! use srpcr::linalg::DenseVector;
//!
//! let a = problem::gen_laplace_2d(8).unwrap();
//! let m = Preconditioner::ic0(&a, 0.0).unwrap();
//! let counter = MvecCounter::default();
//! let op = OperatorChain::new(&a, &m, &counter).unwrap();
//! let b = DenseVector::ones(64);
//! let out = pcr_solve(&op, &b, None, &PcrOptions::new(1e-10, 200)).unwrap();
//! assert!(out.report.converged());
//! ```

pub mod archive;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod operator;
pub mod precond;
pub mod problem;
pub mod recycle;
pub mod sequence;
pub mod shortrep;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
