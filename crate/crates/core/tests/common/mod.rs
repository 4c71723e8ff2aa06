//! Dense oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srpcr::linalg::DenseVector;
use srpcr::operator::OperatorChain;
use srpcr::precond::Preconditioner;
use srpcr::solver::{pcr_solve_observed, PcrOptions, PcrOutcome, PcrStep};
use srpcr::sparse::CsrMatrix;

pub fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    let rows = a.to_dense();
    DMatrix::from_fn(a.n_rows(), a.n_cols(), |i, j| rows[i][j])
}

/// `M⁻¹` assembled column by column from `apply_inv`.
pub fn dense_minv(m: &Preconditioner) -> DMatrix<f64> {
    let n = m.dim();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = m.apply_inv(&DenseVector::unit(n, j)).unwrap();
        out.set_column(j, &DVector::from_column_slice(&col));
    }
    out
}

pub fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

pub fn columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random sparse SPD matrix: symmetric random pattern made diagonally dominant.
pub fn random_spd(n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(density) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        t.push((i, i, s + 0.5 + rng.gen_range(0.0..1.0)));
    }
    CsrMatrix::from_triplets(n, n, t).unwrap().into_symmetric().unwrap()
}

/// `‖M⁻¹r‖_M = sqrt(rᵀM⁻¹r)`.
pub fn m_norm_of_residual(minv: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    r.dot(&(minv * r)).max(0.0).sqrt()
}

/// Minimum of `‖M⁻¹(b − A(x0 + W·y))‖_M` over `y`, and the minimizer.
pub fn ls_minimum(
    a: &DMatrix<f64>,
    minv: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    w: &DMatrix<f64>,
) -> (f64, DVector<f64>) {
    let l = minv.clone().cholesky().expect("M⁻¹ is SPD").l();
    let lt = l.transpose();
    let r0 = b - a * x0;
    let big = &lt * a * w;
    let c = &lt * &r0;
    let y = big.clone().svd(true, true).solve(&c, 1e-14).unwrap();
    let x = x0 + w * &y;
    (m_norm_of_residual(minv, &(b - a * &x)), x)
}

/// Every normalized column pair `(u_j, v_j)` and `(r̂_j, θ_j)` of a PCR run.
#[derive(Default)]
pub struct Recorded {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub r_hat: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

pub fn run_recorded(
    op: &OperatorChain<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcrOptions,
) -> (PcrOutcome, Recorded) {
    let mut rec = Recorded::default();
    let mut obs = |s: &PcrStep<'_>| {
        rec.u.push(s.u.to_vec());
        rec.v.push(s.v.to_vec());
        rec.r_hat.push(s.r_hat.to_vec());
        rec.theta.push(s.theta);
    };
    let out = pcr_solve_observed(op, b, x0, opts, &mut obs).unwrap();
    (out, rec)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
