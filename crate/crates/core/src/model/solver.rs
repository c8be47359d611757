//! Penalized least squares with an L1 block.
//!
//! Minimizes `‖y − A a − B δ‖² + Σ p_j a_j² + λ ‖δ‖₁`. The smooth block
//! `a` is eliminated in closed form, leaving a small lasso over `δ` with
//! Gram `Q = BᵀB − BᵀA (AᵀA + P)⁻¹ AᵀB`, solved by cyclic coordinate
//! descent with soft-thresholding.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Coordinate-descent stopping rule: largest coordinate move in a sweep.
pub(crate) const CD_TOLERANCE: f64 = 1e-10;
const CD_MAX_SWEEPS: usize = 200_000;

/// `(AᵀA + P)` factored after symmetric diagonal equilibration, so badly
/// scaled raw regressor columns don't wreck the factorization.
pub(crate) struct Normal {
    chol: Cholesky<f64, Dyn>,
    scale: DVector<f64>,
}

impl Normal {
    pub(crate) fn new(gram: DMatrix<f64>) -> Normal {
        let p = gram.nrows();
        let scale = DVector::from_iterator(
            p,
            (0..p).map(|i| {
                let d = gram[(i, i)];
                if d > 0.0 && d.is_finite() {
                    d.sqrt()
                } else {
                    1.0
                }
            }),
        );
        let mut eq = gram;
        for j in 0..p {
            for i in 0..p {
                eq[(i, j)] /= scale[i] * scale[j];
            }
        }
        let mut jitter = 0.0;
        loop {
            let mut m = eq.clone();
            for i in 0..p {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                if jitter > 0.0 {
                    log::debug!("normal equations regularized with jitter {jitter:e}");
                }
                return Normal { chol, scale };
            }
            jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
            assert!(jitter < 1.0, "normal equations are not positive definite");
        }
    }

    /// `(AᵀA + P)⁻¹ rhs`.
    pub(crate) fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut r = rhs.clone();
        for j in 0..r.ncols() {
            for i in 0..r.nrows() {
                r[(i, j)] /= self.scale[i];
            }
        }
        let mut x = self.chol.solve(&r);
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                x[(i, j)] /= self.scale[i];
            }
        }
        x
    }
}

/// `AᵀA + diag(penalty)`.
pub(crate) fn penalized_gram(a: &DMatrix<f64>, penalty: &[f64]) -> DMatrix<f64> {
    let mut g = a.tr_mul(a);
    for (i, p) in penalty.iter().enumerate() {
        g[(i, i)] += p;
    }
    g
}

/// Ridge solve: argmin ‖y − A a‖² + Σ p_j a_j².
pub(crate) fn ridge(a: &DMatrix<f64>, penalty: &[f64], y: &DVector<f64>) -> DVector<f64> {
    let normal = Normal::new(penalized_gram(a, penalty));
    let rhs = a.tr_mul(y);
    let rhs = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    DVector::from_column_slice(normal.solve(&rhs).as_slice())
}

pub(crate) struct SparseSolution {
    pub smooth: DVector<f64>,
    pub sparse: Vec<f64>,
}

/// Solve the mixed L1/L2 problem described in the module docs, starting
/// coordinate descent from `warm`.
pub(crate) fn solve_l1_block(
    a: &DMatrix<f64>,
    penalty: &[f64],
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    warm: &[f64],
) -> SparseSolution {
    let s = b.ncols();
    let normal = Normal::new(penalized_gram(a, penalty));
    let ay = a.tr_mul(y);
    let ay = DMatrix::from_column_slice(ay.len(), 1, ay.as_slice());
    let kinv_ay = normal.solve(&ay);
    if s == 0 {
        return SparseSolution { smooth: DVector::from_column_slice(kinv_ay.as_slice()), sparse: vec![] };
    }

    let gab = a.tr_mul(b);
    let kinv_gab = normal.solve(&gab);
    let q = b.tr_mul(b) - gab.tr_mul(&kinv_gab);
    let lin = b.tr_mul(y) - gab.tr_mul(&kinv_ay).column(0);

    let mut delta = warm.to_vec();
    assert_eq!(delta.len(), s);
    let sparse = lasso_cd(&q, lin.as_slice(), lambda, &mut delta);

    let delta_v = DMatrix::from_column_slice(s, 1, &sparse);
    let smooth = kinv_ay - &kinv_gab * delta_v;
    SparseSolution { smooth: DVector::from_column_slice(smooth.as_slice()), sparse }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `δᵀQδ − 2 linᵀδ + λ‖δ‖₁`.
fn lasso_cd(q: &DMatrix<f64>, lin: &[f64], lambda: f64, delta: &mut [f64]) -> Vec<f64> {
    let s = lin.len();
    let mut qd: Vec<f64> = (0..s).map(|i| (0..s).map(|j| q[(i, j)] * delta[j]).sum()).collect();
    let half = lambda / 2.0;
    for sweep in 1..=CD_MAX_SWEEPS {
        let mut max_move: f64 = 0.0;
        for j in 0..s {
            let qjj = q[(j, j)];
            let old = delta[j];
            let new = if qjj <= 1e-14 {
                0.0
            } else {
                let rho = lin[j] - qd[j] + qjj * old;
                soft_threshold(rho, half) / qjj
            };
            let step = new - old;
            if step != 0.0 {
                delta[j] = new;
                for (i, v) in qd.iter_mut().enumerate() {
                    *v += q[(i, j)] * step;
                }
                max_move = max_move.max(step.abs());
            }
        }
        if max_move < CD_TOLERANCE {
            log::trace!("coordinate descent converged in {sweep} sweeps");
            return delta.to_vec();
        }
    }
    log::debug!("coordinate descent hit the sweep cap ({CD_MAX_SWEEPS})");
    delta.to_vec()
}
