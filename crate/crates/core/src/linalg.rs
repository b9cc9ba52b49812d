//! Small dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on the diagonal of R for declaring rank deficiency.
const RANK_TOL: f64 = 1e-10;

/// Least squares via Householder QR. Fails on rank deficiency.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = design.shape();
    if n < p {
        return Err(Error::SingularDesign(format!("{n} rows for {p} coefficients")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag) {
        return Err(Error::SingularDesign("design is not of full column rank".into()));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))
}

/// Ridge-type solve `(X'X + diag(penalty)) b = X'y` via Cholesky.
pub fn ridge_solve(design: &DMatrix<f64>, y: &DVector<f64>, penalty: &[f64]) -> Result<DVector<f64>> {
    let mut g = design.transpose() * design;
    for (j, &l) in penalty.iter().enumerate() {
        g[(j, j)] += l;
    }
    let rhs = design.transpose() * y;
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("regularized normal equations not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Fallback ridge level: `1e-8 * trace(X'X) / p`.
pub(crate) fn fallback_ridge(design: &DMatrix<f64>) -> f64 {
    let p = design.ncols().max(1) as f64;
    let tr: f64 = design.iter().map(|v| v * v).sum();
    let l = 1e-8 * tr / p;
    if l > 0.0 { l } else { 1e-8 }
}

/// Least squares that never fails: exact LS when the design has full column
/// rank, otherwise the fallback ridge solution (minimum-norm-like when there
/// are fewer rows than columns).
pub fn least_squares_or_ridge(design: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if let Ok(b) = least_squares(design, y) {
        return b;
    }
    let l = fallback_ridge(design);
    let (n, p) = design.shape();
    if n < p {
        // dual form: X'(XX' + lI)^{-1} y
        let mut k = design * design.transpose();
        for i in 0..n {
            k[(i, i)] += l;
        }
        if let Some(ch) = k.cholesky() {
            return design.transpose() * ch.solve(y);
        }
    } else if let Ok(b) = ridge_solve(design, y, &vec![l; p]) {
        return b;
    }
    DVector::zeros(p)
}

/// Row rank of a small matrix, via QR of its transpose.
pub(crate) fn row_rank(m: &DMatrix<f64>) -> usize {
    let t = m.transpose();
    let k = t.nrows().min(t.ncols());
    if k == 0 {
        return 0;
    }
    let r = t.qr().r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return 0;
    }
    (0..k).filter(|&i| r[(i, i)].abs() > RANK_TOL * max_diag).count()
}
