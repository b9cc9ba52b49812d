//! The regression dataset `(X, y)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Design matrix and response. When `intercept` is set the stored design
/// carries a leading column of ones and coefficient 0 is the (unpenalized)
/// intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    y: DVector<f64>,
    intercept: bool,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, intercept: bool) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return invalid(format!("design must be at least 1x1, got {}x{}", x.nrows(), x.ncols()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite values");
        }
        let design = if intercept { x.insert_column(0, 1.0) } else { x };
        Ok(Dataset { design, y, intercept })
    }

    /// Build from row vectors (raw predictors, without the ones column).
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, intercept: bool) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return invalid("no rows");
        }
        let p = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, got: r.len() });
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_vec(y), intercept)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Number of raw predictor columns.
    pub fn p(&self) -> usize {
        self.design.ncols() - usize::from(self.intercept)
    }

    /// Length of the coefficient vector, including the intercept if any.
    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Effective design, with the ones column when the intercept is on.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// Raw predictors (no ones column).
    pub fn x(&self) -> DMatrix<f64> {
        if self.intercept {
            self.design.columns(1, self.p()).into_owned()
        } else {
            self.design.clone()
        }
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Index of the first penalized coefficient.
    pub fn first_penalized(&self) -> usize {
        usize::from(self.intercept)
    }

    pub fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.n_coef() {
            return Err(Error::DimensionMismatch { expected: self.n_coef(), got: beta.len() });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return invalid("non-finite coefficient");
        }
        Ok(())
    }

    pub fn predict(&self, beta: &[f64]) -> Result<DVector<f64>> {
        self.check_beta(beta)?;
        Ok(self.predict_unchecked(beta))
    }

    pub(crate) fn predict_unchecked(&self, beta: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                out.axpy(b, &self.design.column(j), 1.0);
            }
        }
        out
    }

    pub(crate) fn residuals_unchecked(&self, beta: &[f64]) -> Vec<f64> {
        let fit = self.predict_unchecked(beta);
        self.y.iter().zip(fit.iter()).map(|(y, f)| y - f).collect()
    }

    /// Dataset restricted to the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            design: self.design.select_rows(rows),
            y: self.y.select_rows(rows),
            intercept: self.intercept,
        }
    }

    /// Same design, new response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Dataset> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite response");
        }
        Ok(Dataset { design: self.design.clone(), y, intercept: self.intercept })
    }

    /// Replace row `i` (raw predictors and response).
    pub fn replace_row(&mut self, i: usize, x_raw: &[f64], y: f64) -> Result<()> {
        if i >= self.n() {
            return invalid(format!("row {i} out of range"));
        }
        if x_raw.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: x_raw.len() });
        }
        let off = self.first_penalized();
        for (j, &v) in x_raw.iter().enumerate() {
            self.design[(i, j + off)] = v;
        }
        self.y[i] = y;
        Ok(())
    }
}
