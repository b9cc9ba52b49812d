//! Objective functions: LST, LTS and the penalized LST-enet objective, plus
//! the two re-parametrizations that bring LST-enet into lasso form.
//!
//! Normalization differs by objective: LST and LST-enet average the kept
//! squared residuals over all `n` rows, while LTS is an unnormalized sum of
//! the `h` smallest squared residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::stats::{check_alpha, trim_unchecked, RealVector, TrimState};

/// Penalty parameters in direct form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    /// Depth trimming level.
    pub alpha: f64,
    /// Grid ceiling the penalty was chosen under, when known.
    pub lambda0: Option<f64>,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec { lambda1: 0.0, lambda2: 0.0, gamma: 1.0, alpha: 1.0, lambda0: None }
    }
}

impl PenaltySpec {
    pub fn new(lambda1: f64, lambda2: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let s = PenaltySpec { lambda1, lambda2, gamma, alpha, lambda0: None };
        s.validate()?;
        Ok(s)
    }

    /// Pure trimming, no penalty.
    pub fn unpenalized(alpha: f64) -> Self {
        PenaltySpec { alpha, ..Default::default() }
    }

    /// Build from the mixing form `(lambda*, alpha*)`.
    pub fn from_mixing(lambda_star: f64, alpha_star: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let (l1, l2) = mixing_to_direct(lambda_star, alpha_star)?;
        Self::new(l1, l2, gamma, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return invalid(format!("lambda1 must be finite and >= 0, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return invalid(format!("lambda2 must be finite and >= 0, got {}", self.lambda2));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return invalid(format!("gamma must be finite and >= 1, got {}", self.gamma));
        }
        check_alpha(self.alpha)?;
        if let Some(l0) = self.lambda0 {
            if !(l0 >= 0.0) {
                return invalid(format!("lambda0 must be >= 0, got {l0}"));
            }
        }
        Ok(())
    }

    pub fn is_penalized(&self) -> bool {
        self.lambda1 > 0.0 || self.lambda2 > 0.0
    }

    /// `(lambda*, alpha*)` when the penalty is non-zero.
    pub fn mixing(&self) -> Option<(f64, f64)> {
        reparam_mixing(self.lambda1, self.lambda2).ok()
    }

    /// Strict convexity on every fixed-trim region holds when
    /// `lambda1 > 0 and gamma > 1`, or `lambda2 > 0`.
    pub fn unique_minimizer(&self) -> bool {
        (self.lambda1 > 0.0 && self.gamma > 1.0) || self.lambda2 > 0.0
    }
}

/// An objective value split into loss and penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub loss: f64,
    pub penalty: f64,
    pub trim: Option<TrimState>,
}

impl ObjectiveValue {
    pub(crate) fn new(loss: f64, penalty: f64, trim: Option<TrimState>) -> Self {
        ObjectiveValue { total: loss + penalty, loss, penalty, trim }
    }
}

pub fn residuals(data: &Dataset, beta: &[f64]) -> Result<RealVector> {
    data.check_beta(beta)?;
    RealVector::new(data.residuals_unchecked(beta))
}

/// `(1/n) sum r_i^2 1(D(r_i) <= alpha)`.
pub fn lst_objective(data: &Dataset, beta: &[f64], alpha: f64) -> Result<ObjectiveValue> {
    check_alpha(alpha)?;
    let r = residuals(data, beta)?;
    Ok(lst_from_residuals(r.as_slice(), alpha))
}

pub(crate) fn lst_from_residuals(r: &[f64], alpha: f64) -> ObjectiveValue {
    let trim = trim_unchecked(r, alpha);
    let loss = trimmed_loss(r, &trim);
    ObjectiveValue::new(loss, 0.0, Some(trim))
}

fn trimmed_loss(r: &[f64], trim: &TrimState) -> f64 {
    trim.kept.iter().map(|&i| r[i] * r[i]).sum::<f64>() / r.len() as f64
}

/// Sum of the `h` smallest squared residuals (no `1/n`).
pub fn lts_objective(data: &Dataset, beta: &[f64], h: usize) -> Result<f64> {
    let n = data.n();
    check_h(n, h)?;
    let r = residuals(data, beta)?;
    Ok(lts_from_residuals(r.as_slice(), h))
}

pub(crate) fn check_h(n: usize, h: usize) -> Result<()> {
    if h < n.div_ceil(2) || h > n {
        return invalid(format!("h must lie in [{}, {n}], got {h}", n.div_ceil(2)));
    }
    Ok(())
}

pub(crate) fn lts_from_residuals(r: &[f64], h: usize) -> f64 {
    let mut sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    if h < sq.len() {
        sq.select_nth_unstable_by(h - 1, f64::total_cmp);
    }
    sq[..h].iter().sum()
}

/// `lambda1 sum |b_j|^gamma + lambda2 sum b_j^2` over penalized coordinates.
pub fn penalty_value(beta: &[f64], lambda1: f64, lambda2: f64, gamma: f64, first_penalized: usize) -> f64 {
    let b = &beta[first_penalized..];
    let lg = if lambda1 == 0.0 {
        0.0
    } else if gamma == 1.0 {
        b.iter().map(|v| v.abs()).sum::<f64>()
    } else {
        b.iter().map(|v| v.abs().powf(gamma)).sum::<f64>()
    };
    let l2 = if lambda2 == 0.0 { 0.0 } else { b.iter().map(|v| v * v).sum::<f64>() };
    lambda1 * lg + lambda2 * l2
}

/// LST loss plus the elastic-net type penalty.
pub fn lst_enet_objective(data: &Dataset, beta: &[f64], spec: &PenaltySpec) -> Result<ObjectiveValue> {
    spec.validate()?;
    let r = residuals(data, beta)?;
    Ok(lst_enet_from_residuals(r.as_slice(), beta, spec, data.first_penalized()))
}

pub(crate) fn lst_enet_from_residuals(r: &[f64], beta: &[f64], spec: &PenaltySpec, first: usize) -> ObjectiveValue {
    let trim = trim_unchecked(r, spec.alpha);
    let loss = trimmed_loss(r, &trim);
    let pen = penalty_value(beta, spec.lambda1, spec.lambda2, spec.gamma, first);
    ObjectiveValue::new(loss, pen, Some(trim))
}

/// Same objective written in mixing form:
/// `loss + lambda* ((1 - alpha*) sum |b|^gamma + alpha* ||b||^2)`.
pub fn lst_enet_objective_mixing(
    data: &Dataset,
    beta: &[f64],
    lambda_star: f64,
    alpha_star: f64,
    gamma: f64,
    alpha: f64,
) -> Result<ObjectiveValue> {
    check_mixing(lambda_star, alpha_star)?;
    check_alpha(alpha)?;
    let r = residuals(data, beta)?;
    let trim = trim_unchecked(r.as_slice(), alpha);
    let loss = trimmed_loss(r.as_slice(), &trim);
    let first = data.first_penalized();
    let lg = penalty_value(beta, 1.0, 0.0, gamma, first);
    let l2 = penalty_value(beta, 0.0, 1.0, gamma, first);
    let pen = lambda_star * ((1.0 - alpha_star) * lg + alpha_star * l2);
    Ok(ObjectiveValue::new(loss, pen, Some(trim)))
}

/// `(lambda1, lambda2) -> (lambda* = lambda1 + lambda2, alpha* = lambda2 / lambda*)`.
pub fn reparam_mixing(lambda1: f64, lambda2: f64) -> Result<(f64, f64)> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !(lambda1 + lambda2 > 0.0) || !(lambda1 + lambda2).is_finite() {
        return invalid(format!("mixing form needs lambda1, lambda2 >= 0 with a positive sum, got ({lambda1}, {lambda2})"));
    }
    let ls = lambda1 + lambda2;
    Ok((ls, lambda2 / ls))
}

fn check_mixing(lambda_star: f64, alpha_star: f64) -> Result<()> {
    if !(lambda_star > 0.0 && lambda_star.is_finite()) {
        return invalid(format!("lambda* must be positive, got {lambda_star}"));
    }
    if !(0.0..1.0).contains(&alpha_star) {
        return invalid(format!("alpha* must lie in [0, 1), got {alpha_star}"));
    }
    Ok(())
}

/// Inverse of [`reparam_mixing`].
pub fn mixing_to_direct(lambda_star: f64, alpha_star: f64) -> Result<(f64, f64)> {
    check_mixing(lambda_star, alpha_star)?;
    let l2 = lambda_star * alpha_star;
    Ok((lambda_star - l2, l2))
}

/// The elastic-net problem rewritten as a lasso-type problem on `n + p` rows.
#[derive(Debug, Clone)]
pub struct AugmentedProblem {
    pub data: Dataset,
    /// Row count of the original data; also the loss normalization.
    pub n_original: usize,
    /// `sqrt(1 + lambda2)`; `beta* = scale * beta`.
    pub scale: f64,
    pub lambda2: f64,
}

impl AugmentedProblem {
    /// `lambda1* = lambda1 / (1 + lambda2)^(gamma/2)`.
    pub fn lambda1_star(&self, lambda1: f64, gamma: f64) -> f64 {
        lambda1 / self.scale.powf(gamma)
    }

    pub fn to_star(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().map(|b| b * self.scale).collect()
    }

    pub fn from_star(&self, beta_star: &[f64]) -> Vec<f64> {
        beta_star.iter().map(|b| b / self.scale).collect()
    }

    /// Objective on the augmented rows: the original rows are depth trimmed
    /// from their own residuals while the appended rows always keep weight one.
    pub fn objective(&self, beta_star: &[f64], lambda1_star: f64, gamma: f64, alpha: f64) -> Result<ObjectiveValue> {
        check_alpha(alpha)?;
        let r = residuals(&self.data, beta_star)?;
        let r = r.as_slice();
        let n = self.n_original;
        let trim = trim_unchecked(&r[..n], alpha);
        let kept: f64 = trim.kept.iter().map(|&i| r[i] * r[i]).sum();
        let appended: f64 = r[n..].iter().map(|v| v * v).sum();
        let loss = (kept + appended) / n as f64;
        let pen = penalty_value(beta_star, lambda1_star, 0.0, gamma, 0);
        Ok(ObjectiveValue::new(loss, pen, Some(trim)))
    }
}

/// Stack `X` over `sqrt(n lambda2) I_p`, scale by `(1 + lambda2)^(-1/2)`, and
/// pad `y` with `p` zeros. With the `1/n` loss normalization the ridge block
/// must carry `sqrt(n lambda2)` for the objectives to coincide.
pub fn reparam_augment(data: &Dataset, lambda2: f64) -> Result<AugmentedProblem> {
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return invalid(format!("augmentation needs lambda2 > 0, got {lambda2}"));
    }
    if data.has_intercept() {
        return invalid("augmentation is defined for intercept-free data");
    }
    let (n, p) = (data.n(), data.p());
    let inv = 1.0 / (1.0 + lambda2).sqrt();
    let ridge = (n as f64 * lambda2).sqrt();
    let x = data.design();
    let xs = DMatrix::from_fn(n + p, p, |i, j| {
        if i < n {
            x[(i, j)] * inv
        } else if i - n == j {
            ridge * inv
        } else {
            0.0
        }
    });
    let ys = DVector::from_fn(n + p, |i, _| if i < n { data.y()[i] } else { 0.0 });
    Ok(AugmentedProblem {
        data: Dataset::new(xs, ys, false)?,
        n_original: n,
        scale: (1.0 + lambda2).sqrt(),
        lambda2,
    })
}

/// `max_j |2 y'x_j| / n` over penalized columns (centered when an intercept
/// is fitted).
pub fn lambda_max(data: &Dataset) -> f64 {
    let n = data.n() as f64;
    let x = data.design();
    let first = data.first_penalized();
    let y = data.y();
    let ybar = if data.has_intercept() { y.mean() } else { 0.0 };
    (first..data.n_coef())
        .map(|j| {
            let col = x.column(j);
            let xbar = if data.has_intercept() { col.mean() } else { 0.0 };
            let dot: f64 = col.iter().zip(y.iter()).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
            (2.0 * dot).abs() / n
        })
        .fold(0.0, f64::max)
}
