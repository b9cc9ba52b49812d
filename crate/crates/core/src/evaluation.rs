//! Performance metrics, theoretical breakdown points, the adversarial
//! breakdown probe, equivariance checks and the prediction-bound checker.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::estimators::{fit_ls, fit_ridge, FitResult};
use crate::objectives::{lst_enet_objective, lst_objective, PenaltySpec};
use crate::stats::trim_unchecked;

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(())
}

/// Squared Euclidean distance `||b0 - b||^2`.
pub fn l2_error(beta0: &[f64], beta: &[f64]) -> Result<f64> {
    check_len(beta0, beta)?;
    Ok(beta0.iter().zip(beta).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Share of the true zeros that the estimate also sets to zero. A coordinate
/// counts as zero when `|b| <= threshold` (default 0, exact zeros).
pub fn tsdr_with(beta0: &[f64], beta: &[f64], threshold: f64) -> Result<f64> {
    check_len(beta0, beta)?;
    let zeros: Vec<usize> = (0..beta0.len()).filter(|&i| beta0[i] == 0.0).collect();
    if zeros.is_empty() {
        return Err(Error::UndefinedMetric("true coefficients have no zero coordinate".into()));
    }
    let hit = zeros.iter().filter(|&&i| beta[i].abs() <= threshold).count();
    Ok(hit as f64 / zeros.len() as f64)
}

/// Share of the true non-zeros that the estimate wrongly sets to zero.
pub fn fsdr_with(beta0: &[f64], beta: &[f64], threshold: f64) -> Result<f64> {
    check_len(beta0, beta)?;
    let nz: Vec<usize> = (0..beta0.len()).filter(|&i| beta0[i] != 0.0).collect();
    if nz.is_empty() {
        return Err(Error::UndefinedMetric("true coefficients are all zero".into()));
    }
    let miss = nz.iter().filter(|&&i| beta[i].abs() <= threshold).count();
    Ok(miss as f64 / nz.len() as f64)
}

pub fn tsdr(beta0: &[f64], beta: &[f64]) -> Result<f64> {
    tsdr_with(beta0, beta, 0.0)
}

pub fn fsdr(beta0: &[f64], beta: &[f64]) -> Result<f64> {
    fsdr_with(beta0, beta, 0.0)
}

/// Root mean squared prediction error on `test`.
pub fn rmse(test: &Dataset, beta: &[f64]) -> Result<f64> {
    test.check_beta(beta)?;
    let r = test.residuals_unchecked(beta);
    Ok((r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt())
}

/// `(1/R) sum ||b_i - mean||^2` across replicated estimates.
pub fn emse(estimates: &[Vec<f64>]) -> Result<f64> {
    let r = estimates.len();
    if r < 2 {
        return invalid(format!("EMSE needs at least 2 estimates, got {r}"));
    }
    let p = estimates[0].len();
    if let Some(e) = estimates.iter().find(|e| e.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, got: e.len() });
    }
    let mean: Vec<f64> = (0..p).map(|j| estimates.iter().map(|e| e[j]).sum::<f64>() / r as f64).collect();
    let total: f64 = estimates.iter().map(|e| e.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>()).sum();
    Ok(total / r as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub l2_error: f64,
    pub tsdr: Option<f64>,
    pub fsdr: Option<f64>,
    pub rmse: Option<f64>,
}

/// All metrics for one estimate; penalized coefficients are compared with
/// `beta0` and the intercept, if any, is left out of the sparsity rates.
pub fn metric_set(beta0: &[f64], beta: &[f64], test: Option<&Dataset>) -> Result<MetricSet> {
    Ok(MetricSet {
        l2_error: l2_error(beta0, beta)?,
        tsdr: tsdr(beta0, beta).ok(),
        fsdr: fsdr(beta0, beta).ok(),
        rmse: test.map(|t| rmse(t, beta)).transpose()?,
    })
}

/// An unreduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbpKind {
    Lst,
    Penalized,
}

/// Replacement breakdown point formulas. LST (points in general position):
/// `floor((n+1)/2)/n` for `p = 1`, `(floor(n/2) - p + 2)/n` otherwise.
/// Penalized trimmed estimators: `(n - k + 1)/n` with `k` kept points.
pub fn theoretical_rbp(n: u64, p: u64, kind: RbpKind, k: Option<u64>) -> Result<Fraction> {
    match kind {
        RbpKind::Lst => {
            if p == 0 || n <= p {
                return invalid(format!("LST breakdown needs n > p >= 1, got n={n}, p={p}"));
            }
            let num = if p == 1 { n.div_ceil(2) } else { (n / 2 + 2).saturating_sub(p) };
            Ok(Fraction { num, den: n })
        }
        RbpKind::Penalized => {
            let k = k.ok_or_else(|| Error::InvalidArgument("penalized breakdown needs k".into()))?;
            if k < n.div_ceil(2) || k > n || n == 0 {
                return invalid(format!("k must lie in [ceil(n/2), n], got k={k}, n={n}"));
            }
            Ok(Fraction { num: n - k + 1, den: n })
        }
    }
}

/// Per-decade growth factor a broken fit must sustain. Linear blow-up meets
/// the nominal factor 10 only in the limit, from below, hence 1% slack.
pub const BROKEN_GROWTH: f64 = 9.9;
/// A fit is bounded when every norm stays within this multiple of the clean norm.
pub const BOUNDED_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Broken,
    BrokenByFailure,
    Bounded,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Broken => "broken",
            Verdict::BrokenByFailure => "broken-by-failure",
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownTrace {
    pub m: usize,
    pub deltas: Vec<f64>,
    /// `None` where the estimator failed.
    pub norms: Vec<Option<f64>>,
    pub clean_norm: f64,
    /// Per-decade growth between consecutive deltas among the last three.
    pub growth: Vec<f64>,
    pub verdict: Verdict,
    pub failures: Vec<String>,
}

/// Replace rows `0..m` by the point `((delta, 0, ..., 0), delta^2)`.
pub fn adversarial_data(data: &Dataset, m: usize, delta: f64) -> Result<Dataset> {
    if m > data.n() {
        return invalid(format!("cannot replace {m} of {} rows", data.n()));
    }
    let mut out = data.clone();
    let mut x = vec![0.0; data.p()];
    x[0] = delta;
    for i in 0..m {
        out.replace_row(i, &x, delta * delta)?;
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Refit under growing adversarial contamination and classify the norm trace.
pub fn breakdown_probe<F>(data: &Dataset, estimator: F, m: usize, deltas: &[f64]) -> Result<BreakdownTrace>
where
    F: Fn(&Dataset) -> Result<FitResult>,
{
    if deltas.is_empty() || deltas.windows(2).any(|w| !(w[1] > w[0])) || deltas.iter().any(|d| !(*d > 0.0)) {
        return invalid("deltas must be positive and strictly increasing");
    }
    if m > data.n() {
        return invalid(format!("m = {m} exceeds n = {}", data.n()));
    }
    let clean = estimator(data)?;
    let clean_norm = norm(&clean.beta);
    let mut norms = Vec::with_capacity(deltas.len());
    let mut failures = Vec::new();
    for &d in deltas {
        if m == 0 {
            norms.push(Some(clean_norm));
            continue;
        }
        match adversarial_data(data, m, d).and_then(|z| estimator(&z)) {
            Ok(f) if f.beta.iter().all(|b| b.is_finite()) => norms.push(Some(norm(&f.beta))),
            Ok(_) => {
                failures.push(format!("delta {d:e}: non-finite estimate"));
                norms.push(None);
            }
            Err(e) => {
                failures.push(format!("delta {d:e}: {e}"));
                norms.push(None);
            }
        }
    }
    let tail = deltas.len().saturating_sub(3);
    let mut growth = Vec::new();
    for i in tail..deltas.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (norms[i], norms[i + 1]) {
            let decades = (deltas[i + 1] / deltas[i]).log10();
            growth.push(if a > 0.0 { (b / a).powf(1.0 / decades) } else { f64::INFINITY });
        }
    }
    let verdict = if norms.iter().any(Option::is_none) {
        Verdict::BrokenByFailure
    } else if deltas.len() >= 3 && growth.len() == 2 && growth.iter().all(|g| *g >= BROKEN_GROWTH) {
        Verdict::Broken
    } else if norms.iter().flatten().all(|v| *v <= BOUNDED_FACTOR * clean_norm) {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(BreakdownTrace { m, deltas: deltas.to_vec(), norms, clean_norm, growth, verdict, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    /// `y -> y + X b`, `beta -> beta + b`.
    Regression(Vec<f64>),
    /// `y -> s y`, `beta -> s beta`.
    Scale(f64),
    /// `X -> X A`, `beta -> A^{-1} beta`; row-major square matrix.
    Affine(Vec<f64>),
}

/// The estimator whose equivariance is checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EquivarianceTarget {
    Ls,
    Ridge { lambda: f64 },
    Lst { alpha: f64 },
    /// Penalized trimmed objective with `lambda1 = 0`.
    LstEnet { lambda2: f64, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    /// Largest discrepancy of the objective-level identity over the probes.
    pub objective_error: Option<f64>,
    /// Discrepancy of the estimate-level identity for closed-form estimators.
    pub estimate_error: Option<f64>,
    pub holds: bool,
}

fn transform_data(data: &Dataset, t: &Transform) -> Result<(Dataset, DMatrix<f64>)> {
    let x = data.x();
    let p = x.ncols();
    match t {
        Transform::Regression(b) => {
            if b.len() != data.n_coef() {
                return Err(Error::DimensionMismatch { expected: data.n_coef(), got: b.len() });
            }
            let y = data.y() + data.design() * DVector::from_column_slice(b);
            Ok((data.with_response(y)?, DMatrix::identity(p, p)))
        }
        Transform::Scale(s) => {
            if !(*s != 0.0 && s.is_finite()) {
                return invalid("scale factor must be finite and non-zero");
            }
            Ok((data.with_response(data.y() * *s)?, DMatrix::identity(p, p)))
        }
        Transform::Affine(a) => {
            if data.has_intercept() {
                return invalid("affine check expects intercept-free data");
            }
            if a.len() != p * p {
                return Err(Error::DimensionMismatch { expected: p * p, got: a.len() });
            }
            let a = DMatrix::from_row_slice(p, p, a);
            Ok((Dataset::new(x * &a, data.y().clone(), false)?, a))
        }
    }
}

fn map_beta(beta: &[f64], t: &Transform, a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(match t {
        Transform::Regression(b) => beta.iter().zip(b).map(|(x, y)| x + y).collect(),
        Transform::Scale(s) => beta.iter().map(|x| x * s).collect(),
        Transform::Affine(_) => {
            let inv = a.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("affine matrix is singular".into()))?;
            (inv * DVector::from_column_slice(beta)).iter().copied().collect()
        }
    })
}

fn target_objective(target: &EquivarianceTarget, data: &Dataset, beta: &[f64]) -> Result<f64> {
    Ok(match *target {
        EquivarianceTarget::Ls => fit_free_ssr(data, beta)?,
        EquivarianceTarget::Ridge { lambda } => crate::estimators::ridge_objective(data, beta, lambda)?.total,
        EquivarianceTarget::Lst { alpha } => lst_objective(data, beta, alpha)?.total,
        EquivarianceTarget::LstEnet { lambda2, alpha } => {
            lst_enet_objective(data, beta, &PenaltySpec { lambda2, alpha, ..Default::default() })?.total
        }
    })
}

fn fit_free_ssr(data: &Dataset, beta: &[f64]) -> Result<f64> {
    data.check_beta(beta)?;
    Ok(data.residuals_unchecked(beta).iter().map(|v| v * v).sum())
}

/// Check the objective-level identity `Q(T z, T b) = c Q(z, b)` at each probe
/// coefficient vector (`c = s^2` for scale, 1 otherwise), and for LS and
/// ridge also the estimate-level identity `fit(T z) = T fit(z)`.
pub fn equivariance_check(
    target: &EquivarianceTarget,
    data: &Dataset,
    transform: &Transform,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<EquivarianceReport> {
    let (tdata, a) = transform_data(data, transform)?;
    let factor = match transform {
        Transform::Scale(s) => s * s,
        _ => 1.0,
    };
    let mut obj_err: Option<f64> = None;
    for b in probes {
        let q = target_objective(target, data, b)?;
        let qt = target_objective(target, &tdata, &map_beta(b, transform, &a)?)?;
        let err = (qt - factor * q).abs() / (1.0 + (factor * q).abs());
        obj_err = Some(obj_err.map_or(err, |e: f64| e.max(err)));
    }
    let estimate_err = match target {
        EquivarianceTarget::Ls | EquivarianceTarget::Ridge { .. } => {
            let fit = |d: &Dataset| match *target {
                EquivarianceTarget::Ridge { lambda } => fit_ridge(d, lambda),
                _ => fit_ls(d),
            };
            let b = fit(data)?.beta;
            let bt = fit(&tdata)?.beta;
            let expect = map_beta(&b, transform, &a)?;
            Some(bt.iter().zip(&expect).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        }
        _ => None,
    };
    let holds = obj_err.is_none_or(|e| e <= tol) && estimate_err.is_none_or(|e| e <= tol);
    Ok(EquivarianceReport { objective_error: obj_err, estimate_error: estimate_err, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub q1: f64,
    pub q2: f64,
    pub n_d: usize,
    pub c_x: f64,
    pub delta: f64,
    pub sigma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda1_at_least_q1: bool,
    pub rhs: f64,
    /// Variant with `2 sigma^2 q2 / n` in place of `(sigma/n)(q2 + N_d)`.
    pub rhs_alt: f64,
    pub holds: bool,
}

/// `(4 c_x sigma / n)(2 sqrt(p) + sqrt(2 log(2/delta)))`.
pub fn q1(c_x: f64, sigma: f64, n: usize, p: usize, delta: f64) -> f64 {
    4.0 * c_x * sigma / n as f64 * (2.0 * (p as f64).sqrt() + (2.0 * (2.0 / delta).ln()).sqrt())
}

/// `2 sqrt(log(2/delta)) (sqrt(|I|) + sqrt(log(2/delta)))`.
pub fn q2(kept: usize, delta: f64) -> f64 {
    let l = (2.0 / delta).ln();
    2.0 * l.sqrt() * ((kept as f64).sqrt() + l.sqrt())
}

/// Largest column norm of the raw predictors.
pub fn max_column_norm(data: &Dataset) -> f64 {
    let x = data.x();
    x.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Evaluate the finite-sample prediction bound for a fitted estimate.
pub fn bound_check(data: &Dataset, beta0: &[f64], fit: &FitResult, delta: f64, sigma: f64) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    data.check_beta(beta0)?;
    data.check_beta(&fit.beta)?;
    let pen = fit.selected_penalty.unwrap_or_default();
    let n = data.n();
    let p = data.p();
    let c_x = max_column_norm(data);
    let q1v = q1(c_x, sigma, n, p, delta);

    let kept0 = trim_unchecked(&data.residuals_unchecked(beta0), pen.alpha).weights;
    let kept_hat = trim_unchecked(&data.residuals_unchecked(&fit.beta), pen.alpha).weights;
    let i0 = kept0.iter().filter(|&&w| w).count();
    let both = kept0.iter().zip(&kept_hat).filter(|(a, b)| **a && **b).count();
    let n_d = i0 - both;
    let q2v = q2(i0, delta);

    let diff: Vec<f64> = fit.beta.iter().zip(beta0).map(|(a, b)| a - b).collect();
    let fitted = data.design() * DVector::from_column_slice(&diff);
    let lhs = (0..n).filter(|&i| kept_hat[i]).map(|i| fitted[i] * fitted[i]).sum::<f64>() / n as f64;

    let first = data.first_penalized();
    let b0n = norm(&beta0[first..]);
    let base = 2.0 * pen.lambda1 * (p as f64).sqrt() * b0n + pen.lambda2 * b0n * b0n;
    let rhs = base + sigma / n as f64 * (q2v + n_d as f64);
    let rhs_alt = base + 2.0 * sigma * sigma * q2v / n as f64;
    Ok(BoundReport {
        lhs,
        q1: q1v,
        q2: q2v,
        n_d,
        c_x,
        delta,
        sigma,
        lambda1: pen.lambda1,
        lambda2: pen.lambda2,
        lambda1_at_least_q1: pen.lambda1 >= q1v,
        rhs,
        rhs_alt,
        holds: lhs <= rhs,
    })
}
