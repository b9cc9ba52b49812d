//! Robust univariate statistics: median, MAD, outlyingness and the
//! depth-based trimming weights built on them.
//!
//! Medians use selection (`select_nth_unstable_by`), not a full sort. The
//! MAD is the raw median of absolute deviations, without any normal
//! consistency factor. When the MAD collapses (a majority of identical
//! values, or floating-point collapse below [`DEGENERATE_MAD`]) the scale is
//! pinned to one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// MAD values below this are treated as the "majority identical" case.
pub const DEGENERATE_MAD: f64 = 1e-12;

/// A non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_sample(&values)?;
        Ok(RealVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for RealVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_sample(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return invalid("empty sample");
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return invalid(format!("non-finite value at index {i}"));
    }
    Ok(())
}

/// Median of a scratch buffer, reordering it. Even lengths average the two
/// middle order statistics.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + upper)
    }
}

pub fn median(v: &[f64]) -> Result<f64> {
    check_sample(v)?;
    let mut buf = v.to_vec();
    Ok(median_in_place(&mut buf))
}

pub fn mad(v: &[f64]) -> Result<f64> {
    check_sample(v)?;
    Ok(center_and_mad(v).1)
}

fn center_and_mad(v: &[f64]) -> (f64, f64) {
    let mut buf = v.to_vec();
    let center = median_in_place(&mut buf);
    for (b, x) in buf.iter_mut().zip(v) {
        *b = (x - center).abs();
    }
    (center, median_in_place(&mut buf))
}

/// Center and scale used by the outlyingness function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustScale {
    pub center: f64,
    /// MAD, or 1 under the degenerate rule.
    pub scale: f64,
    pub degenerate: bool,
}

impl RobustScale {
    pub fn of(sample: &[f64]) -> Result<Self> {
        check_sample(sample)?;
        Ok(Self::of_unchecked(sample))
    }

    pub(crate) fn of_unchecked(sample: &[f64]) -> Self {
        let (center, raw) = center_and_mad(sample);
        if raw < DEGENERATE_MAD {
            RobustScale { center, scale: 1.0, degenerate: true }
        } else {
            RobustScale { center, scale: raw, degenerate: false }
        }
    }

    #[inline]
    pub fn outlyingness(&self, x: f64) -> f64 {
        (x - self.center).abs() / self.scale
    }
}

/// `|x - Med(sample)| / MAD(sample)`, with the degenerate-scale rule.
pub fn outlyingness(x: f64, sample: &[f64]) -> Result<f64> {
    if !x.is_finite() {
        return invalid("non-finite point");
    }
    Ok(RobustScale::of(sample)?.outlyingness(x))
}

/// Result of depth trimming a residual vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimState {
    pub weights: Vec<bool>,
    /// Sorted indices with weight one.
    pub kept: Vec<usize>,
    pub k: usize,
    pub center: f64,
    pub scale: f64,
    pub degenerate: bool,
}

impl TrimState {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Weights as 0/1 reals, i.e. the diagonal of D(β).
    pub fn diagonal(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| if w { 1.0 } else { 0.0 }).collect()
    }
}

/// Keep residuals whose outlyingness is at most `alpha`.
pub fn trim_weights(residuals: &[f64], alpha: f64) -> Result<TrimState> {
    check_alpha(alpha)?;
    check_sample(residuals)?;
    Ok(trim_unchecked(residuals, alpha))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return invalid(format!("trimming level alpha must be a finite value >= 1, got {alpha}"));
    }
    Ok(())
}

pub(crate) fn trim_unchecked(residuals: &[f64], alpha: f64) -> TrimState {
    let rs = RobustScale::of_unchecked(residuals);
    let weights: Vec<bool> = residuals.iter().map(|&r| rs.outlyingness(r) <= alpha).collect();
    let kept: Vec<usize> = weights.iter().enumerate().filter(|(_, &w)| w).map(|(i, _)| i).collect();
    TrimState {
        k: kept.len(),
        weights,
        kept,
        center: rs.center,
        scale: rs.scale,
        degenerate: rs.degenerate,
    }
}

/// Quantile with linear interpolation between order statistics (type 7).
pub fn quantile(v: &[f64], q: f64) -> Result<f64> {
    check_sample(v)?;
    if !(0.0..=1.0).contains(&q) {
        return invalid(format!("quantile level {q} outside [0, 1]"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}
