//! Synthetic designs, contamination schemes and batch experiments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::data_io::train_test_split_rows;
use crate::error::{invalid, Error, Result};
use crate::estimators::{fit_lst_enet, fit_method, AaConfig, Method, MethodOptions};
use crate::evaluation::{bound_check, emse, max_column_norm, metric_set, q1, BoundReport};
use crate::model_selection::CvGrid;
use crate::objectives::reparam_mixing;
use crate::seed::{self, Rng, STREAM_METHOD, STREAM_SIM, STREAM_SPLIT};
use crate::stats::{median, quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Design {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    I,
    II,
}

fn parse_roman(s: &str) -> Option<bool> {
    match s {
        "I" | "i" | "1" => Some(true),
        "II" | "ii" | "2" => Some(false),
        _ => None,
    }
}

impl FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_roman(s)
            .map(|one| if one { Design::I } else { Design::II })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown design '{s}' (expected I or II)")))
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_roman(s)
            .map(|one| if one { Scheme::I } else { Scheme::II })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}' (expected I or II)")))
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == Design::I { "I" } else { "II" })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == Scheme::I { "I" } else { "II" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub design: Design,
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub eps: f64,
    pub scheme: Scheme,
    pub replications: usize,
    pub seed: u64,
    /// Design I covariance `sigma^2 I` instead of `sigma I`.
    pub sigma_squared_cov: bool,
    /// Draw the test split from uncontaminated rows only.
    pub clean_test: bool,
    pub split_ratio: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            design: Design::I,
            n: 100,
            p: 50,
            sigma: 0.5,
            rho1: 0.95,
            rho2: 0.05,
            eps: 0.0,
            scheme: Scheme::I,
            replications: 20,
            seed: 0,
            sigma_squared_cov: false,
            clean_test: false,
            split_ratio: 0.7,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid(format!("n must be >= 2, got {}", self.n));
        }
        if self.p < 1 {
            return invalid("p must be >= 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {}", self.sigma));
        }
        check_eps(self.eps)?;
        if !(self.rho1.abs() < 1.0 && self.rho2.abs() < 1.0) {
            return invalid("correlations must lie in (-1, 1)");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return invalid(format!("split ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        if self.replications == 0 {
            return invalid("replications must be >= 1");
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return invalid(format!("contamination level must be >= 0, got {eps}"));
    }
    if eps >= 0.5 {
        return invalid(format!("contamination level must be below 0.5, got {eps}"));
    }
    Ok(())
}

/// Number of leading ones in the true coefficients, `ceil(6% of p)`.
pub fn leading_ones(p: usize) -> usize {
    (6 * p + 99) / 100
}

pub fn true_beta(p: usize) -> Vec<f64> {
    let p1 = leading_ones(p);
    (0..p).map(|j| if j < p1 { 1.0 } else { 0.0 }).collect()
}

/// Contaminated-row count `floor(eps n)`.
pub fn contaminated_count(n: usize, eps: f64) -> usize {
    (eps * n as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub data: Dataset,
    pub beta0: Vec<f64>,
    pub contaminated_rows: Vec<usize>,
    pub e: Vec<f64>,
    pub sigma: f64,
}

fn design_cov(spec: &SimulationSpec) -> DMatrix<f64> {
    let p = spec.p;
    let p1 = leading_ones(p);
    DMatrix::from_fn(p, p, |i, j| {
        let d = i.abs_diff(j) as i32;
        if i < p1 && j < p1 {
            spec.rho1.powi(d)
        } else if i >= p1 && j >= p1 {
            spec.rho2.powi(d)
        } else {
            0.0
        }
    })
}

/// Draw `X`, the noise and `y = X b0 + sigma e`.
pub fn gen_design(spec: &SimulationSpec, rng: &mut Rng) -> Result<GeneratedInstance> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = match spec.design {
        Design::I => {
            let var = if spec.sigma_squared_cov { spec.sigma * spec.sigma } else { spec.sigma };
            z * var.sqrt()
        }
        Design::II => {
            let chol = design_cov(spec)
                .cholesky()
                .ok_or_else(|| Error::InvalidArgument("design covariance is not positive definite".into()))?;
            z * chol.l().transpose()
        }
    };
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let beta0 = true_beta(p);
    let y = response(&x, &beta0, &e, spec.sigma);
    Ok(GeneratedInstance { data: Dataset::new(x, y, false)?, beta0, contaminated_rows: Vec::new(), e, sigma: spec.sigma })
}

fn response(x: &DMatrix<f64>, beta0: &[f64], e: &[f64], sigma: f64) -> DVector<f64> {
    let fit = x * DVector::from_column_slice(beta0);
    DVector::from_fn(x.nrows(), |i, _| fit[i] + sigma * e[i])
}

/// Contaminate `floor(eps n)` random rows. Both schemes shift the noise by 20
/// and recompute `y`; scheme I then shifts the predictors by 20, scheme II
/// replaces them by `(1e4, 0, ..., 0)` and the response by `1e10`.
pub fn contaminate(inst: &GeneratedInstance, scheme: Scheme, eps: f64, rng: &mut Rng) -> Result<GeneratedInstance> {
    check_eps(eps)?;
    let n = inst.data.n();
    let m = contaminated_count(n, eps);
    if m == 0 {
        return Ok(inst.clone());
    }
    let mut rows = sample(rng, n, m).into_vec();
    rows.sort_unstable();
    let mut e = inst.e.clone();
    for &i in &rows {
        e[i] += 20.0;
    }
    let mut x = inst.data.x();
    let mut y = response(&x, &inst.beta0, &e, inst.sigma);
    for &i in &rows {
        match scheme {
            Scheme::I => x.row_mut(i).add_scalar_mut(20.0),
            Scheme::II => {
                x.row_mut(i).fill(0.0);
                x[(i, 0)] = 1e4;
                y[i] = 1e10;
            }
        }
    }
    Ok(GeneratedInstance { data: Dataset::new(x, y, false)?, beta0: inst.beta0.clone(), contaminated_rows: rows, e, sigma: inst.sigma })
}

/// One cell of the long-format result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub replication: usize,
    pub method: Method,
    pub metric: String,
    pub value: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub spec: SimulationSpec,
    pub methods: Vec<Method>,
    pub rows: Vec<ExperimentRow>,
    /// Estimates per method, indexed by replication (`None` on failure).
    pub estimates: BTreeMap<Method, Vec<Option<Vec<f64>>>>,
}

pub const METRICS: [&str; 4] = ["l2_error", "tsdr", "fsdr", "rmse"];

impl ExperimentTable {
    pub fn values(&self, method: Method, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.metric == metric)
            .filter_map(|r| r.value)
            .collect()
    }

    pub fn summary(&self, method: Method, metric: &str) -> MetricSummary {
        let v = self.values(method, metric);
        MetricSummary {
            median: median(&v).ok(),
            q1: quantile(&v, 0.25).ok(),
            q3: quantile(&v, 0.75).ok(),
            count: v.len(),
        }
    }

    /// EMSE over the replications where the method succeeded.
    pub fn emse(&self, method: Method) -> Option<f64> {
        let ok: Vec<Vec<f64>> = self.estimates.get(&method)?.iter().flatten().cloned().collect();
        emse(&ok).ok()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["replication", "method", "metric", "value", "reason"])?;
        for r in &self.rows {
            w.write_record([
                r.replication.to_string(),
                r.method.to_string(),
                r.metric.clone(),
                r.value.map(|v| v.to_string()).unwrap_or_default(),
                r.reason.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-method options for one replication: the method seed is derived from
/// the experiment seed so replications draw independent candidates.
fn method_options(base: &MethodOptions, seed: u64, rep: usize, method: Method) -> MethodOptions {
    let mut o = base.clone();
    o.config.seed = seed::derive(seed, &[STREAM_METHOD, rep as u64, method as u64]);
    o
}

/// Generate, contaminate, split, fit every method and score it.
pub fn run_replication(spec: &SimulationSpec, methods: &[Method], base: &MethodOptions, rep: usize) -> Result<(Vec<ExperimentRow>, Vec<(Method, Option<Vec<f64>>)>)> {
    let mut rng = seed::rng_for(spec.seed, &[STREAM_SIM, rep as u64]);
    let clean = gen_design(spec, &mut rng)?;
    let inst = contaminate(&clean, spec.scheme, spec.eps, &mut rng)?;
    let mut srng = seed::rng_for(spec.seed, &[STREAM_SPLIT, rep as u64]);
    let eligible: Option<Vec<usize>> = spec
        .clean_test
        .then(|| (0..spec.n).filter(|i| !inst.contaminated_rows.contains(i)).collect());
    let (train_rows, test_rows) = train_test_split_rows(spec.n, spec.split_ratio, eligible.as_deref(), &mut srng)?;
    let train = inst.data.subset_rows(&train_rows);
    let test = inst.data.subset_rows(&test_rows);
    let mut rows = Vec::new();
    let mut est = Vec::new();
    for &m in methods {
        let opts = method_options(base, spec.seed, rep, m);
        match fit_method(&train, m, &opts).and_then(|f| Ok((metric_set(&inst.beta0, &f.beta, Some(&test))?, f))) {
            Ok((ms, f)) => {
                let vals = [Some(ms.l2_error), ms.tsdr, ms.fsdr, ms.rmse];
                for (name, v) in METRICS.iter().zip(vals) {
                    rows.push(ExperimentRow {
                        replication: rep,
                        method: m,
                        metric: name.to_string(),
                        value: v,
                        reason: v.is_none().then(|| "undefined".to_string()),
                    });
                }
                est.push((m, Some(f.beta)));
            }
            Err(e) => {
                log::warn!("replication {rep}, {m}: {e}");
                for name in METRICS {
                    rows.push(ExperimentRow {
                        replication: rep,
                        method: m,
                        metric: name.to_string(),
                        value: None,
                        reason: Some(format!("{}: {e}", e.kind())),
                    });
                }
                est.push((m, None));
            }
        }
    }
    Ok((rows, est))
}

pub fn run_experiment(spec: &SimulationSpec, methods: &[Method], base: &MethodOptions) -> Result<ExperimentTable> {
    spec.validate()?;
    if methods.is_empty() {
        return invalid("no methods given");
    }
    let per: Vec<Result<_>> =
        (0..spec.replications).into_par_iter().map(|r| run_replication(spec, methods, base, r)).collect();
    let mut rows = Vec::new();
    let mut estimates: BTreeMap<Method, Vec<Option<Vec<f64>>>> = BTreeMap::new();
    for res in per {
        let (r, est) = res?;
        rows.extend(r);
        for (m, b) in est {
            estimates.entry(m).or_default().push(b);
        }
    }
    Ok(ExperimentTable { spec: spec.clone(), methods: methods.to_vec(), rows, estimates })
}

/// Per-method EMSE with every method fitted on the whole contaminated
/// sample of each replication, without a train/test split.
pub fn full_sample_emse(spec: &SimulationSpec, methods: &[Method], base: &MethodOptions) -> Result<BTreeMap<Method, Option<f64>>> {
    spec.validate()?;
    let per: Vec<Result<Vec<Option<Vec<f64>>>>> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::rng_for(spec.seed, &[STREAM_SIM, rep as u64]);
            let clean = gen_design(spec, &mut rng)?;
            let inst = contaminate(&clean, spec.scheme, spec.eps, &mut rng)?;
            Ok(methods
                .iter()
                .map(|&m| match fit_method(&inst.data, m, &method_options(base, spec.seed, rep, m)) {
                    Ok(f) => Some(f.beta),
                    Err(e) => {
                        log::warn!("replication {rep}, {m}: {e}");
                        None
                    }
                })
                .collect())
        })
        .collect();
    let mut by_method: Vec<Vec<Vec<f64>>> = vec![Vec::new(); methods.len()];
    for res in per {
        for (slot, b) in by_method.iter_mut().zip(res?) {
            slot.extend(b);
        }
    }
    Ok(methods.iter().zip(by_method).map(|(&m, est)| (m, emse(&est).ok())).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStudy {
    pub replications: usize,
    pub holds: usize,
    pub coverage: f64,
    pub delta: f64,
    pub lambda1_factor: f64,
    pub lambda2: f64,
    pub reports: Vec<BoundReport>,
}

/// Fit lst-enet with `lambda1 = factor * q1` on each replication and check
/// the prediction bound.
pub fn bound_study(spec: &SimulationSpec, delta: f64, lambda1_factor: f64, lambda2: f64, config: &AaConfig) -> Result<BoundStudy> {
    spec.validate()?;
    if !(lambda1_factor > 0.0 && lambda1_factor.is_finite()) {
        return invalid(format!("lambda1 factor must be positive, got {lambda1_factor}"));
    }
    if !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return invalid(format!("lambda2 must be finite and >= 0, got {lambda2}"));
    }
    let reports = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::rng_for(spec.seed, &[STREAM_SIM, rep as u64]);
            let clean = gen_design(spec, &mut rng)?;
            let inst = contaminate(&clean, spec.scheme, spec.eps, &mut rng)?;
            let l1 = lambda1_factor * q1(max_column_norm(&inst.data), spec.sigma, spec.n, spec.p, delta);
            let (lambda_star, alpha_star) = reparam_mixing(l1, lambda2)?;
            let cfg = AaConfig { seed: seed::derive(spec.seed, &[STREAM_METHOD, rep as u64, Method::LstEnet as u64]), ..config.clone() };
            let fit = fit_lst_enet(&inst.data, &cfg, &CvGrid::fixed(lambda_star, alpha_star))?;
            bound_check(&inst.data, &inst.beta0, &fit, delta, spec.sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = reports.iter().filter(|r| r.holds).count();
    Ok(BoundStudy {
        replications: reports.len(),
        holds,
        coverage: holds as f64 / reports.len() as f64,
        delta,
        lambda1_factor,
        lambda2,
        reports,
    })
}
