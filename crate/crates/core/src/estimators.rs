//! Fitting procedures: LST by candidate generation and concentration,
//! LST-enet by per-candidate cross-validation and trimmed elastic-net solves,
//! and the classical baselines (LS, ridge, LTS, lasso, LARS, elastic net).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::{least_squares, least_squares_or_ridge, ridge_solve, row_rank};
use crate::model_selection::{cv_select_on, CvGrid, CvProblem, CvReport};
use crate::objectives::{
    check_h, lst_enet_objective, lts_from_residuals, penalty_value, reparam_mixing, ObjectiveValue, PenaltySpec,
};
use crate::seed::{self, STREAM_CANDIDATES, STREAM_CV, STREAM_LTS};
use crate::solvers::{enet_gram, kkt_check, shooting_gram, GramSystem, LarsMode};
use crate::stats::{check_alpha, trim_unchecked, TrimState};

/// Redraws allowed for a rank-deficient subset before the ridge fallback.
const SUBSET_RETRIES: usize = 5;
/// Upper bound on LTS concentration steps per start.
const LTS_MAX_CSTEPS: usize = 100;
const SHOOTING_TOL: f64 = 1e-10;
const SHOOTING_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ls,
    Ridge,
    Lts,
    Lasso,
    Lars,
    Enet,
    Lst,
    LstEnet,
}

impl Method {
    pub const ALL: [Method; 8] =
        [Method::Ls, Method::Ridge, Method::Lts, Method::Lasso, Method::Lars, Method::Enet, Method::Lst, Method::LstEnet];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Ridge => "ridge",
            Method::Lts => "lts",
            Method::Lasso => "lasso",
            Method::Lars => "lars",
            Method::Enet => "enet",
            Method::Lst => "lst",
            Method::LstEnet => "lst-enet",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Settings for the randomized trimmed estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaConfig {
    pub outer_repeats: usize,
    /// Defaults to the coefficient count; smaller values are raised to it.
    pub candidates_per_repeat: Option<usize>,
    pub concentration_iters: usize,
    pub lars_step_cap: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for AaConfig {
    fn default() -> Self {
        AaConfig {
            outer_repeats: 50,
            candidates_per_repeat: None,
            concentration_iters: 10,
            lars_step_cap: 900,
            alpha: 1.0,
            gamma: 1.0,
            seed: 0,
        }
    }
}

impl AaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_repeats == 0 {
            return invalid("outer_repeats must be >= 1");
        }
        if self.candidates_per_repeat == Some(0) {
            return invalid("candidates_per_repeat must be >= 1");
        }
        check_alpha(self.alpha)?;
        if self.gamma != 1.0 && self.gamma != 2.0 {
            return invalid(format!("the solvers handle gamma = 1 or 2, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn candidates_for(&self, data: &Dataset) -> usize {
        self.candidates_per_repeat.unwrap_or(0).max(data.n_coef())
    }
}

/// Where the winning coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub repeat: usize,
    pub candidate: usize,
    /// Produced by the trimmed elastic-net solve rather than the raw candidate.
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub beta: Vec<f64>,
    pub objective: ObjectiveValue,
    pub trim: Option<TrimState>,
    pub seed: u64,
    pub candidates_evaluated: usize,
    pub selected_penalty: Option<PenaltySpec>,
    pub provenance: Option<Provenance>,
    pub warnings: Vec<String>,
}

impl FitResult {
    fn plain(method: Method, beta: Vec<f64>, objective: ObjectiveValue) -> Self {
        FitResult {
            method,
            beta,
            objective,
            trim: None,
            seed: 0,
            candidates_evaluated: 1,
            selected_penalty: None,
            provenance: None,
            warnings: Vec::new(),
        }
    }
}

/// `(1/n) SSR + l1 |b|_1 + l2 |b|^2` without trimming.
pub fn enet_objective(data: &Dataset, beta: &[f64], lambda1: f64, lambda2: f64) -> Result<ObjectiveValue> {
    data.check_beta(beta)?;
    let r = data.residuals_unchecked(beta);
    let loss = r.iter().map(|v| v * v).sum::<f64>() / data.n() as f64;
    let pen = penalty_value(beta, lambda1, lambda2, 1.0, data.first_penalized());
    Ok(ObjectiveValue::new(loss, pen, None))
}

pub fn fit_ls(data: &Dataset) -> Result<FitResult> {
    let b = least_squares(data.design(), data.y())?;
    let beta: Vec<f64> = b.iter().copied().collect();
    let obj = enet_objective(data, &beta, 0.0, 0.0)?;
    Ok(FitResult::plain(Method::Ls, beta, obj))
}

/// Closed-form ridge minimizing `SSR + lambda |b|^2` (intercept unpenalized).
pub fn fit_ridge(data: &Dataset, lambda: f64) -> Result<FitResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid(format!("ridge penalty must be >= 0, got {lambda}"));
    }
    let pen: Vec<f64> = (0..data.n_coef()).map(|j| if j < data.first_penalized() { 0.0 } else { lambda }).collect();
    let b = if lambda == 0.0 { least_squares(data.design(), data.y())? } else { ridge_solve(data.design(), data.y(), &pen)? };
    let beta: Vec<f64> = b.iter().copied().collect();
    Ok(FitResult::plain(Method::Ridge, beta.clone(), ridge_objective(data, &beta, lambda)?))
}

pub fn ridge_objective(data: &Dataset, beta: &[f64], lambda: f64) -> Result<ObjectiveValue> {
    data.check_beta(beta)?;
    let r = data.residuals_unchecked(beta);
    let ssr: f64 = r.iter().map(|v| v * v).sum();
    Ok(ObjectiveValue::new(ssr, penalty_value(beta, 0.0, lambda, 1.0, data.first_penalized()), None))
}

/// Default LTS coverage `floor((n + p + 1) / 2)`, clamped to the valid range.
pub fn default_h(data: &Dataset) -> usize {
    let n = data.n();
    ((n + data.n_coef() + 1) / 2).clamp(n.div_ceil(2), n)
}

/// Indices of the `h` smallest squared residuals, ties by index.
fn smallest_h(r: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..r.len()).collect();
    idx.sort_by(|&a, &b| (r[a] * r[a]).total_cmp(&(r[b] * r[b])).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

/// Concentration steps for LTS from `beta`. Returns the final coefficients
/// and the objective after each accepted step (first entry: the start).
pub fn lts_csteps(data: &Dataset, beta: &[f64], h: usize, max_steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_h(data.n(), h)?;
    data.check_beta(beta)?;
    let mut cur = beta.to_vec();
    let mut r = data.residuals_unchecked(&cur);
    let mut trace = vec![lts_from_residuals(&r, h)];
    let mut kept = smallest_h(&r, h);
    for _ in 0..max_steps {
        let sub = data.subset_rows(&kept);
        let next: Vec<f64> = least_squares_or_ridge(sub.design(), sub.y()).iter().copied().collect();
        let rn = data.residuals_unchecked(&next);
        let val = lts_from_residuals(&rn, h);
        if !(val < *trace.last().unwrap_or(&f64::INFINITY)) {
            break;
        }
        trace.push(val);
        cur = next;
        r = rn;
        let nk = smallest_h(&r, h);
        if nk == kept {
            break;
        }
        kept = nk;
    }
    Ok((cur, trace))
}

/// FAST-LTS style fit: random elemental starts refined by C-steps.
pub fn fit_lts(data: &Dataset, h: usize, config: &AaConfig) -> Result<FitResult> {
    config.validate()?;
    check_h(data.n(), h)?;
    let q = data.n_coef();
    if data.n() < q {
        return Err(Error::NoValidStart(format!("{} rows cannot determine {q} coefficients", data.n())));
    }
    let starts = config.outer_repeats * config.candidates_for(data);
    let results: Vec<Option<(f64, Vec<f64>)>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed::rng_for(config.seed, &[STREAM_LTS, s as u64]);
            let rows = sample(&mut rng, data.n(), q).into_vec();
            let sub = data.subset_rows(&rows);
            let b = least_squares(sub.design(), sub.y()).ok()?;
            let (beta, trace) = lts_csteps(data, b.as_slice(), h, LTS_MAX_CSTEPS).ok()?;
            Some((*trace.last()?, beta))
        })
        .collect();
    let valid = results.iter().flatten().count();
    let (val, beta) = results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::NoValidStart("every elemental subset was singular".into()))?;
    let mut fit = FitResult::plain(Method::Lts, beta, ObjectiveValue::new(val, 0.0, None));
    fit.seed = config.seed;
    fit.candidates_evaluated = valid;
    Ok(fit)
}

/// A concentrated starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub repeat: usize,
    pub index: usize,
    pub beta: Vec<f64>,
    pub value: ObjectiveValue,
}

fn subset_cap(data: &Dataset) -> usize {
    data.n_coef().min(data.n().div_ceil(2)).max(2).min(data.n())
}

/// Raw subset fits for one repeat: a shared anchor pair, extended by
/// `index` extra rows up to the subset cap.
fn raw_candidates(data: &Dataset, config: &AaConfig, repeat: usize) -> Vec<Vec<f64>> {
    let n = data.n();
    let cap = subset_cap(data);
    let mut rng = seed::rng_for(config.seed, &[STREAM_CANDIDATES, repeat as u64]);
    let anchors = sample(&mut rng, n, 2.min(n)).into_vec();
    let count = config.candidates_for(data);
    (0..count)
        .map(|c| {
            let size = (anchors.len() + c).min(cap);
            let mut crng = seed::rng_for(config.seed, &[STREAM_CANDIDATES, repeat as u64, c as u64 + 1]);
            let mut rows = anchors.clone();
            for _ in 0..=SUBSET_RETRIES {
                rows.truncate(anchors.len());
                while rows.len() < size {
                    let i = crng.random_range(0..n);
                    if !rows.contains(&i) {
                        rows.push(i);
                    }
                }
                let sub = data.design().select_rows(&rows);
                if row_rank(&sub) >= rows.len().min(data.n_coef()) {
                    break;
                }
            }
            let sub = data.subset_rows(&rows);
            least_squares_or_ridge(sub.design(), sub.y()).iter().copied().collect()
        })
        .collect()
}

/// Penalties the coordinate solver actually sees: `gamma = 2` folds the
/// first penalty into the ridge term.
fn solver_penalties(spec: &PenaltySpec) -> (f64, f64) {
    if spec.gamma == 2.0 {
        (0.0, spec.lambda1 + spec.lambda2)
    } else {
        (spec.lambda1, spec.lambda2)
    }
}

fn refit_kept(data: &Dataset, kept: &[usize], spec: &PenaltySpec) -> Vec<f64> {
    if !spec.is_penalized() {
        let sub = data.subset_rows(kept);
        return least_squares_or_ridge(sub.design(), sub.y()).iter().copied().collect();
    }
    let (l1, l2) = solver_penalties(spec);
    let sys = GramSystem::from_rows(data, kept, data.n() as f64);
    let r = shooting_gram(&sys, l1, l2, SHOOTING_TOL, SHOOTING_SWEEPS);
    sys.full_beta(&r.beta)
}

/// One guarded concentration step: refit on the rows kept at `beta` and
/// return the refit only if it lowers the full objective.
pub fn concentration_step(data: &Dataset, beta: &[f64], spec: &PenaltySpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let cur = lst_enet_objective(data, beta, spec)?;
    let kept = cur.trim.as_ref().map(|t| t.kept.clone()).unwrap_or_default();
    let next = refit_kept(data, &kept, spec);
    let nv = lst_enet_objective(data, &next, spec)?;
    Ok(if nv.total < cur.total { next } else { beta.to_vec() })
}

/// Guarded concentration from `beta`, stopping when the kept set repeats,
/// no step improves, or `iters` steps have run.
pub fn concentrate(data: &Dataset, beta: &[f64], spec: &PenaltySpec, iters: usize) -> Result<(Vec<f64>, ObjectiveValue)> {
    let mut cur = beta.to_vec();
    let mut val = lst_enet_objective(data, &cur, spec)?;
    let kept_of = |v: &ObjectiveValue| v.trim.as_ref().map(|t| t.kept.clone()).unwrap_or_default();
    let mut seen = vec![kept_of(&val)];
    for _ in 0..iters {
        let next = refit_kept(data, seen.last().unwrap(), spec);
        let nv = lst_enet_objective(data, &next, spec)?;
        if !(nv.total < val.total) {
            break;
        }
        cur = next;
        val = nv;
        let k = kept_of(&val);
        if seen.contains(&k) {
            break;
        }
        seen.push(k);
    }
    Ok((cur, val))
}

fn repeat_candidates(data: &Dataset, config: &AaConfig, repeat: usize) -> Vec<Candidate> {
    let spec = PenaltySpec::unpenalized(config.alpha);
    raw_candidates(data, config, repeat)
        .into_iter()
        .enumerate()
        .filter_map(|(index, b)| {
            let (beta, value) = concentrate(data, &b, &spec, config.concentration_iters).ok()?;
            Some(Candidate { repeat, index, beta, value })
        })
        .collect()
}

/// All concentrated candidates, ordered by repeat then index.
pub fn candidate_betas(data: &Dataset, config: &AaConfig) -> Result<Vec<Candidate>> {
    config.validate()?;
    if data.n() < 2 {
        return invalid("candidate generation needs at least two rows");
    }
    let per: Vec<Vec<Candidate>> =
        (0..config.outer_repeats).into_par_iter().map(|r| repeat_candidates(data, config, r)).collect();
    Ok(per.into_iter().flatten().collect())
}

fn better(a: &(f64, usize, usize, bool), b: &(f64, usize, usize, bool)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)).is_lt()
}

/// Minimizer of the depth-trimmed least squares objective.
pub fn fit_lst(data: &Dataset, alpha: f64, config: &AaConfig) -> Result<FitResult> {
    let config = AaConfig { alpha, ..config.clone() };
    let cands = candidate_betas(data, &config)?;
    let evaluated = cands.len();
    let best = cands
        .into_iter()
        .min_by(|a, b| {
            a.value.total.total_cmp(&b.value.total).then(a.repeat.cmp(&b.repeat)).then(a.index.cmp(&b.index))
        })
        .ok_or_else(|| Error::NoValidStart("no candidate survived".into()))?;
    Ok(FitResult {
        method: Method::Lst,
        trim: best.value.trim.clone(),
        beta: best.beta,
        objective: best.value,
        seed: config.seed,
        candidates_evaluated: evaluated,
        selected_penalty: Some(PenaltySpec::unpenalized(alpha)),
        provenance: Some(Provenance { repeat: best.repeat, candidate: best.index, solved: false }),
        warnings: Vec::new(),
    })
}

type CvCache = Mutex<HashMap<Vec<usize>, std::result::Result<CvReport, String>>>;

fn cv_for_kept(data: &Dataset, kept: &[usize], config: &AaConfig, grid: &CvGrid, cache: &CvCache) -> std::result::Result<CvReport, String> {
    if let Some(hit) = cache.lock().ok().and_then(|c| c.get(kept).cloned()) {
        return hit;
    }
    let problem = CvProblem {
        data,
        rows: kept,
        norm_factor: data.n() as f64 / kept.len().max(1) as f64,
        step_cap: config.lars_step_cap,
        mode: LarsMode::Lasso,
    };
    let cv_seed = seed::derive(config.seed, &[STREAM_CV, seed::hash_indices(kept)]);
    let out = cv_select_on(&problem, grid, cv_seed).map_err(|e| e.to_string());
    if let Ok(mut c) = cache.lock() {
        c.insert(kept.to_vec(), out.clone());
    }
    out
}

struct Scored {
    key: (f64, usize, usize, bool),
    beta: Vec<f64>,
    value: ObjectiveValue,
    spec: PenaltySpec,
}

/// Penalized trimmed fit: concentrated candidates, per-candidate penalty
/// selection by cross-validation on the kept rows, elastic-net solve on the
/// kept rows, and selection of the smallest objective among raw and solved
/// coefficients, each under its own selected penalty.
pub fn fit_lst_enet(data: &Dataset, config: &AaConfig, grid: &CvGrid) -> Result<FitResult> {
    config.validate()?;
    grid.validate()?;
    if config.gamma != 1.0 {
        return invalid("the trimmed elastic-net solve handles gamma = 1 only");
    }
    if data.n() < 2 {
        return invalid("lst-enet needs at least two rows");
    }
    let cache: CvCache = Mutex::new(HashMap::new());
    let n = data.n() as f64;
    let per: Vec<(Vec<Scored>, Vec<String>, usize)> = (0..config.outer_repeats)
        .into_par_iter()
        .map(|r| {
            let mut scored = Vec::new();
            let mut warns = Vec::new();
            let cands = repeat_candidates(data, config, r);
            let count = cands.len();
            for c in cands {
                let kept = c.value.trim.as_ref().map(|t| t.kept.clone()).unwrap_or_default();
                let report = match cv_for_kept(data, &kept, config, grid, &cache) {
                    Ok(rep) => rep,
                    Err(e) => {
                        warns.push(format!("repeat {r} candidate {}: cross-validation failed: {e}", c.index));
                        continue;
                    }
                };
                let (l1, l2) = report.direct();
                let spec = PenaltySpec {
                    lambda1: l1,
                    lambda2: l2,
                    gamma: 1.0,
                    alpha: config.alpha,
                    lambda0: Some(report.lambda0),
                };
                let sys = GramSystem::from_rows(data, &kept, n);
                let sol = enet_gram(&sys, l1, l2, config.lars_step_cap, LarsMode::Lasso);
                let solved = sys.full_beta(&sol.beta);
                for (beta, is_solved) in [(c.beta.clone(), false), (solved, true)] {
                    if let Ok(value) = lst_enet_objective(data, &beta, &spec) {
                        scored.push(Scored { key: (value.total, r, c.index, is_solved), beta, value, spec });
                    }
                }
            }
            (scored, warns, count)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut evaluated = 0;
    let mut best: Option<Scored> = None;
    for (scored, warns, count) in per {
        warnings.extend(warns);
        evaluated += count;
        for s in scored {
            if best.as_ref().is_none_or(|b| better(&s.key, &b.key)) {
                best = Some(s);
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let best = best.ok_or_else(|| Error::CvFailed("no candidate could be evaluated".into()))?;
    Ok(FitResult {
        method: Method::LstEnet,
        trim: best.value.trim.clone(),
        beta: best.beta,
        objective: best.value,
        seed: config.seed,
        candidates_evaluated: evaluated,
        selected_penalty: Some(best.spec),
        provenance: Some(Provenance { repeat: best.key.1, candidate: best.key.2, solved: best.key.3 }),
        warnings,
    })
}

fn penalized_fit(data: &Dataset, method: Method, lambda1: f64, lambda2: f64, step_cap: usize) -> Result<FitResult> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
        return invalid(format!("penalties must be finite and >= 0, got ({lambda1}, {lambda2})"));
    }
    let sys = GramSystem::from_data(data);
    let mode = if method == Method::Lars { LarsMode::Lar } else { LarsMode::Lasso };
    let sol = enet_gram(&sys, lambda1, lambda2, step_cap, mode);
    let beta = sys.full_beta(&sol.beta);
    let mut fit = FitResult::plain(method, beta.clone(), enet_objective(data, &beta, lambda1, lambda2)?);
    fit.selected_penalty = Some(PenaltySpec { lambda1, lambda2, ..Default::default() });
    if sol.truncated {
        fit.warnings.push("solution path stopped above the requested penalty".into());
    }
    if mode == LarsMode::Lasso {
        let kkt = kkt_check(data, lambda1, lambda2, &beta, 1e-6 * (1.0 + lambda1))?;
        if !kkt.ok {
            fit.warnings.push(format!("KKT violation {:.3e}", kkt.max_violation));
        }
    }
    Ok(fit)
}

/// Untrimmed lasso at a fixed penalty.
pub fn fit_lasso(data: &Dataset, lambda1: f64) -> Result<FitResult> {
    penalized_fit(data, Method::Lasso, lambda1, 0.0, 900)
}

/// Untrimmed elastic net at fixed penalties.
pub fn fit_enet(data: &Dataset, lambda1: f64, lambda2: f64) -> Result<FitResult> {
    penalized_fit(data, Method::Enet, lambda1, lambda2, 900)
}

/// Lasso, LAR or elastic net with the penalty chosen by cross-validation.
/// Lasso and LAR use the lambda column of the grid with `alpha* = 0`.
pub fn fit_penalized_cv(data: &Dataset, method: Method, grid: &CvGrid, seed: u64, step_cap: usize) -> Result<(FitResult, CvReport)> {
    let (grid, mode) = match method {
        Method::Lasso => (grid.lasso_only(), LarsMode::Lasso),
        Method::Lars => (grid.lasso_only(), LarsMode::Lar),
        Method::Enet => (grid.clone(), LarsMode::Lasso),
        other => return invalid(format!("{other} is not a cross-validated penalized method")),
    };
    let rows: Vec<usize> = (0..data.n()).collect();
    let problem = CvProblem { data, rows: &rows, norm_factor: 1.0, step_cap, mode };
    let report = cv_select_on(&problem, &grid, seed::derive(seed, &[STREAM_CV]))?;
    let (l1, l2) = report.direct();
    let mut fit = penalized_fit(data, method, l1, l2, step_cap)?;
    fit.seed = seed;
    if let Some(p) = fit.selected_penalty.as_mut() {
        p.lambda0 = Some(report.lambda0);
    }
    Ok((fit, report))
}

/// Everything needed to run any method by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub config: AaConfig,
    pub grid: CvGrid,
    pub ridge_lambda: f64,
    pub lts_h: Option<usize>,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions { config: AaConfig::default(), grid: CvGrid::default(), ridge_lambda: 1.0, lts_h: None }
    }
}

pub fn fit_method(data: &Dataset, method: Method, opts: &MethodOptions) -> Result<FitResult> {
    let cfg = &opts.config;
    match method {
        Method::Ls => fit_ls(data),
        Method::Ridge => fit_ridge(data, opts.ridge_lambda),
        Method::Lts => fit_lts(data, opts.lts_h.unwrap_or_else(|| default_h(data)), cfg),
        Method::Lasso | Method::Lars | Method::Enet => {
            fit_penalized_cv(data, method, &opts.grid, cfg.seed, cfg.lars_step_cap).map(|(f, _)| f)
        }
        Method::Lst => fit_lst(data, cfg.alpha, cfg),
        Method::LstEnet => fit_lst_enet(data, cfg, &opts.grid),
    }
}

/// Options that reuse the penalty chosen in `fit`, so refits on perturbed
/// data skip cross-validation. Unpenalized fits return `opts` unchanged.
pub fn freeze_penalty(fit: &FitResult, opts: &MethodOptions) -> Result<MethodOptions> {
    let mut out = opts.clone();
    if let Some(pen) = fit.selected_penalty {
        if pen.lambda1 + pen.lambda2 > 0.0 {
            let (lambda_star, alpha_star) = reparam_mixing(pen.lambda1, pen.lambda2)?;
            out.grid = CvGrid::fixed(lambda_star, alpha_star);
        }
    }
    Ok(out)
}

/// Re-evaluate the objective a method minimizes.
pub fn method_objective(data: &Dataset, method: Method, beta: &[f64], fit: &FitResult, opts: &MethodOptions) -> Result<ObjectiveValue> {
    let pen = fit.selected_penalty.unwrap_or_default();
    match method {
        Method::Ls => enet_objective(data, beta, 0.0, 0.0),
        Method::Ridge => ridge_objective(data, beta, opts.ridge_lambda),
        Method::Lts => {
            data.check_beta(beta)?;
            let h = opts.lts_h.unwrap_or_else(|| default_h(data));
            Ok(ObjectiveValue::new(lts_from_residuals(&data.residuals_unchecked(beta), h), 0.0, None))
        }
        Method::Lasso | Method::Lars | Method::Enet => enet_objective(data, beta, pen.lambda1, pen.lambda2),
        Method::Lst | Method::LstEnet => lst_enet_objective(data, beta, &pen),
    }
}

/// Trim state of `beta` at level `alpha`.
pub fn trim_at(data: &Dataset, beta: &[f64], alpha: f64) -> Result<TrimState> {
    data.check_beta(beta)?;
    check_alpha(alpha)?;
    Ok(trim_unchecked(&data.residuals_unchecked(beta), alpha))
}

/// Mean of the responses, used as a location start in tests and examples.
pub fn response_mean(data: &Dataset) -> f64 {
    data.y().iter().sum::<f64>() / data.n() as f64
}
