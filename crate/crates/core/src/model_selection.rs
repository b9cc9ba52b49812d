//! Penalty selection by repeated k-fold cross-validation over a
//! `(lambda*, alpha*)` grid.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::seed::{self, Rng};
use crate::solvers::{lars_gram, GramSystem, LarsMode, LarsOptions};

/// Relative tolerance under which two cell errors count as tied.
const CV_TIE: f64 = 1e-12;

/// How grid lambdas are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridScale {
    /// Multipliers of the working data's `lambda0`.
    Relative,
    /// Absolute penalty values.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub folds: usize,
    pub repeats: usize,
    pub scale: GridScale,
    /// Score folds by the mean of the smallest 80% squared errors.
    pub trimmed_mse: bool,
}

impl Default for CvGrid {
    fn default() -> Self {
        CvGrid::relative(10, 10)
    }
}

impl CvGrid {
    /// `nl` lambdas `lambda0 * k / nl` and `na` alphas `a / na`, 5 folds, 10 repeats.
    pub fn relative(nl: usize, na: usize) -> Self {
        CvGrid {
            lambdas: (1..=nl).map(|k| k as f64 / nl as f64).collect(),
            alphas: (0..na).map(|a| a as f64 / na as f64).collect(),
            folds: 5,
            repeats: 10,
            scale: GridScale::Relative,
            trimmed_mse: false,
        }
    }

    /// A single fixed cell; no cross-validation is run.
    pub fn fixed(lambda_star: f64, alpha_star: f64) -> Self {
        CvGrid {
            lambdas: vec![lambda_star],
            alphas: vec![alpha_star],
            scale: GridScale::Absolute,
            ..CvGrid::relative(1, 1)
        }
    }

    /// Same lambdas, alpha fixed at zero.
    pub fn lasso_only(&self) -> Self {
        CvGrid { alphas: vec![0.0], ..self.clone() }
    }

    pub fn with_cv(mut self, folds: usize, repeats: usize) -> Self {
        self.folds = folds;
        self.repeats = repeats;
        self
    }

    pub fn len(&self) -> usize {
        self.lambdas.len() * self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return invalid("empty penalty grid");
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return invalid("grid lambdas must be finite and >= 0");
        }
        if self.alphas.iter().any(|a| !(0.0..1.0).contains(a)) {
            return invalid("grid alphas must lie in [0, 1)");
        }
        if self.len() > 1 && (self.folds < 2 || self.repeats < 1) {
            return invalid(format!("need folds >= 2 and repeats >= 1, got {} and {}", self.folds, self.repeats));
        }
        Ok(())
    }

    /// Absolute lambdas for a working `lambda0`.
    pub fn resolve(&self, lambda0: f64) -> Vec<f64> {
        match self.scale {
            GridScale::Relative => self.lambdas.iter().map(|m| m * lambda0).collect(),
            GridScale::Absolute => self.lambdas.clone(),
        }
    }
}

/// The default 10 x 10 grid at an explicit `lambda0`.
pub fn build_grid(lambda0: f64) -> Result<CvGrid> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return invalid(format!("lambda0 must be positive, got {lambda0}"));
    }
    let rel = CvGrid::relative(10, 10);
    Ok(CvGrid { lambdas: rel.resolve(lambda0), scale: GridScale::Absolute, ..rel })
}

/// Disjoint folds covering `0..n` with sizes differing by at most one.
pub fn kfold_split(n: usize, k: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return invalid(format!("need at least 2 folds, got {k}"));
    }
    if n < k {
        return invalid(format!("{n} rows cannot fill {k} folds"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub lambda0: f64,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `error_surface[i][a]` for `lambdas[i]`, `alphas[a]`.
    pub error_surface: Vec<Vec<f64>>,
    /// `per_repeat[r][i][a]`.
    pub per_repeat: Vec<Vec<Vec<f64>>>,
    pub chosen: (f64, f64),
    pub chosen_index: (usize, usize),
}

impl CvReport {
    /// Chosen penalty in direct form `(lambda1, lambda2)`.
    pub fn direct(&self) -> (f64, f64) {
        let (ls, a) = self.chosen;
        let l2 = ls * a;
        (ls - l2, l2)
    }
}

/// The working problem: rows of a dataset and how fold losses are normalized.
/// A training fold of `m` rows is normalized by `m * norm_factor`.
#[derive(Debug, Clone, Copy)]
pub struct CvProblem<'a> {
    pub data: &'a Dataset,
    pub rows: &'a [usize],
    pub norm_factor: f64,
    pub step_cap: usize,
    pub mode: LarsMode,
}

/// Cross-validated penalty choice on the full dataset.
pub fn cv_select(data: &Dataset, grid: &CvGrid, seed: u64) -> Result<CvReport> {
    let rows: Vec<usize> = (0..data.n()).collect();
    let problem = CvProblem { data, rows: &rows, norm_factor: 1.0, step_cap: 900, mode: LarsMode::Lasso };
    cv_select_on(&problem, grid, seed)
}

pub fn cv_select_on(problem: &CvProblem<'_>, grid: &CvGrid, seed: u64) -> Result<CvReport> {
    grid.validate()?;
    let m = problem.rows.len();
    if m == 0 {
        return invalid("no rows to cross-validate on");
    }
    let full = GramSystem::from_rows(problem.data, problem.rows, m as f64 * problem.norm_factor);
    let lambda0 = full.lambda_max();
    let lambdas = grid.resolve(lambda0);
    let alphas = grid.alphas.clone();
    let (nl, na) = (lambdas.len(), alphas.len());

    if nl * na == 1 {
        return Ok(CvReport {
            lambda0,
            chosen: (lambdas[0], alphas[0]),
            lambdas,
            alphas,
            error_surface: vec![vec![f64::NAN]],
            per_repeat: Vec::new(),
            chosen_index: (0, 0),
        });
    }
    if m < grid.folds {
        return invalid(format!("{m} rows cannot fill {} folds", grid.folds));
    }

    // cells sharing lambda2 share one path per fold
    let mut groups: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, &ls) in lambdas.iter().enumerate() {
        for (a, &al) in alphas.iter().enumerate() {
            let l2 = ls * al;
            groups.entry(l2.to_bits()).or_default().push((i * na + a, ls - l2));
        }
    }

    let mut tasks = Vec::with_capacity(grid.repeats * grid.folds);
    for r in 0..grid.repeats {
        let mut rng = seed::rng_for(seed, &[r as u64]);
        let folds = kfold_split(m, grid.folds, &mut rng)?;
        for f in 0..grid.folds {
            tasks.push((r, folds.clone(), f));
        }
    }

    let fold_errors: Vec<(usize, Vec<f64>)> = tasks
        .par_iter()
        .map(|(r, folds, f)| (*r, fold_cell_errors(problem, &groups, nl * na, folds, *f, grid.trimmed_mse)))
        .collect();

    let mut per_repeat = vec![vec![0.0; nl * na]; grid.repeats];
    for (r, errs) in &fold_errors {
        for (acc, e) in per_repeat[*r].iter_mut().zip(errs) {
            *acc += e / grid.folds as f64;
        }
    }
    let mut surface = vec![0.0; nl * na];
    for rep in &per_repeat {
        for (s, e) in surface.iter_mut().zip(rep) {
            *s += e / grid.repeats as f64;
        }
    }
    if surface.iter().all(|e| !e.is_finite()) {
        return Err(Error::CvFailed("every grid cell failed".into()));
    }

    let mut best = 0;
    for c in 1..surface.len() {
        let (e, b) = (surface[c], surface[best]);
        let tol = CV_TIE * b.abs().max(1.0);
        let better = e < b - tol;
        let tied = (e - b).abs() <= tol;
        let (ci, ca) = (c / na, c % na);
        let (bi, ba) = (best / na, best % na);
        let more_regular = lambdas[ci] > lambdas[bi] || (lambdas[ci] == lambdas[bi] && alphas[ca] > alphas[ba]);
        if !b.is_finite() && e.is_finite() || better || (tied && more_regular) {
            best = c;
        }
    }
    let to_grid = |v: &[f64]| v.chunks(na).map(|c| c.to_vec()).collect::<Vec<_>>();
    Ok(CvReport {
        lambda0,
        chosen: (lambdas[best / na], alphas[best % na]),
        chosen_index: (best / na, best % na),
        error_surface: to_grid(&surface),
        per_repeat: per_repeat.iter().map(|r| to_grid(r)).collect(),
        lambdas,
        alphas,
    })
}

fn fold_cell_errors(
    problem: &CvProblem<'_>,
    groups: &BTreeMap<u64, Vec<(usize, f64)>>,
    cells: usize,
    folds: &[Vec<usize>],
    test_fold: usize,
    trimmed: bool,
) -> Vec<f64> {
    let rows = problem.rows;
    let train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != test_fold)
        .flat_map(|(_, idx)| idx.iter().map(|&i| rows[i]))
        .collect();
    let test: Vec<usize> = folds[test_fold].iter().map(|&i| rows[i]).collect();
    let sys = GramSystem::from_rows(problem.data, &train, train.len() as f64 * problem.norm_factor);
    let mut out = vec![f64::INFINITY; cells];
    for (&bits, members) in groups {
        let l2 = f64::from_bits(bits);
        let (work, scale) = if l2 > 0.0 { (sys.augment(l2), (1.0 + l2).sqrt()) } else { (sys.clone(), 1.0) };
        let floor = members.iter().map(|(_, l1)| l1 / scale).fold(f64::INFINITY, f64::min);
        let path = lars_gram(&work, &LarsOptions { max_steps: problem.step_cap, mode: problem.mode, floor: Some(floor) });
        for &(cell, l1) in members {
            let (b, _) = path.beta_at_or_last(l1 / scale);
            let b: Vec<f64> = b.iter().map(|v| v / scale).collect();
            let full = sys.full_beta(&b);
            let err = test_error(problem.data, &test, &full, trimmed);
            if err.is_finite() {
                out[cell] = err;
            } else {
                log::warn!("non-finite fold error at grid cell {cell}");
            }
        }
    }
    out
}

fn test_error(data: &Dataset, test: &[usize], beta: &[f64], trimmed: bool) -> f64 {
    let x = data.design();
    let mut sq: Vec<f64> = test
        .iter()
        .map(|&i| {
            let fit: f64 = beta.iter().enumerate().map(|(j, b)| x[(i, j)] * b).sum();
            let r = data.y()[i] - fit;
            r * r
        })
        .collect();
    if trimmed {
        sq.sort_by(f64::total_cmp);
        let keep = ((0.8 * sq.len() as f64).ceil() as usize).max(1);
        sq.truncate(keep);
    }
    sq.iter().sum::<f64>() / sq.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kfold_examples() {
        let mut rng = seed::rng_for(1, &[]);
        let f = kfold_split(10, 5, &mut rng).unwrap();
        assert!(f.iter().all(|v| v.len() == 2));
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let g = kfold_split(10, 5, &mut seed::rng_for(1, &[])).unwrap();
        assert_eq!(f, g);
        let h = kfold_split(13, 5, &mut rng).unwrap();
        let sizes: Vec<usize> = h.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(kfold_split(3, 5, &mut rng).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(1.0).unwrap();
        for (k, l) in g.lambdas.iter().enumerate() {
            assert!((l - (k + 1) as f64 / 10.0).abs() < 1e-15);
        }
        assert!(g.alphas.iter().all(|&a| a < 1.0));
        assert_eq!(g.alphas[0], 0.0);
        assert_eq!(g.len(), 100);
        assert!(build_grid(0.0).is_err());
    }

    fn sample(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(40, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(40, |i, _| 2.0 * x[(i, 0)] - x[(i, 1)] + 0.5 * rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y, false).unwrap()
    }

    #[test]
    fn single_cell_is_chosen() {
        let d = sample(1);
        let r = cv_select(&d, &CvGrid::fixed(0.3, 0.2), 1).unwrap();
        assert_eq!(r.chosen, (0.3, 0.2));
    }

    #[test]
    fn surface_is_finite_and_chosen_attains_minimum() {
        let d = sample(2);
        let grid = CvGrid::relative(5, 4).with_cv(5, 2);
        let r = cv_select(&d, &grid, 9).unwrap();
        let min = r.error_surface.iter().flatten().fold(f64::INFINITY, |m, v| m.min(*v));
        assert!(r.error_surface.iter().flatten().all(|e| e.is_finite() && *e >= 0.0));
        assert_eq!(r.error_surface[r.chosen_index.0][r.chosen_index.1], min);
        assert_eq!(r, cv_select(&d, &grid, 9).unwrap());
    }
}
