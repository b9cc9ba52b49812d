//! l1-type solvers: a Gram-form LARS path (lasso modification or plain LAR),
//! coordinate-descent shooting for the elastic net, and a KKT certificate.
//!
//! All solvers target `(1/N)||y - Xb||^2 + l1 ||b||_1 + l2 ||b||^2` where `N`
//! is a caller-chosen normalization (the row count unless stated otherwise).
//! Columns are used as given; an intercept, when present, is profiled out by
//! centering over the rows in use.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};

/// Relative tie tolerance for entering correlations.
const TIE_TOL: f64 = 1e-12;
/// Pivot tolerance for the incremental Cholesky factor.
const PIVOT_TOL: f64 = 1e-11;

/// Column means used to profile out an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
}

impl Centering {
    /// Prepend the intercept implied by the penalized coefficients.
    pub fn full(&self, beta: &[f64]) -> Vec<f64> {
        let b0 = self.y_mean - self.x_mean.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>();
        std::iter::once(b0).chain(beta.iter().copied()).collect()
    }
}

/// Sufficient statistics `(X'X, X'y, y'y)` of a least-squares problem
/// together with its loss normalization.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub g: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n_norm: f64,
    pub centering: Option<Centering>,
}

impl GramSystem {
    /// Gram system over all rows, normalized by `n`.
    pub fn from_data(data: &Dataset) -> Self {
        let rows: Vec<usize> = (0..data.n()).collect();
        Self::from_rows(data, &rows, data.n() as f64)
    }

    /// Gram system over `rows` with an explicit normalization.
    pub fn from_rows(data: &Dataset, rows: &[usize], n_norm: f64) -> Self {
        let off = data.first_penalized();
        let p = data.p();
        let design = data.design();
        let y = data.y();
        let m = rows.len().max(1) as f64;
        let centering = data.has_intercept().then(|| Centering {
            x_mean: (0..p).map(|j| rows.iter().map(|&i| design[(i, j + off)]).sum::<f64>() / m).collect(),
            y_mean: rows.iter().map(|&i| y[i]).sum::<f64>() / m,
        });
        let (xm, ym) = match &centering {
            Some(c) => (c.x_mean.clone(), c.y_mean),
            None => (vec![0.0; p], 0.0),
        };
        let xs = DMatrix::from_fn(rows.len(), p, |r, j| design[(rows[r], j + off)] - xm[j]);
        let ys = DVector::from_fn(rows.len(), |r, _| y[rows[r]] - ym);
        GramSystem {
            g: xs.tr_mul(&xs),
            xty: xs.tr_mul(&ys),
            yty: ys.dot(&ys),
            n_norm,
            centering,
        }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    /// Elastic-net augmentation in Gram form: `G* = (G + N l2 I)/(1 + l2)`,
    /// `X'y* = X'y / sqrt(1 + l2)`.
    pub fn augment(&self, lambda2: f64) -> GramSystem {
        let s = 1.0 + lambda2;
        let mut g = &self.g / s;
        let ridge = self.n_norm * lambda2 / s;
        for j in 0..self.p() {
            g[(j, j)] += ridge;
        }
        GramSystem {
            g,
            xty: &self.xty / s.sqrt(),
            yty: self.yty,
            n_norm: self.n_norm,
            centering: self.centering.clone(),
        }
    }

    /// Coefficient vector in dataset layout (intercept first when present).
    pub fn full_beta(&self, beta: &[f64]) -> Vec<f64> {
        match &self.centering {
            Some(c) => c.full(beta),
            None => beta.to_vec(),
        }
    }

    /// Largest `|2 x_j'y| / N`.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.xty.amax() / self.n_norm
    }

    /// `(1/N)||y - Xb||^2 + l1 ||b||_1 + l2 ||b||^2` from the sufficient statistics.
    pub fn objective(&self, beta: &[f64], lambda1: f64, lambda2: f64) -> f64 {
        let b = DVector::from_column_slice(beta);
        let rss = self.yty - 2.0 * self.xty.dot(&b) + b.dot(&(&self.g * &b));
        rss.max(0.0) / self.n_norm + lambda1 * b.lp_norm(1) + lambda2 * b.norm_squared()
    }
}

/// Path variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LarsMode {
    /// Lasso modification: coefficients crossing zero leave the active set.
    Lasso,
    /// Plain least angle regression, no drops.
    Lar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub lambda: f64,
    /// Penalized coefficients only.
    pub beta: Vec<f64>,
    /// Active set leaving this knot.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LarsPath {
    pub knots: Vec<Knot>,
    pub steps_taken: usize,
    /// Step cap hit or a singular active set forced an early stop.
    pub truncated: bool,
    /// The path reached `lambda = 0` or the requested floor.
    pub complete: bool,
    pub centering: Option<Centering>,
}

impl LarsPath {
    pub fn lambda0(&self) -> f64 {
        self.knots[0].lambda
    }

    pub fn last_lambda(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.lambda)
    }

    /// Penalized coefficients at `lambda`, interpolated between knots.
    pub fn beta_at(&self, lambda: f64) -> Result<Vec<f64>> {
        if !(lambda >= 0.0) {
            return invalid(format!("lambda must be >= 0, got {lambda}"));
        }
        let first = &self.knots[0];
        if lambda >= first.lambda {
            return Ok(vec![0.0; first.beta.len()]);
        }
        for w in self.knots.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if lambda >= b.lambda {
                if lambda == b.lambda {
                    return Ok(b.beta.clone());
                }
                let t = (a.lambda - lambda) / (a.lambda - b.lambda);
                return Ok(a.beta.iter().zip(&b.beta).map(|(x, y)| x + t * (y - x)).collect());
            }
        }
        Err(Error::PathTruncated { last: self.last_lambda(), requested: lambda })
    }

    /// Penalized coefficients at `lambda`, or at the last knot when the path
    /// stops above it. The flag reports whether the fallback was used.
    pub fn beta_at_or_last(&self, lambda: f64) -> (Vec<f64>, bool) {
        match self.beta_at(lambda) {
            Ok(b) => (b, false),
            Err(_) => (self.knots.last().map(|k| k.beta.clone()).unwrap_or_default(), true),
        }
    }

    pub fn full_beta(&self, beta: &[f64]) -> Vec<f64> {
        match &self.centering {
            Some(c) => c.full(beta),
            None => beta.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LarsOptions {
    pub max_steps: usize,
    pub mode: LarsMode,
    /// Stop once lambda reaches this value.
    pub floor: Option<f64>,
}

impl Default for LarsOptions {
    fn default() -> Self {
        LarsOptions { max_steps: 900, mode: LarsMode::Lasso, floor: None }
    }
}

/// Lower-triangular factor of the active Gram block, grown one column at a time.
#[derive(Debug, Clone, Default)]
struct CholFactor {
    rows: Vec<Vec<f64>>,
}

impl CholFactor {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for i in 0..self.len() {
            let r = &self.rows[i];
            let s: f64 = (0..i).map(|k| r[k] * x[k]).sum();
            x[i] = (x[i] - s) / r[i];
        }
        x
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        for i in (0..self.len()).rev() {
            let s: f64 = (i + 1..self.len()).map(|k| self.rows[k][i] * x[k]).sum();
            x[i] = (x[i] - s) / self.rows[i][i];
        }
        x
    }

    /// Append a column with Gram entries `cross` (against the current set) and
    /// diagonal `diag`. Returns false when the pivot collapses.
    fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        let l = self.forward(cross);
        let d = diag - l.iter().map(|v| v * v).sum::<f64>();
        if !(diag > 0.0) || d <= PIVOT_TOL * diag {
            return false;
        }
        let mut row = l;
        row.push(d.sqrt());
        self.rows.push(row);
        true
    }

    fn rebuild(g: &DMatrix<f64>, active: &[usize]) -> Option<Self> {
        let mut f = CholFactor::default();
        for (k, &j) in active.iter().enumerate() {
            let cross: Vec<f64> = active[..k].iter().map(|&i| g[(i, j)]).collect();
            if !f.push(&cross, g[(j, j)]) {
                return None;
            }
        }
        Some(f)
    }
}

enum Event {
    Add(usize),
    Drop(usize),
    Floor,
    End,
}

/// LARS on a Gram system.
pub fn lars_gram(sys: &GramSystem, opts: &LarsOptions) -> LarsPath {
    let p = sys.p();
    let g = &sys.g;
    let nn = sys.n_norm;
    let mut beta = vec![0.0; p];
    let mut c: Vec<f64> = sys.xty.iter().copied().collect();
    let mut mag: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    let mut cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // rounding error carried by the running value of cmax
    let mut cmax_err = f64::EPSILON * cmax;
    let mut knots = vec![Knot { lambda: 2.0 * cmax / nn, beta: beta.clone(), active: vec![] }];
    let mut path = LarsPath {
        knots: Vec::new(),
        steps_taken: 0,
        truncated: false,
        complete: false,
        centering: sys.centering.clone(),
    };
    let floor_c = opts.floor.map(|f| f.max(0.0) * nn / 2.0);
    if cmax <= f64::MIN_POSITIVE || floor_c.is_some_and(|f| f >= cmax) {
        path.complete = true;
        path.knots = knots;
        return path;
    }

    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; p];
    let mut chol = CholFactor::default();
    let mut last_dropped: Option<usize> = None;

    // first entrant: lowest index attaining the maximum
    let tie = TIE_TOL * cmax.max(1.0);
    let first = (0..p).find(|&j| c[j].abs() >= cmax - tie).unwrap_or(0);
    if !chol.push(&[], g[(first, first)]) {
        path.truncated = true;
        path.knots = knots;
        return path;
    }
    active.push(first);
    in_active[first] = true;
    knots[0].active = active.clone();

    loop {
        if path.steps_taken >= opts.max_steps {
            path.truncated = true;
            break;
        }
        let signs: Vec<f64> = active
            .iter()
            .map(|&j| if beta[j] != 0.0 { beta[j].signum() } else { c[j].signum() })
            .collect();
        let w = chol.solve(&signs);

        let mut best_gamma = cmax;
        let mut event = Event::End;
        if let Some(fc) = floor_c {
            let gf = cmax - fc;
            if gf <= best_gamma {
                best_gamma = gf;
                event = Event::Floor;
            }
        }
        if opts.mode == LarsMode::Lasso {
            for (k, &j) in active.iter().enumerate() {
                if beta[j] != 0.0 && w[k] != 0.0 {
                    let t = -beta[j] / w[k];
                    if t > 0.0 && t < best_gamma {
                        best_gamma = t;
                        event = Event::Drop(j);
                    }
                }
            }
        }
        // Each inactive variable enters when the common active correlation
        // falls to its entry level; computing the level directly avoids the
        // cancellation in `cmax - gamma` when cmax is huge.
        let mut add: Option<(f64, f64, usize)> = None;
        for j in 0..p {
            if in_active[j] {
                continue;
            }
            // a coefficient that just left sits exactly on the boundary and
            // may only come back after a genuine move
            let max_level = if Some(j) == last_dropped { cmax - 1e-10 * cmax } else { cmax };
            let a: f64 = active.iter().zip(&w).map(|(&i, wi)| g[(j, i)] * wi).sum();
            let scale = c[j].abs() + a.abs() * cmax;
            let mut level = f64::NEG_INFINITY;
            for (num, den) in [(c[j] - a * cmax, 1.0 - a), (a * cmax - c[j], 1.0 + a)] {
                if den > 1e-12 {
                    let l = (num / den).min(cmax);
                    if l < max_level {
                        level = level.max(l);
                    }
                }
            }
            if level.is_finite() && level >= 0.0 {
                let better = match add {
                    None => true,
                    Some((lb, sb, _)) => level > lb + TIE_TOL * scale.max(sb).max(f64::MIN_POSITIVE),
                };
                if better {
                    add = Some((level, scale, j));
                }
            }
        }
        if let Some((level, _, j)) = add {
            let ga = cmax - level;
            // entries that coincide with the end of the path are rounding
            // artefacts once the active set interpolates the data
            let noise = 64.0 * (cmax_err + f64::EPSILON * (cmax + mag[j]));
            let at_end = matches!(event, Event::End) && level <= noise;
            if ga < best_gamma && !at_end {
                best_gamma = ga;
                event = Event::Add(j);
            }
        }

        let gamma = best_gamma.max(0.0);
        for (k, &j) in active.iter().enumerate() {
            beta[j] += gamma * w[k];
        }
        cmax -= gamma;
        cmax_err += f64::EPSILON * (cmax.abs() + gamma);
        path.steps_taken += 1;
        last_dropped = None;

        match event {
            Event::Drop(j) => {
                beta[j] = 0.0;
                let pos = active.iter().position(|&i| i == j).unwrap_or(0);
                active.remove(pos);
                in_active[j] = false;
                last_dropped = Some(j);
                match CholFactor::rebuild(g, &active) {
                    Some(f) => chol = f,
                    None => {
                        recompute(&mut c, &mut mag, sys, &beta);
                        push_knot(&mut knots, cmax, nn, &beta, &active);
                        path.truncated = true;
                        break;
                    }
                }
            }
            Event::Floor => {
                cmax = floor_c.unwrap_or(cmax);
                push_knot(&mut knots, cmax, nn, &beta, &active);
                path.complete = true;
                break;
            }
            Event::End => {
                push_knot(&mut knots, 0.0, nn, &beta, &active);
                path.complete = true;
                break;
            }
            Event::Add(_) => {}
        }
        recompute(&mut c, &mut mag, sys, &beta);
        // Subtracting step lengths from a huge starting correlation loses
        // absolute precision; resync from the best-conditioned active
        // correlation when it is more accurate.
        let terms = (active.len() + 1) as f64;
        if let Some((e, j)) = active
            .iter()
            .filter(|&&j| beta[j] != 0.0)
            .map(|&j| (terms * f64::EPSILON * mag[j], j))
            .min_by(|a, b| a.0.total_cmp(&b.0))
        {
            if e < cmax_err {
                cmax = c[j].abs();
                cmax_err = e;
            }
        }
        if let Event::Add(j) = event {
            let cross: Vec<f64> = active.iter().map(|&i| g[(i, j)]).collect();
            if chol.push(&cross, g[(j, j)]) {
                active.push(j);
                in_active[j] = true;
            } else {
                push_knot(&mut knots, cmax, nn, &beta, &active);
                path.truncated = true;
                break;
            }
        }
        push_knot(&mut knots, cmax, nn, &beta, &active);
        if active.is_empty() {
            // every coefficient dropped out: restart from the largest correlation
            let tie = TIE_TOL * cmax.max(1.0);
            let Some(j) = (0..p).find(|&j| c[j].abs() >= cmax - tie && Some(j) != last_dropped) else {
                path.complete = true;
                break;
            };
            if !chol.push(&[], g[(j, j)]) {
                path.truncated = true;
                break;
            }
            active.push(j);
            in_active[j] = true;
            if let Some(k) = knots.last_mut() {
                k.active = active.clone();
            }
        }
    }
    path.knots = knots;
    path
}

/// Recompute `c = X'y - G beta`; `mag[j]` collects the magnitude of the
/// summed terms, which bounds the rounding error of `c[j]`.
fn recompute(c: &mut [f64], mag: &mut [f64], sys: &GramSystem, beta: &[f64]) {
    for (j, (cj, mj)) in c.iter_mut().zip(mag.iter_mut()).enumerate() {
        let mut s = sys.xty[j];
        let mut m = s.abs();
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                let t = sys.g[(j, k)] * b;
                s -= t;
                m += t.abs();
            }
        }
        *cj = s;
        *mj = m;
    }
}

/// Append a knot, or overwrite the previous one when lambda did not move.
fn push_knot(knots: &mut Vec<Knot>, cmax: f64, nn: f64, beta: &[f64], active: &[usize]) {
    let lambda = (2.0 * cmax / nn).max(0.0);
    let knot = Knot { lambda, beta: beta.to_vec(), active: active.to_vec() };
    match knots.last_mut() {
        Some(last) if lambda >= last.lambda => {
            last.beta = knot.beta;
            last.active = knot.active;
        }
        _ => knots.push(knot),
    }
}

/// Lasso path for `(1/n)||y - Xb||^2 + lambda ||b||_1`.
pub fn lars_path(data: &Dataset, max_steps: usize) -> Result<LarsPath> {
    Ok(lars_gram(&GramSystem::from_data(data), &LarsOptions { max_steps, ..Default::default() }))
}

/// Full coefficient vector at `lambda`, interpolated along the path.
pub fn lasso_at(path: &LarsPath, lambda: f64) -> Result<Vec<f64>> {
    let b = path.beta_at(lambda)?;
    Ok(path.full_beta(&b))
}

/// Elastic-net solution from a Gram system via augmentation and LARS.
#[derive(Debug, Clone, PartialEq)]
pub struct EnetSolution {
    /// Penalized coefficients.
    pub beta: Vec<f64>,
    /// The path stopped above the requested penalty and the last knot was used.
    pub truncated: bool,
}

pub fn enet_gram(sys: &GramSystem, lambda1: f64, lambda2: f64, max_steps: usize, mode: LarsMode) -> EnetSolution {
    let (work, scale) = if lambda2 > 0.0 {
        (sys.augment(lambda2), (1.0 + lambda2).sqrt())
    } else {
        (sys.clone(), 1.0)
    };
    let l1 = lambda1 / scale;
    let path = lars_gram(&work, &LarsOptions { max_steps, mode, floor: Some(l1) });
    let (b, truncated) = path.beta_at_or_last(l1);
    EnetSolution { beta: b.iter().map(|v| v / scale).collect(), truncated }
}

/// Output of [`shooting_enet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Coordinate descent on a Gram system.
pub fn shooting_gram(sys: &GramSystem, lambda1: f64, lambda2: f64, tol: f64, max_sweeps: usize) -> ShootingResult {
    let p = sys.p();
    let nn = sys.n_norm;
    let mut beta = vec![0.0; p];
    // grad_j = x_j'y - sum_k G_jk b_k
    let mut corr: Vec<f64> = sys.xty.iter().copied().collect();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let gjj = sys.g[(j, j)];
            let denom = 2.0 * gjj / nn + 2.0 * lambda2;
            if denom <= 0.0 {
                continue;
            }
            let rho = corr[j] + gjj * beta[j];
            let z = 2.0 * rho / nn;
            let new = soft(z, lambda1) / denom;
            let delta = new - beta[j];
            if delta != 0.0 {
                for k in 0..p {
                    corr[k] -= sys.g[(k, j)] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }
    ShootingResult { beta, sweeps, converged }
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate-descent (shooting) elastic net on a dataset; the returned
/// coefficients are in dataset layout.
pub fn shooting_enet(data: &Dataset, lambda1: f64, lambda2: f64, tol: f64, max_sweeps: usize) -> Result<ShootingResult> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return invalid("penalties must be >= 0");
    }
    let sys = GramSystem::from_data(data);
    let mut r = shooting_gram(&sys, lambda1, lambda2, tol, max_sweeps);
    r.beta = sys.full_beta(&r.beta);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub ok: bool,
    pub max_violation: f64,
}

/// Subgradient optimality of `b` for the elastic-net objective with `1/n` loss.
/// Active coordinates need `|-2x'r/n + 2 l2 b + l1 sign b| <= tol`, inactive
/// ones `|2x'r/n| <= l1 + tol`; an intercept needs a zero gradient.
pub fn kkt_check(data: &Dataset, lambda1: f64, lambda2: f64, beta: &[f64], tol: f64) -> Result<KktReport> {
    data.check_beta(beta)?;
    let n = data.n() as f64;
    let r = DVector::from_vec(data.residuals_unchecked(beta));
    let grad = data.design().tr_mul(&r) * (2.0 / n);
    let first = data.first_penalized();
    let mut worst = 0.0f64;
    for j in 0..data.n_coef() {
        let v = if j < first {
            grad[j].abs()
        } else if beta[j] != 0.0 {
            (-grad[j] + 2.0 * lambda2 * beta[j] + lambda1 * beta[j].signum()).abs()
        } else {
            (grad[j].abs() - lambda1).max(0.0)
        };
        worst = worst.max(v);
    }
    Ok(KktReport { ok: worst <= tol, max_violation: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        Dataset::new(x, y, false).unwrap()
    }

    #[test]
    fn zero_steps_gives_single_knot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = gaussian(&mut rng, 10, 4);
        let path = lars_path(&d, 0).unwrap();
        assert_eq!(path.knots.len(), 1);
        assert!(path.truncated);
        assert!((path.lambda0() - crate::objectives::lambda_max(&d)).abs() < 1e-12);
        assert!(path.knots[0].beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn univariate_path_is_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = gaussian(&mut rng, 12, 1);
        let path = lars_path(&d, 10).unwrap();
        let x = d.design().column(0);
        let rho = x.dot(d.y());
        let xx = x.dot(&x);
        let n = 12.0;
        for &lam in &[0.0, 0.01, 0.1, 0.3, path.lambda0() * 0.5, path.lambda0()] {
            let b = lasso_at(&path, lam).unwrap()[0];
            let expect = rho.signum() * (rho.abs() - n * lam / 2.0).max(0.0) / xx;
            assert!((b - expect).abs() < 1e-12, "{b} vs {expect}");
        }
    }

    #[test]
    fn orthonormal_columns_soft_threshold_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = DMatrix::from_fn(20, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = raw.qr().q();
        let y = DVector::from_fn(20, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0);
        let d = Dataset::new(q.clone(), y.clone(), false).unwrap();
        let ls = q.tr_mul(&y);
        let path = lars_path(&d, 100).unwrap();
        for &lam in &[0.01, 0.05, 0.1, 0.2] {
            let b = lasso_at(&path, lam).unwrap();
            for j in 0..4 {
                // (1/n)||y - Qb||^2 + lam |b|_1 with Q'Q = I
                let expect = soft(ls[j], 20.0 * lam / 2.0);
                assert!((b[j] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn knots_satisfy_kkt_and_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let n = rng.random_range(5..30);
            let p = rng.random_range(1..16);
            let d = gaussian(&mut rng, n, p);
            let path = lars_path(&d, 900).unwrap();
            for w in path.knots.windows(2) {
                assert!(w[1].lambda < w[0].lambda);
            }
            for (t, k) in path.knots.iter().enumerate() {
                let r = kkt_check(&d, k.lambda, 0.0, &k.beta, 1e-8).unwrap();
                assert!(r.ok, "violation {} n={n} p={p} knot {t}/{} {:?} {:?}", r.max_violation, path.knots.len(), path.knots.iter().map(|k| (k.lambda, k.active.clone())).collect::<Vec<_>>(), (path.truncated, path.complete));
            }
        }
    }

    #[test]
    fn lasso_at_matches_shooting() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = gaussian(&mut rng, 20, 10);
        let path = lars_path(&d, 900).unwrap();
        let l0 = path.lambda0();
        for i in 1..=10 {
            let lam = l0 * i as f64 / 11.0;
            let a = lasso_at(&path, lam).unwrap();
            let s = shooting_enet(&d, lam, 0.0, 1e-12, 100_000).unwrap();
            for (x, y) in a.iter().zip(&s.beta) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn enet_matches_shooting() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = gaussian(&mut rng, 15, 25);
        let sys = GramSystem::from_data(&d);
        for &(l1, l2) in &[(0.1, 0.5), (0.3, 0.05), (0.02, 1.0)] {
            let e = enet_gram(&sys, l1, l2, 900, LarsMode::Lasso);
            assert!(!e.truncated);
            let s = shooting_enet(&d, l1, l2, 1e-13, 200_000).unwrap();
            for (x, y) in e.beta.iter().zip(&s.beta) {
                assert!((x - y).abs() < 1e-6);
            }
            assert!(kkt_check(&d, l1, l2, &e.beta, 1e-8).unwrap().ok);
        }
    }

    #[test]
    fn intercept_is_profiled_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = DMatrix::from_fn(25, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(25, |i, _| 5.0 + x[(i, 0)] + 0.1 * rng.sample::<f64, _>(StandardNormal));
        let d = Dataset::new(x, y, true).unwrap();
        let path = lars_path(&d, 900).unwrap();
        let b = lasso_at(&path, 0.05).unwrap();
        assert_eq!(b.len(), 4);
        assert!(kkt_check(&d, 0.05, 0.0, &b, 1e-8).unwrap().ok);
        let s = shooting_enet(&d, 0.05, 0.0, 1e-13, 100_000).unwrap();
        for (u, v) in b.iter().zip(&s.beta) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn kkt_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = gaussian(&mut rng, 20, 5);
        let l0 = crate::objectives::lambda_max(&d);
        assert!(kkt_check(&d, l0, 0.0, &[0.0; 5], 1e-12).unwrap().ok);
        let ls = crate::linalg::least_squares(d.design(), d.y()).unwrap();
        assert!(kkt_check(&d, 0.0, 0.0, ls.as_slice(), 1e-10).unwrap().ok);
        let path = lars_path(&d, 900).unwrap();
        let k = &path.knots[2];
        let j = k.active[0];
        let mut b = k.beta.clone();
        b[j] += 0.1;
        assert!(!kkt_check(&d, k.lambda, 0.0, &b, 1e-8).unwrap().ok);
    }

    #[test]
    fn lar_mode_never_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = gaussian(&mut rng, 30, 8);
        let path = lars_gram(&GramSystem::from_data(&d), &LarsOptions { mode: LarsMode::Lar, ..Default::default() });
        for w in path.knots.windows(2) {
            assert!(w[1].active.len() >= w[0].active.len());
        }
        assert!(path.complete);
    }

    #[test]
    fn floor_stops_early_and_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = gaussian(&mut rng, 30, 8);
        let sys = GramSystem::from_data(&d);
        let full = lars_gram(&sys, &LarsOptions::default());
        let lam = full.lambda0() * 0.4;
        let part = lars_gram(&sys, &LarsOptions { floor: Some(lam), ..Default::default() });
        assert!(part.complete && !part.truncated);
        assert!((part.last_lambda() - lam).abs() < 1e-12);
        let a = full.beta_at(lam).unwrap();
        let b = part.beta_at(lam).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn paths_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = gaussian(&mut rng, 12, 20);
        assert_eq!(lars_path(&d, 900).unwrap(), lars_path(&d, 900).unwrap());
    }
}
