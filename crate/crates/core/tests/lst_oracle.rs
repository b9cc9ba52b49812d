use lst_core::estimators::{fit_lst, AaConfig};
use lst_core::objectives::lst_objective;
use lst_core::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn grid_min(d: &Dataset) -> f64 {
    let axis: Vec<f64> = (0..=600).map(|a| -3.0 + a as f64 * 0.01).collect();
    let f = |b: &[f64]| lst_objective(d, b, 1.0).unwrap().total;
    if d.p() == 1 {
        axis.iter().map(|&v| f(&[v])).fold(f64::INFINITY, f64::min)
    } else {
        let mut best = f64::INFINITY;
        for &u in &axis {
            for &v in &axis {
                best = best.min(f(&[u, v]));
            }
        }
        best
    }
}

#[test]
fn fit_lst_reaches_grid_minimum_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 0..20 {
        let n = rng.random_range(3..=8);
        let p = rng.random_range(1..=2);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = DVector::from_fn(n, |i, _| (0..p).map(|j| x[(i, j)] * b[j]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal));
        let d = Dataset::new(x, y, false).unwrap();
        let fit = fit_lst(&d, 1.0, &AaConfig { seed: t, ..Default::default() }).unwrap();
        let g = grid_min(&d);
        assert!(fit.objective.total <= g + 1e-6, "instance {t}: fit {} grid {g}", fit.objective.total);
    }
}
