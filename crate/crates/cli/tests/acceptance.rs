//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use lst_core::estimators::{
    fit_lasso, fit_lst, fit_lst_enet, fit_method, fit_penalized_cv, freeze_penalty, AaConfig, Method, MethodOptions,
};
use lst_core::evaluation::{
    breakdown_probe, emse, equivariance_check, fsdr, l2_error, rmse, theoretical_rbp, tsdr, EquivarianceTarget,
    RbpKind, Transform, Verdict,
};
use lst_core::model_selection::CvGrid;
use lst_core::objectives::{lst_enet_objective, lst_enet_objective_mixing, reparam_augment, reparam_mixing, PenaltySpec};
use lst_core::seed::{rng_for, STREAM_SIM};
use lst_core::simulation::{bound_study, full_sample_emse, gen_design, run_experiment, Scheme, SimulationSpec};
use lst_core::solvers::{kkt_check, lars_path, lasso_at, shooting_enet};
use lst_core::stats::trim_weights;
use lst_core::objectives::lst_objective;
use lst_core::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Tolerances and thresholds.
const A1_SLACK: f64 = 1e-6;
const A2_KKT_TOL: f64 = 1e-8;
const A2_AGREE_TOL: f64 = 1e-6;
const A3_TOL: f64 = 1e-10;
const A4_TOL: f64 = 1e-8;
const B3_EMSE_RANGE: (f64, f64) = (0.15, 0.45);
const B4_MIN_COVERAGE: f64 = 0.90;

const DELTAS: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

type Check = std::result::Result<String, String>;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn small_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let x = gaussian(rng, n, p);
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = DVector::from_fn(n, |i, _| (0..p).map(|j| x[(i, j)] * b[j]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal));
    Dataset::new(x, y, false).unwrap()
}

fn a1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let axis: Vec<f64> = (0..=600).map(|a| -3.0 + a as f64 * 0.01).collect();
    let mut worst = f64::NEG_INFINITY;
    for t in 0..20u64 {
        let n = rng.random_range(3..=8);
        let p = rng.random_range(1..=2);
        let d = small_instance(&mut rng, n, p);
        let fit = fit_lst(&d, 1.0, &AaConfig { seed: t, ..Default::default() }).map_err(|e| e.to_string())?;
        let f = |b: &[f64]| lst_objective(&d, b, 1.0).unwrap().total;
        let grid = if p == 1 {
            axis.iter().map(|&u| f(&[u])).fold(f64::INFINITY, f64::min)
        } else {
            let mut best = f64::INFINITY;
            for &u in &axis {
                for &v in &axis {
                    best = best.min(f(&[u, v]));
                }
            }
            best
        };
        worst = worst.max(fit.objective.total - grid);
        if fit.objective.total > grid + A1_SLACK {
            return Err(format!("instance {t} (n={n}, p={p}): fit {} > grid {grid}", fit.objective.total));
        }
    }
    Ok(format!("20 instances, max(fit - grid) = {worst:.3e}"))
}

fn a2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_kkt, mut worst_gap, mut wide) = (0.0f64, 0.0f64, 0);
    for i in 0..500 {
        let n = rng.random_range(2..=30);
        let p = rng.random_range(1..=15);
        wide += (p > n) as usize;
        let x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let d = Dataset::new(x, y, false).unwrap();
        let path = lars_path(&d, 900).map_err(|e| e.to_string())?;
        for k in &path.knots {
            let r = kkt_check(&d, k.lambda, 0.0, &k.beta, A2_KKT_TOL).map_err(|e| e.to_string())?;
            worst_kkt = worst_kkt.max(r.max_violation);
            if !r.ok {
                return Err(format!("instance {i} (n={n}, p={p}): knot at {} violates KKT by {:e}", k.lambda, r.max_violation));
            }
        }
        let l0 = path.lambda0();
        for s in 1..=10 {
            let lam = l0 * s as f64 / 11.0;
            let a = lasso_at(&path, lam).map_err(|e| e.to_string())?;
            let b = shooting_enet(&d, lam, 0.0, 1e-13, 1_000_000).map_err(|e| e.to_string())?;
            let gap = a.iter().zip(&b.beta).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            worst_gap = worst_gap.max(gap);
            if gap > A2_AGREE_TOL {
                return Err(format!("instance {i} (n={n}, p={p}): lasso_at vs shooting gap {gap:e} at lambda {lam}"));
            }
        }
    }
    if wide == 0 {
        return Err("no instance with p > n was drawn".into());
    }
    Ok(format!("500 instances ({wide} with p > n), max KKT violation {worst_kkt:.2e}, max gap {worst_gap:.2e}"))
}

fn a3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst_aug, mut worst_mix) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let n = rng.random_range(3..20);
        let p = rng.random_range(1..8);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let d = Dataset::new(x, y, false).unwrap();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let l1 = rng.random_range(0.0..2.0);
        let l2 = rng.random_range(0.01..3.0);
        let gamma = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
        let alpha = rng.random_range(1.0..3.0);
        let spec = PenaltySpec::new(l1, l2, gamma, alpha).map_err(|e| e.to_string())?;
        let direct = lst_enet_objective(&d, &beta, &spec).map_err(|e| e.to_string())?.total;

        let aug = reparam_augment(&d, l2).map_err(|e| e.to_string())?;
        let via = aug
            .objective(&aug.to_star(&beta), aug.lambda1_star(l1, gamma), gamma, alpha)
            .map_err(|e| e.to_string())?
            .total;
        let e_aug = (direct - via).abs() / (1.0 + direct.abs());

        let (ls, a) = reparam_mixing(l1, l2).map_err(|e| e.to_string())?;
        let mixed = lst_enet_objective_mixing(&d, &beta, ls, a, gamma, alpha).map_err(|e| e.to_string())?.total;
        let e_mix = (direct - mixed).abs() / (1.0 + direct.abs());

        worst_aug = worst_aug.max(e_aug);
        worst_mix = worst_mix.max(e_mix);
        if e_aug > A3_TOL || e_mix > A3_TOL {
            return Err(format!("tuple {i}: augmentation error {e_aug:e}, mixing error {e_mix:e}"));
        }
    }
    Ok(format!("200 tuples, augmentation {worst_aug:.2e}, mixing {worst_mix:.2e}"))
}

fn a4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = rng.random_range(6..25);
        let p = rng.random_range(1..5);
        let d = small_instance(&mut rng, n, p);
        let probes: Vec<Vec<f64>> = (0..5).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s = rng.random_range(0.2..5.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let mut a = gaussian(&mut rng, p, p);
        for j in 0..p {
            a[(j, j)] += 3.0;
        }
        let a: Vec<f64> = (0..p * p).map(|k| a[(k / p, k % p)]).collect();
        let alpha = rng.random_range(1.0..3.0);
        for t in [Transform::Regression(b.clone()), Transform::Scale(s), Transform::Affine(a)] {
            let rep = equivariance_check(&EquivarianceTarget::Lst { alpha }, &d, &t, &probes, A4_TOL)
                .map_err(|e| e.to_string())?;
            let e = rep.objective_error.unwrap_or(f64::INFINITY);
            worst = worst.max(e);
            if !rep.holds {
                return Err(format!("instance {i}: {t:?} identity off by {e:e}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let d = small_instance(&mut rng, 20, 3);
    let rep = equivariance_check(&EquivarianceTarget::Ridge { lambda: 1.0 }, &d, &Transform::Regression(vec![2.0, -1.0, 3.0]), &[], A4_TOL)
        .map_err(|e| e.to_string())?;
    if rep.holds {
        return Err("ridge passed the regression-equivariance check".into());
    }
    Ok(format!(
        "150 LST identities, max error {worst:.2e}; ridge violation {:.3}",
        rep.estimate_error.unwrap_or(f64::NAN)
    ))
}

fn a5() -> Check {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let b0 = [1.0, 1.0, 0.0, 0.0];
    let b = [0.5, 0.0, 0.0, 0.0];
    check("l2 equal", l2_error(&[1.0, 2.0], &[1.0, 2.0]).ok() == Some(0.0));
    check("l2 swap", l2_error(&[1.0, 0.0], &[0.0, 1.0]).ok() == Some(2.0));
    check("tsdr example", tsdr(&b0, &b).ok() == Some(1.0));
    check("tsdr all nonzero", tsdr(&b0, &[1.0; 4]).ok() == Some(0.0));
    check("tsdr exact", tsdr(&b0, &b0).ok() == Some(1.0));
    check("fsdr example", fsdr(&b0, &b).ok() == Some(0.5));
    check("fsdr exact", fsdr(&b0, &b0).ok() == Some(0.0));
    check("fsdr zero", fsdr(&b0, &[0.0; 4]).ok() == Some(1.0));
    let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
    let d = Dataset::new(x, DVector::from_vec(vec![2.0, 4.0, 6.0]), false).unwrap();
    check("rmse exact", rmse(&d, &[2.0]).ok() == Some(0.0));
    let shifted = d.with_response(DVector::from_vec(vec![2.25, 4.25, 6.25])).unwrap();
    check("rmse constant residual", rmse(&shifted, &[2.0]).ok() == Some(0.25));
    check("emse identical", emse(&[vec![1.0, 2.0], vec![1.0, 2.0]]).ok() == Some(0.0));
    check("emse scalars", emse(&[vec![0.0], vec![2.0]]).ok() == Some(1.0));
    let rbp = |n, p, kind, k| theoretical_rbp(n, p, kind, k).ok().map(|f| (f.num, f.den));
    check("rbp lst p=1", rbp(11, 1, RbpKind::Lst, None) == Some((6, 11)));
    check("rbp lst p=3", rbp(10, 3, RbpKind::Lst, None) == Some((4, 10)));
    check("rbp penalized", rbp(10, 0, RbpKind::Penalized, Some(5)) == Some((6, 10)));
    if failed.is_empty() {
        Ok("15 examples exact; rbp 6/11, 4/10, 6/10".into())
    } else {
        Err(format!("failed: {}", failed.join(", ")))
    }
}

fn a6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut calls = 0;
    let mut min_margin = i64::MAX;
    while calls < 1000 {
        let n = rng.random_range(2..200);
        let heavy = rng.random_bool(0.3);
        let r: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                if heavy && rng.random_bool(0.2) { z * 1e3 } else { z }
            })
            .collect();
        let t = trim_weights(&r, 1.0).map_err(|e| e.to_string())?;
        if t.degenerate {
            continue;
        }
        calls += 1;
        let floor = (n + 1) / 2;
        min_margin = min_margin.min(t.k as i64 - floor as i64);
        if t.k < floor {
            return Err(format!("n={n}: kept {} < {floor}", t.k));
        }
    }
    Ok(format!("1000 calls, min k - floor((n+1)/2) = {min_margin}"))
}

fn design_one(n: usize, p: usize, seed: u64) -> Dataset {
    let spec = SimulationSpec { n, p, sigma: 0.5, replications: 1, seed, ..Default::default() };
    gen_design(&spec, &mut rng_for(seed, &[STREAM_SIM, 0])).unwrap().data
}

fn fmt_norms(norms: &[Option<f64>]) -> String {
    norms.iter().map(|v| v.map_or("fail".into(), |x| format!("{x:.3e}"))).collect::<Vec<_>>().join(", ")
}

fn b1() -> Check {
    let data = design_one(50, 10, 1);
    let (fit, _) = fit_penalized_cv(&data, Method::Lasso, &CvGrid::default(), 1, 900).map_err(|e| e.to_string())?;
    let l1 = fit.selected_penalty.map(|p| p.lambda1).unwrap_or(0.0);
    let tr = breakdown_probe(&data, |d| fit_lasso(d, l1), 1, &DELTAS).map_err(|e| e.to_string())?;
    let msg = format!("verdict {}, growth {:?}, norms [{}]", tr.verdict, tr.growth, fmt_norms(&tr.norms));
    if tr.verdict == Verdict::Broken { Ok(msg) } else { Err(msg) }
}

fn b2() -> Check {
    let data = design_one(50, 10, 1);
    let opts = MethodOptions {
        config: AaConfig { outer_repeats: 10, seed: 1, ..Default::default() },
        grid: CvGrid::relative(5, 5).with_cv(5, 1),
        ..Default::default()
    };
    let clean = fit_method(&data, Method::LstEnet, &opts).map_err(|e| e.to_string())?;
    let frozen = freeze_penalty(&clean, &opts).map_err(|e| e.to_string())?;
    let m = data.n() / 2 - 1;
    let tr = breakdown_probe(&data, |d| fit_lst_enet(d, &frozen.config, &frozen.grid), m, &DELTAS)
        .map_err(|e| e.to_string())?;
    let max = tr.norms.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    let msg = format!("m={m}, verdict {}, clean {:.3}, max {:.3}", tr.verdict, tr.clean_norm, max);
    if tr.verdict == Verdict::Bounded { Ok(msg) } else { Err(msg) }
}

fn b3() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for eps in [0.05, 0.10] {
        let spec = SimulationSpec {
            n: 100,
            p: 5,
            sigma: 1.0,
            eps,
            scheme: Scheme::I,
            replications: 100,
            seed: 3,
            ..Default::default()
        };
        let res = full_sample_emse(&spec, &[Method::Lst, Method::Lts], &MethodOptions::default()).map_err(|e| e.to_string())?;
        let (lst, lts) = match (res[&Method::Lst], res[&Method::Lts]) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(format!("eps {eps}: EMSE undefined")),
        };
        let in_range = (B3_EMSE_RANGE.0..=B3_EMSE_RANGE.1).contains(&lst);
        ok &= lst <= lts && in_range;
        parts.push(format!("eps {eps}: LST {lst:.4} vs LTS {lts:.4}{}{}", if lst <= lts { "" } else { " (LST > LTS)" }, if in_range { "" } else { " (out of range)" }));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn b4() -> Check {
    let spec = SimulationSpec { n: 100, p: 20, sigma: 0.5, replications: 200, seed: 4, ..Default::default() };
    let st = bound_study(&spec, 0.1, 1.0, 0.0, &AaConfig::default()).map_err(|e| e.to_string())?;
    let msg = format!("bound holds in {}/{} runs ({:.3})", st.holds, st.replications, st.coverage);
    if st.coverage >= B4_MIN_COVERAGE { Ok(msg) } else { Err(msg) }
}

fn reduced_options(outer: usize) -> MethodOptions {
    MethodOptions {
        config: AaConfig { outer_repeats: outer, ..Default::default() },
        grid: CvGrid::relative(5, 5).with_cv(5, 1),
        ..Default::default()
    }
}

fn median_of(tab: &lst_core::simulation::ExperimentTable, m: Method, metric: &str) -> std::result::Result<f64, String> {
    tab.summary(m, metric).median.ok_or_else(|| format!("{m}: no {metric} values"))
}

fn b5() -> Check {
    let spec = SimulationSpec { n: 50, p: 100, eps: 0.1, scheme: Scheme::II, replications: 20, seed: 5, ..Default::default() };
    let tab = run_experiment(&spec, &[Method::LstEnet, Method::Lasso], &reduced_options(5)).map_err(|e| e.to_string())?;
    let (l2_a, l2_b) = (median_of(&tab, Method::LstEnet, "l2_error")?, median_of(&tab, Method::Lasso, "l2_error")?);
    let (f_a, f_b) = (median_of(&tab, Method::LstEnet, "fsdr")?, median_of(&tab, Method::Lasso, "fsdr")?);
    let msg = format!("median L2 lst-enet {l2_a:.3} vs lasso {l2_b:.3e}; median FSDR {f_a:.3} vs {f_b:.3}");
    if l2_a < l2_b && f_a <= f_b { Ok(msg) } else { Err(msg) }
}

fn b6() -> Check {
    let spec = SimulationSpec { n: 100, p: 50, eps: 0.0, replications: 20, seed: 6, ..Default::default() };
    let methods = [Method::LstEnet, Method::Lasso, Method::Lars];
    let tab = run_experiment(&spec, &methods, &reduced_options(10)).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for m in methods {
        let f = median_of(&tab, m, "fsdr")?;
        ok &= f == 0.0;
        parts.push(format!("{m} {f}"));
    }
    let msg = format!("median FSDR: {}", parts.join(", "));
    if ok { Ok(msg) } else { Err(msg) }
}

fn write_inputs(dir: &Path) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut body = String::from("x1,x2,x3,y\n");
    for _ in 0..30 {
        let x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let e: f64 = rng.sample(StandardNormal);
        body += &format!("{},{},{},{}\n", x[0], x[1], x[2], 2.0 * x[0] - x[2] + 0.3 * e);
    }
    fs::write(dir.join("data.csv"), body)?;
    let mut preds = String::from((0..8).map(|j| format!("g{j}")).collect::<Vec<_>>().join(",") + "\n");
    let mut resp = String::from("r0,r1,r2\n");
    for _ in 0..20 {
        let row: Vec<String> = (0..8).map(|_| rng.sample::<f64, _>(StandardNormal).to_string()).collect();
        preds += &(row.join(",") + "\n");
        let r: Vec<String> = (0..3).map(|k| (rng.sample::<f64, _>(StandardNormal) * (k + 1) as f64).to_string()).collect();
        resp += &(r.join(",") + "\n");
    }
    fs::write(dir.join("preds.csv"), preds)?;
    fs::write(dir.join("resp.csv"), resp)
}

fn read_tree(dir: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        out.push((e.file_name().to_string_lossy().into_owned(), fs::read(e.path())?));
    }
    out.sort();
    Ok(out)
}

fn c() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = tmp.path();
    write_inputs(base).map_err(|e| e.to_string())?;
    let s = |p: &str| base.join(p).to_string_lossy().into_owned();
    let small_aa = ["--outer-repeats", "3", "--n-lambda", "3", "--n-mix", "2", "--cv-repeats", "1"];
    let mut cases: Vec<(&str, Vec<String>)> = vec![
        ("fit", vec!["fit".into(), "--input".into(), s("data.csv"), "--method".into(), "lst-enet".into()]),
        ("cv", vec!["cv".into(), "--input".into(), s("data.csv")]),
        ("simulate", "simulate --n 30 --p 8 --reps 3 --eps 0.1 --method lst-enet,lasso,lars,enet".split(' ').map(String::from).collect()),
        ("breakdown", "breakdown --n 30 --p 5".split(' ').map(String::from).collect()),
        ("bound", "bound --n 40 --p 5 --reps 4 --outer-repeats 3".split(' ').map(String::from).collect()),
        ("screen", vec!["screen".into(), "--input".into(), s("preds.csv"), "--responses".into(), s("resp.csv"), "--k1".into(), "2".into(), "--p-target".into(), "4".into()]),
        ("metrics", "metrics --beta0 1,1,0,0 --beta 0.5,0,0,0.2".split(' ').map(String::from).collect()),
    ];
    for (name, args) in cases.iter_mut() {
        if matches!(*name, "fit" | "simulate") {
            args.extend(small_aa.iter().map(|s| s.to_string()));
        }
        if *name == "cv" {
            args.extend(small_aa[2..].iter().map(|s| s.to_string()));
        }
    }
    let max_threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_lstreg"));
    let mut files = 0;
    for (name, args) in &cases {
        let mut trees = Vec::new();
        for threads in [1, max_threads] {
            let out = base.join(format!("{name}-{threads}"));
            let st = Command::new(&bin)
                .args(args)
                .args(["--seed", "17", "--threads", &threads.to_string(), "--output-dir"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !st.status.success() {
                return Err(format!("{name} --threads {threads} exited {:?}: {}", st.status.code(), String::from_utf8_lossy(&st.stderr)));
            }
            trees.push(read_tree(&out).map_err(|e| e.to_string())?);
        }
        if trees[0] != trees[1] {
            let names: Vec<&str> = trees[0].iter().zip(&trees[1]).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
            return Err(format!("{name}: outputs differ between 1 and {max_threads} threads: {names:?}"));
        }
        files += trees[0].len();
    }
    Ok(format!("7 commands, {files} files byte-identical at 1 and {max_threads} threads"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("B1", b1),
        ("B2", b2),
        ("B3", b3),
        ("B4", b4),
        ("B5", b5),
        ("B6", b6),
        ("C", c),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (id, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS {id} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {id} ({secs:.1}s): {msg}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
