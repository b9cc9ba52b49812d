use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lst_core::data_io::{
    load_csv, screen_predictors, select_response, train_test_split_rows, write_csv, CsvOptions, RawTable,
};
use lst_core::error::{Error, Result};
use lst_core::estimators::{fit_method, fit_penalized_cv, freeze_penalty, Method};
use lst_core::evaluation::{breakdown_probe, fsdr_with, l2_error, rmse, tsdr_with};
use lst_core::seed::{rng_for, STREAM_SIM, STREAM_SPLIT};
use lst_core::simulation::{bound_study, gen_design, run_experiment, SimulationSpec, METRICS};
use lst_core::stats::mad;
use lst_core::Dataset;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::svg;
use crate::SCHEMA_VERSION;

/// Where artifacts go and which kinds are written.
pub struct Sink<'a> {
    pub dir: &'a Path,
    pub formats: &'a [Format],
}

impl Sink<'_> {
    fn wants(&self, f: Format) -> bool {
        self.formats.is_empty() || self.formats.contains(&f)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if self.wants(Format::Json) {
            write_json(&self.dir.join(name), value)?;
        }
        Ok(())
    }

    fn text(&self, kind: Format, name: &str, body: &str) -> Result<()> {
        if self.wants(kind) {
            fs::write(self.dir.join(name), body)?;
        }
        Ok(())
    }

    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_options(delimiter: char, no_header: bool) -> Result<CsvOptions> {
    if !delimiter.is_ascii() {
        return Err(Error::InvalidArgument(format!("delimiter must be a single ASCII character, got '{delimiter}'")));
    }
    Ok(CsvOptions { delimiter: delimiter as u8, has_header: !no_header })
}

fn resolve_column(table: &RawTable, spec: Option<&str>) -> Result<usize> {
    match spec {
        None => Ok(table.n_cols() - 1),
        Some(s) => table
            .column(s)
            .or_else(|| s.parse::<usize>().ok().filter(|&j| j < table.n_cols()))
            .ok_or_else(|| Error::InvalidArgument(format!("no response column '{s}'"))),
    }
}

/// Dataset with the chosen response and every other column as a predictor,
/// plus the coefficient names.
fn load_dataset(path: &Path, response: Option<&str>, opts: CsvOptions, intercept: bool) -> Result<(Dataset, Vec<String>, String)> {
    let table = load_csv(path, opts)?;
    if table.n_cols() < 2 {
        return Err(Error::MalformedInput("need at least one predictor and one response column".into()));
    }
    let r = resolve_column(&table, response)?;
    let preds: Vec<usize> = (0..table.n_cols()).filter(|&j| j != r).collect();
    let data = table.to_dataset(r, &preds, intercept)?;
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push("(intercept)".into());
    }
    names.extend(preds.iter().map(|&j| table.names[j].clone()));
    Ok((data, names, table.names[r].clone()))
}

pub fn fit(a: &FitArgs, seed: u64, sink: &Sink) -> Result<()> {
    let d = &a.data;
    let (data, names, response) =
        load_dataset(&d.input, d.response.as_deref(), csv_options(d.delimiter, d.no_header)?, d.intercept)?;
    let opts = method_options(&a.aa, &a.grid, seed);
    let fit = fit_method(&data, a.method, &opts)?;
    sink.json(
        "fit.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "fit",
            "response": response,
            "coefficient_names": names,
            "fit": fit,
        }),
    )?;
    let rows: Vec<Vec<String>> = names.iter().zip(&fit.beta).map(|(n, b)| vec![n.clone(), b.to_string()]).collect();
    sink.csv("coefficients.csv", &["name", "value"], &rows)
}

pub fn cv(a: &CvArgs, seed: u64, sink: &Sink) -> Result<()> {
    if !matches!(a.method, Method::Lasso | Method::Lars | Method::Enet) {
        return Err(Error::InvalidArgument(format!(
            "cv supports lasso, lars and enet; {} selects its penalty inside fit",
            a.method
        )));
    }
    let d = &a.data;
    let (data, names, response) =
        load_dataset(&d.input, d.response.as_deref(), csv_options(d.delimiter, d.no_header)?, d.intercept)?;
    let (fit, report) = fit_penalized_cv(&data, a.method, &a.grid.grid(), seed, a.step_cap)?;
    sink.json(
        "cv.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "cv",
            "response": response,
            "coefficient_names": names,
            "report": report,
            "fit": fit,
        }),
    )?;
    let mut rows = Vec::new();
    for (i, l) in report.lambdas.iter().enumerate() {
        for (k, al) in report.alphas.iter().enumerate() {
            rows.push(vec![l.to_string(), al.to_string(), report.error_surface[i][k].to_string()]);
        }
    }
    sink.csv("cv_surface.csv", &["lambda_star", "alpha_star", "cv_error"], &rows)
}

pub fn simulate(a: &SimulateArgs, seed: u64, sink: &Sink) -> Result<()> {
    let spec = a.sim.spec(a.reps, seed, a.split, a.clean_test);
    spec.validate()?;
    if a.method.is_empty() {
        return Err(Error::InvalidArgument("no methods given".into()));
    }
    let opts = method_options(&a.aa, &a.grid, seed);
    let table = run_experiment(&spec, &a.method, &opts)?;
    if sink.wants(Format::Csv) {
        table.write_csv(&sink.dir.join("metrics.csv"))?;
    }
    let mut per_method = BTreeMap::new();
    for &m in &table.methods {
        let metrics: BTreeMap<&str, _> = METRICS.iter().map(|&k| (k, table.summary(m, k))).collect();
        per_method.insert(m.to_string(), json!({ "metrics": metrics, "emse": table.emse(m) }));
    }
    sink.json(
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "spec": spec,
            "methods": per_method,
        }),
    )?;
    for metric in METRICS {
        let groups: Vec<(String, Vec<f64>)> =
            table.methods.iter().map(|&m| (m.to_string(), table.values(m, metric))).collect();
        let title = format!("{metric}: design {}, scheme {}, eps {}", spec.design, spec.scheme, spec.eps);
        sink.text(Format::Svg, &format!("boxplot_{metric}.svg"), &svg::boxplot(&title, &groups))?;
    }
    Ok(())
}

pub fn breakdown(a: &BreakdownArgs, seed: u64, sink: &Sink) -> Result<()> {
    let data = match &a.input {
        Some(path) => load_dataset(path, a.response.as_deref(), csv_options(a.delimiter, a.no_header)?, false)?.0,
        None => {
            let spec = SimulationSpec { n: a.n, p: a.p, sigma: a.sigma, replications: 1, seed, ..Default::default() };
            gen_design(&spec, &mut rng_for(seed, &[STREAM_SIM, 0]))?.data
        }
    };
    if a.deltas.is_empty() || a.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("deltas must be positive and finite".into()));
    }
    let opts = method_options(&a.aa, &a.grid, seed);
    let clean = fit_method(&data, a.method, &opts)?;
    let frozen = freeze_penalty(&clean, &opts)?;
    let trace = breakdown_probe(&data, |d| fit_method(d, a.method, &frozen), a.m, &a.deltas)?;
    sink.json(
        "breakdown.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "breakdown",
            "method": a.method,
            "n": data.n(),
            "p": data.p(),
            "penalty": clean.selected_penalty,
            "verdict": trace.verdict,
            "trace": trace,
        }),
    )?;
    let rows: Vec<Vec<String>> =
        trace.deltas.iter().zip(&trace.norms).map(|(d, n)| vec![d.to_string(), opt_num(*n)]).collect();
    sink.csv("breakdown.csv", &["delta", "norm"], &rows)?;
    let title = format!("{} with m = {}: {}", a.method, a.m, trace.verdict);
    sink.text(Format::Svg, "breakdown.svg", &svg::norm_trace(&title, &trace.deltas, &trace.norms, trace.clean_norm))
}

pub fn bound(a: &BoundArgs, seed: u64, sink: &Sink) -> Result<()> {
    let spec = a.sim.spec(a.reps, seed, 0.7, false);
    let study = bound_study(&spec, a.delta, a.lambda1_factor, a.lambda2, &aa_config(&a.aa, seed))?;
    sink.json(
        "bound.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "bound",
            "coverage": study.coverage,
            "study": study,
        }),
    )?;
    let rows: Vec<Vec<String>> = study
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.rhs_alt.to_string(),
                r.q1.to_string(),
                r.q2.to_string(),
                r.n_d.to_string(),
                r.holds.to_string(),
            ]
        })
        .collect();
    sink.csv("bound.csv", &["replication", "lhs", "rhs", "rhs_alt", "q1", "q2", "n_d", "holds"], &rows)
}

pub fn screen(a: &ScreenArgs, seed: u64, sink: &Sink) -> Result<()> {
    let opts = csv_options(a.delimiter, a.no_header)?;
    let preds = load_csv(&a.input, opts)?;
    let resp = load_csv(&a.responses, opts)?;
    if preds.n_rows() != resp.n_rows() {
        return Err(Error::DimensionMismatch { expected: preds.n_rows(), got: resp.n_rows() });
    }
    let j = select_response(&resp)?;
    let y = &resp.columns[j];
    let screening = screen_predictors(&preds, y, a.k1, a.p_target)?;
    let (train, test) = train_test_split_rows(preds.n_rows(), a.split, None, &mut rng_for(seed, &[STREAM_SPLIT]))?;
    sink.json(
        "manifest.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "screen",
            "response": { "index": j, "name": resp.names[j], "mad": mad(y)? },
            "rejected_rows": { "predictors": preds.rejected, "responses": resp.rejected },
            "screening": screening,
            "split": { "ratio": a.split, "train_rows": train, "test_rows": test },
        }),
    )?;
    if sink.wants(Format::Csv) {
        let mut selected = preds.select(&screening.indices());
        selected.names.push(resp.names[j].clone());
        selected.columns.push(y.clone());
        for (name, rows) in [("train.csv", &train), ("test.csv", &test)] {
            let part = RawTable::new(
                selected.names.clone(),
                selected.columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            )?;
            write_csv(&part, &sink.dir.join(name))?;
        }
    }
    Ok(())
}

pub fn metrics(a: &MetricsArgs, sink: &Sink) -> Result<()> {
    let l2 = l2_error(&a.beta0, &a.beta)?;
    let undefined = |r: Result<f64>| -> Result<Value> {
        match r {
            Ok(v) => Ok(json!(v)),
            Err(Error::UndefinedMetric(_)) => Ok(Value::Null),
            Err(e) => Err(e),
        }
    };
    let tsdr = undefined(tsdr_with(&a.beta0, &a.beta, a.threshold))?;
    let fsdr = undefined(fsdr_with(&a.beta0, &a.beta, a.threshold))?;
    let rmse = match &a.input {
        Some(path) => {
            let (test, _, _) =
                load_dataset(path, a.response.as_deref(), csv_options(a.delimiter, a.no_header)?, a.intercept)?;
            Some(rmse(&test, &a.beta)?)
        }
        None => None,
    };
    sink.json(
        "metrics.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "metrics",
            "l2_error": l2,
            "tsdr": tsdr,
            "fsdr": fsdr,
            "rmse": rmse,
        }),
    )?;
    let cell = |v: &Value| v.as_f64().map(|x| x.to_string()).unwrap_or_default();
    let rows = vec![
        vec!["l2_error".into(), l2.to_string()],
        vec!["tsdr".into(), cell(&tsdr)],
        vec!["fsdr".into(), cell(&fsdr)],
        vec!["rmse".into(), opt_num(rmse)],
    ];
    sink.csv("metrics.csv", &["metric", "value"], &rows)
}
