//! CSV ingestion, response selection, predictor screening and splitting.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::seed::Rng;
use crate::stats::mad;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', has_header: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

/// Rectangular numeric table stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub source: Option<PathBuf>,
    pub rejected: Vec<RejectedRow>,
}

impl RawTable {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch { expected: columns.len(), got: names.len() });
        }
        if let Some(first) = columns.first() {
            if let Some(c) = columns.iter().find(|c| c.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: c.len() });
            }
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("table values must be finite");
        }
        Ok(RawTable { names, columns, source: None, rejected: Vec::new() })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select(&self, cols: &[usize]) -> RawTable {
        RawTable {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            source: self.source.clone(),
            rejected: Vec::new(),
        }
    }

    /// Build a dataset from predictor columns and one response column.
    pub fn to_dataset(&self, response: usize, predictors: &[usize], intercept: bool) -> Result<Dataset> {
        let n = self.n_rows();
        if response >= self.n_cols() || predictors.iter().any(|&j| j >= self.n_cols()) {
            return invalid("column index out of range");
        }
        let x = DMatrix::from_fn(n, predictors.len(), |i, j| self.columns[predictors[j]][i]);
        let y = DVector::from_column_slice(&self.columns[response]);
        Dataset::new(x, y, intercept)
    }
}

pub fn load_csv(path: &Path, opts: CsvOptions) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::InputNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.has_header)
        .flexible(false)
        .from_reader(file);
    let mut names: Option<Vec<String>> =
        if opts.has_header { Some(rdr.headers()?.iter().map(|s| s.trim().to_string()).collect()) } else { None };
    let mut columns: Vec<Vec<f64>> = names.as_ref().map(|h| vec![Vec::new(); h.len()]).unwrap_or_default();
    let mut rejected = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::MalformedInput(format!(
                "ragged row at line {}: expected {expected_len} fields, found {len}",
                pos.as_ref().map_or(0, |p| p.line())
            )),
            _ => Error::Csv(e),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if names.is_none() {
            names = Some((0..rec.len()).map(|j| format!("V{}", j + 1)).collect());
            columns = vec![Vec::new(); rec.len()];
        }
        let parsed: std::result::Result<Vec<f64>, String> = rec
            .iter()
            .enumerate()
            .map(|(j, s)| match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(format!("non-finite value in column {}", j + 1)),
                Err(_) => Err(format!("non-numeric value '{}' in column {}", s.trim(), j + 1)),
            })
            .collect();
        match parsed {
            Ok(vals) => vals.into_iter().zip(columns.iter_mut()).for_each(|(v, c)| c.push(v)),
            Err(reason) => {
                log::warn!("{}: rejected line {line}: {reason}", path.display());
                rejected.push(RejectedRow { line, reason });
            }
        }
    }
    let names = names.unwrap_or_default();
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(Error::MalformedInput(format!("{}: no usable rows", path.display())));
    }
    Ok(RawTable { names, columns, source: Some(path.to_path_buf()), rejected })
}

/// Write with a header row; values use the shortest round-trip representation.
pub fn write_csv(table: &RawTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.names)?;
    for i in 0..table.n_rows() {
        w.write_record(table.columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Column whose MAD is the median of all column MADs; with an even count
/// the lower of the two middle ones.
pub fn select_response(table: &RawTable) -> Result<usize> {
    if table.n_cols() == 0 {
        return invalid("no response columns");
    }
    let mads = table.columns.iter().map(|c| mad(c)).collect::<Result<Vec<_>>>()?;
    if mads.iter().all(|&m| m == 0.0) {
        return Err(Error::DegenerateSelection("every response column has MAD 0".into()));
    }
    let mut order: Vec<usize> = (0..mads.len()).collect();
    order.sort_by(|&a, &b| mads[a].total_cmp(&mads[b]).then(a.cmp(&b)));
    Ok(order[(order.len() - 1) / 2])
}

/// Average ranks (1-based), ties share the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Robust correlation used for screening (Spearman's rank correlation).
pub fn robust_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: x.len() });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations".into()));
    }
    pearson(&ranks(x), &ranks(y)).ok_or_else(|| Error::UndefinedCorrelation("constant input".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenedColumn {
    pub index: usize,
    pub name: String,
    pub score: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screening {
    pub k1: usize,
    pub p_target: usize,
    pub columns: Vec<ScreenedColumn>,
}

impl Screening {
    pub fn indices(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.index).collect()
    }
}

/// Rank columns by `|corr(x_j, y)|` descending and keep the first `k1` and
/// the last `p_target - k1` of that ranking. Constant predictor columns
/// score 0.
pub fn screen_predictors(predictors: &RawTable, y: &[f64], k1: usize, p_target: usize) -> Result<Screening> {
    if p_target > predictors.n_cols() {
        return invalid(format!("p_target {p_target} exceeds the {} available columns", predictors.n_cols()));
    }
    if k1 > p_target {
        return invalid(format!("k1 ({k1}) must not exceed p_target ({p_target})"));
    }
    if y.len() != predictors.n_rows() {
        return Err(Error::DimensionMismatch { expected: predictors.n_rows(), got: y.len() });
    }
    let ry = ranks(y);
    if ry.iter().all(|&r| r == ry[0]) {
        return Err(Error::UndefinedCorrelation("response is constant".into()));
    }
    let scores: Vec<f64> = predictors
        .columns
        .par_iter()
        .map(|c| pearson(&ranks(c), &ry).map_or(0.0, f64::abs))
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let bottom = p_target - k1;
    let pick = |j: usize, reason: &str| ScreenedColumn {
        index: j,
        name: predictors.names[j].clone(),
        score: scores[j],
        reason: reason.to_string(),
    };
    let mut columns: Vec<ScreenedColumn> = order[..k1].iter().map(|&j| pick(j, "top")).collect();
    columns.extend(order[order.len() - bottom..].iter().map(|&j| pick(j, "bottom")));
    Ok(Screening { k1, p_target, columns })
}

/// Training-set size `round(ratio n)`.
pub fn train_size(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return invalid(format!("split ratio must lie in (0, 1), got {ratio}"));
    }
    if n < 2 {
        return invalid(format!("cannot split {n} rows"));
    }
    let k = (ratio * n as f64).round() as usize;
    if k == 0 || k == n {
        return invalid(format!("ratio {ratio} leaves an empty side for n = {n}"));
    }
    Ok(k)
}

/// Random row partition. When `test_pool` is given the test rows are drawn
/// from it only.
pub fn train_test_split_rows(n: usize, ratio: f64, test_pool: Option<&[usize]>, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = train_size(n, ratio)?;
    let n_test = n - k;
    let mut test = match test_pool {
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            all.truncate(n_test);
            all
        }
        Some(pool) => {
            if pool.len() < n_test {
                return invalid(format!("only {} rows eligible for a test set of {n_test}", pool.len()));
            }
            let mut pool = pool.to_vec();
            pool.shuffle(rng);
            pool.truncate(n_test);
            pool
        }
    };
    test.sort_unstable();
    let train = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
    Ok((train, test))
}

pub fn train_test_split(data: &Dataset, ratio: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    let (tr, te) = train_test_split_rows(data.n(), ratio, None, rng)?;
    Ok((data.subset_rows(&tr), data.subset_rows(&te)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_numeric_csv() {
        let f = write_tmp("a,b\n1,2\n3,4\n5,6\n");
        let t = load_csv(f.path(), CsvOptions::default()).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (3, 2));
        assert_eq!(t.columns[1], vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn rejects_non_numeric_row() {
        let f = write_tmp("a,b\n1,2\nx,4\n5,6\n");
        let t = load_csv(f.path(), CsvOptions::default()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.rejected.len(), 1);
        assert_eq!(t.rejected[0].line, 3);
    }

    #[test]
    fn load_errors() {
        let missing = load_csv(Path::new("/nonexistent/file.csv"), CsvOptions::default());
        assert!(matches!(missing, Err(Error::InputNotFound(_))));
        let ragged = write_tmp("a,b\n1,2\n3\n");
        assert!(matches!(load_csv(ragged.path(), CsvOptions::default()), Err(Error::MalformedInput(_))));
        let empty = write_tmp("a,b\nx,y\n");
        assert!(matches!(load_csv(empty.path(), CsvOptions::default()), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn headerless_and_delimiter() {
        let f = write_tmp("1;2\n3;4\n");
        let t = load_csv(f.path(), CsvOptions { delimiter: b';', has_header: false }).unwrap();
        assert_eq!(t.names, vec!["V1", "V2"]);
        assert_eq!(t.n_rows(), 2);
    }

    #[test]
    fn round_trip_full_precision() {
        let vals = vec![0.1 + 0.2, std::f64::consts::PI, -1e-300, 1.0 / 3.0];
        let t = RawTable::new(vec!["a".into()], vec![vals.clone()]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&t, f.path()).unwrap();
        let back = load_csv(f.path(), CsvOptions::default()).unwrap();
        assert_eq!(back.columns[0], vals);
    }

    fn with_mad(m: f64) -> Vec<f64> {
        vec![-m, 0.0, m]
    }

    #[test]
    fn response_selection() {
        let t = RawTable::new(vec!["a".into(), "b".into(), "c".into()], vec![with_mad(9.0), with_mad(1.0), with_mad(5.0)]).unwrap();
        assert_eq!(select_response(&t).unwrap(), 2);
        let four = RawTable::new((0..4).map(|i| i.to_string()).collect(), [3.0, 1.0, 4.0, 2.0].map(with_mad).to_vec()).unwrap();
        assert_eq!(select_response(&four).unwrap(), 3);
        let one = RawTable::new(vec!["a".into()], vec![with_mad(2.0)]).unwrap();
        assert_eq!(select_response(&one).unwrap(), 0);
        let flat = RawTable::new(vec!["a".into()], vec![vec![1.0; 3]]).unwrap();
        assert!(matches!(select_response(&flat), Err(Error::DegenerateSelection(_))));
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(robust_correlation(&x, &[1.0, 8.0, 27.0, 64.0]).unwrap(), 1.0);
        assert_eq!(robust_correlation(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(robust_correlation(&x, &[1.0; 4]), Err(Error::UndefinedCorrelation(_))));
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn split_sizes() {
        assert_eq!(train_size(59, 0.7).unwrap(), 41);
        assert_eq!(train_size(10, 0.5).unwrap(), 5);
        assert!(train_size(1, 0.5).is_err());
        assert!(train_size(10, 1.0).is_err());
        assert!(train_size(3, 0.1).is_err());
        let a = train_test_split_rows(59, 0.7, None, &mut rng_for(1, &[])).unwrap();
        let b = train_test_split_rows(59, 0.7, None, &mut rng_for(1, &[])).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.0.len(), a.1.len()), (41, 18));
    }
}
