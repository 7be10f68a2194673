//! Empirical normality diagnostic.
//!
//! For Gaussian data the conditional covariance matrices on the cells of the
//! equal-variance partition of `Y = aX` coincide. The diagnostic estimates
//! them from a sample, reports their largest relative Frobenius disagreement,
//! and calibrates that number against datasets simulated from a Gaussian fit.
//! It is a diagnostic, not a test with exact critical values.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditional::covariance_to_correlation;
use crate::elliptical::sampling::substream;
use crate::elliptical::{sample, EllipticalModel, GeneratorFamily};
use crate::error::{Error, Result};
use crate::numerics::quantile_sorted;
use crate::partition::{equal_variance_partition, PartitionResult};
use crate::serde_mat;

/// Rows required per partition cell.
pub const ROWS_PER_CELL: usize = 50;
pub const MIN_RESAMPLES: usize = 200;
pub const BOOTSTRAP_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

/// Observations in rows, variables in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    data: DMatrix<f64>,
    column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(data: DMatrix<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::ShapeMismatch("data matrix is empty".into()));
        }
        if let Some(names) = &column_names {
            if names.len() != data.ncols() {
                return Err(Error::DimensionMismatch { expected: data.ncols(), got: names.len() });
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (col, row) = (pos / data.nrows(), pos % data.nrows());
            return Err(Error::InvalidArgument(format!("non-finite value at row {row}, column {col}")));
        }
        Ok(Self { data, column_names })
    }

    /// Parses comma-separated numbers; a first line with any non-numeric
    /// field is taken as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut names = None;
        let mut values = Vec::new();
        let mut width = None;
        let mut rows = 0;
        for (idx, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(idx + 1, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(idx + 1, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: Vec<_> = record.iter().map(str::parse::<f64>).collect();
            if idx == 0 && parsed.iter().any(|r| r.is_err()) {
                names = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
                width = Some(record.len());
                continue;
            }
            let expected = *width.get_or_insert(record.len());
            if record.len() != expected {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {expected} fields, found {}", record.len()),
                });
            }
            for (field, value) in record.iter().zip(parsed) {
                match value {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => return Err(Error::Parse { line, message: format!("not a finite number: {field:?}") }),
                }
            }
            rows += 1;
        }
        let cols = width.unwrap_or(0);
        if rows == 0 {
            return Err(Error::Parse { line: 1, message: "no data rows".into() });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, &values), names)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: &self.data * c, column_names: self.column_names.clone() }
    }
}

/// Sample covariance matrices of the rows falling in each quantile cell.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellCovariances {
    /// Empirical quantiles of `Y` at the requested levels.
    pub cutoffs: Vec<f64>,
    pub counts: Vec<usize>,
    #[serde(with = "serde_mat::matrices")]
    pub matrices: Vec<DMatrix<f64>>,
    /// Large-sample standard errors of the matrix entries.
    #[serde(with = "serde_mat::matrices")]
    pub stderr: Vec<DMatrix<f64>>,
}

/// Which matrices the statistic compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compare {
    #[default]
    Covariance,
    Correlation,
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one level is needed".into()));
    }
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::ProbabilityOutOfRange(l));
        }
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
    }
    Ok(())
}

/// Splits rows by the empirical quantiles of `y = a x` (type 7) into the
/// half-open cells `[q_i, q_{i+1})` and returns per-cell unbiased
/// covariance matrices.
pub fn empirical_conditional_covariances(data: &DataMatrix, a: &[f64], levels: &[f64]) -> Result<CellCovariances> {
    cell_covariances(&data.data, a, levels)
}

fn cell_covariances(x: &DMatrix<f64>, a: &[f64], levels: &[f64]) -> Result<CellCovariances> {
    let n = x.ncols();
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroWeightVector);
    }
    check_levels(levels)?;
    let weights = DVector::from_column_slice(a);
    let y: Vec<f64> = (0..x.nrows()).map(|r| x.row(r).transpose().dot(&weights)).collect();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let cutoffs: Vec<f64> = levels.iter().map(|&p| quantile_sorted(&sorted, p)).collect();

    let cells = levels.len() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cells];
    for (r, &yr) in y.iter().enumerate() {
        members[cutoffs.partition_point(|&q| q <= yr)].push(r);
    }
    let needed = n + 2;
    let mut matrices = Vec::with_capacity(cells);
    let mut stderr = Vec::with_capacity(cells);
    for (cell, rows) in members.iter().enumerate() {
        if rows.len() < needed {
            return Err(Error::CellTooSmall { cell, count: rows.len(), needed });
        }
        let (cov, se) = covariance_with_stderr(x, rows);
        matrices.push(cov);
        stderr.push(se);
    }
    Ok(CellCovariances { cutoffs, counts: members.iter().map(Vec::len).collect(), matrices, stderr })
}

fn covariance_with_stderr(x: &DMatrix<f64>, rows: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.ncols();
    let m = rows.len() as f64;
    let mut mean = DVector::zeros(n);
    for &r in rows {
        mean += x.row(r).transpose();
    }
    mean /= m;
    let mut cross = DMatrix::<f64>::zeros(n, n);
    let mut fourth = DMatrix::<f64>::zeros(n, n);
    for &r in rows {
        let d = x.row(r).transpose() - &mean;
        for i in 0..n {
            for j in 0..n {
                let p = d[i] * d[j];
                cross[(i, j)] += p;
                fourth[(i, j)] += p * p;
            }
        }
    }
    let cov = &cross / (m - 1.0);
    let biased = &cross / m;
    let se = DMatrix::from_fn(n, n, |i, j| {
        let v: f64 = fourth[(i, j)] / m - biased[(i, j)] * biased[(i, j)];
        (v.max(0.0) / m).sqrt()
    });
    (cov, se)
}

/// `max_{i<j} ||M_i - M_j||_F / ||(M_i + M_j) / 2||_F`.
pub fn equality_statistic(matrices: &[DMatrix<f64>]) -> Result<f64> {
    if matrices.len() < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 matrices, got {}", matrices.len())));
    }
    let shape = matrices[0].shape();
    if let Some(m) = matrices.iter().find(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", shape, m.shape())));
    }
    let mut worst: f64 = 0.0;
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            let diff = (&matrices[i] - &matrices[j]).norm();
            let mid = ((&matrices[i] + &matrices[j]) * 0.5).norm();
            worst = worst.max(if diff == 0.0 { 0.0 } else { diff / mid });
        }
    }
    Ok(worst)
}

fn statistic(cells: &CellCovariances, compare: Compare) -> Result<f64> {
    match compare {
        Compare::Covariance => equality_statistic(&cells.matrices),
        Compare::Correlation => {
            let cors: Vec<_> = cells.matrices.iter().map(covariance_to_correlation).collect();
            equality_statistic(&cors)
        }
    }
}

/// Quantiles of the statistic over datasets simulated from a Gaussian fit.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BootstrapReference {
    pub resamples: usize,
    pub seed: u64,
    /// `(level, quantile)` pairs at [`BOOTSTRAP_LEVELS`].
    pub quantiles: Vec<(f64, f64)>,
}

impl BootstrapReference {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|(l, _)| *l == level).map(|&(_, q)| q)
    }
}

/// Fits a Gaussian to `data`, simulates `resamples` datasets of the same
/// size and returns quantiles of their statistics. Resample `r` draws from
/// its own substream of `seed`.
pub fn bootstrap_reference(
    data: &DataMatrix,
    a: &[f64],
    levels: &[f64],
    resamples: usize,
    seed: u64,
    compare: Compare,
) -> Result<BootstrapReference> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidArgument(format!("at least {MIN_RESAMPLES} resamples are needed, got {resamples}")));
    }
    check_levels(levels)?;
    let x = &data.data;
    let m = x.nrows();
    let all: Vec<usize> = (0..m).collect();
    let (cov, _) = covariance_with_stderr(x, &all);
    let mean = x.row_mean().transpose();
    let fitted = EllipticalModel::new(mean, cov, GeneratorFamily::Gaussian)?;
    let mut stats = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let sub_seed = substream(seed, r as u64).next_u64();
            let sim = sample(&fitted, m, sub_seed)?;
            statistic(&cell_covariances(&sim.data, a, levels)?, compare)
        })
        .collect::<Result<Vec<_>>>()?;
    stats.sort_by(f64::total_cmp);
    Ok(BootstrapReference {
        resamples,
        seed,
        quantiles: BOOTSTRAP_LEVELS.iter().map(|&p| (p, quantile_sorted(&stats, p))).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticReport {
    pub partition: PartitionResult,
    pub compare: Compare,
    pub rows: usize,
    pub cutoffs: Vec<f64>,
    #[serde(with = "serde_mat::matrices")]
    pub cell_covariances: Vec<DMatrix<f64>>,
    pub cell_counts: Vec<usize>,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_quantiles: Option<Vec<(f64, f64)>>,
    /// Bootstrap resamples drawn (0 without a bootstrap).
    pub draws: usize,
}

impl DiagnosticReport {
    /// Bootstrap quantile at `level`, if a bootstrap was run.
    pub fn bootstrap_quantile(&self, level: f64) -> Option<f64> {
        self.bootstrap_quantiles.as_ref()?.iter().find(|(l, _)| *l == level).map(|&(_, q)| q)
    }
}

/// Runs the diagnostic on the `k`-level equal-variance partition, with an
/// optional bootstrap of `(resamples, seed)`.
pub fn diagnose(
    data: &DataMatrix,
    a: &[f64],
    k: usize,
    bootstrap: Option<(usize, u64)>,
    compare: Compare,
) -> Result<DiagnosticReport> {
    let partition = equal_variance_partition(k)?;
    let needed = ROWS_PER_CELL * (k + 1);
    if data.rows() < needed {
        return Err(Error::TooFewRows { rows: data.rows(), cells: k + 1, needed });
    }
    let cells = empirical_conditional_covariances(data, a, &partition.levels)?;
    let stat = statistic(&cells, compare)?;
    let reference = match bootstrap {
        Some((resamples, seed)) => Some(bootstrap_reference(data, a, &partition.levels, resamples, seed, compare)?),
        None => None,
    };
    Ok(DiagnosticReport {
        compare,
        rows: data.rows(),
        cutoffs: cells.cutoffs,
        cell_counts: cells.counts,
        cell_covariances: cells.matrices,
        statistic: stat,
        draws: reference.as_ref().map_or(0, |r| r.resamples),
        bootstrap_quantiles: reference.map(|r| r.quantiles),
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert_eq!(equality_statistic(&[i.clone(), i.clone()]).unwrap(), 0.0);
        let s = equality_statistic(&[i.clone(), &i * 2.0]).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
        let s3 = equality_statistic(&[i.clone(), &i * 2.0, &i * 4.0]).unwrap();
        // worst pair is (1, 4): 3 / 2.5
        assert!((s3 - 1.2).abs() < 1e-15);
        assert!(matches!(equality_statistic(&[i.clone()]), Err(Error::ShapeMismatch(_))));
        let j = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(equality_statistic(&[i, j]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn csv_with_and_without_header() {
        let d = DataMatrix::read_csv("x1,x2\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(d.rows(), 2);
        assert_eq!(d.column_names().unwrap(), ["x1", "x2"]);
        let d = DataMatrix::read_csv("1, 2\n3,4\n\n5,6\n".as_bytes()).unwrap();
        assert_eq!(d.rows(), 3);
        assert_eq!(d.data()[(2, 1)], 6.0);
        assert!(d.column_names().is_none());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match DataMatrix::read_csv("x1,x2\n1,2\n3,oops\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match DataMatrix::read_csv("1,2\n3\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cells_partition_the_rows() {
        let x = DMatrix::from_fn(200, 2, |r, c| ((r * 37 + c * 11) % 101) as f64);
        let data = DataMatrix::new(x, None).unwrap();
        let cells = empirical_conditional_covariances(&data, &[1.0, 0.5], &[0.2, 0.5, 0.9]).unwrap();
        assert_eq!(cells.counts.iter().sum::<usize>(), 200);
        assert!(matches!(empirical_conditional_covariances(&data, &[0.0, 0.0], &[0.5]), Err(Error::ZeroWeightVector)));
        assert!(matches!(
            empirical_conditional_covariances(&data, &[1.0, 0.0], &[0.001, 0.5]),
            Err(Error::CellTooSmall { cell: 0, .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let data = DataMatrix::new(DMatrix::from_fn(100, 2, |r, c| (r + c) as f64), None).unwrap();
        assert!(matches!(diagnose(&data, &[1.0, 1.0], 2, None, Compare::Covariance), Err(Error::TooFewRows { .. })));
    }
}
