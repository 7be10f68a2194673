//! Quantile partitions of (0, 1) whose cells share a common conditional
//! variance (Gaussian) or a common K'-invariant (any generator).
//!
//! The solver bisects on the shared cell value `v`. For a given `v` the
//! boundaries are placed left to right so that each cell attains `v`; the
//! sign of `value(last cell) - v` then tells which way to move. Cell values
//! are handled on a log scale oriented to increase with the right endpoint.

use std::cell::Cell;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conditional::{conditional_covariance, conditional_covariance_mc, ConditionalReport};
use crate::elliptical::{EllipticalModel, FamilySpec, GeneratorFamily};
use crate::error::{Error, Result};
use crate::invariants::{k_invariant, standard_truncated};
use crate::numerics::roots::brent;
use crate::subset::ProbabilitySubset;

pub const MAX_LEVELS_VARIANCE: usize = 12;
pub const MIN_CELLS_KPRIME: usize = 2;
pub const MAX_CELLS_KPRIME: usize = 8;

const OUTER_ITER: usize = 200;
const INNER_ITER: usize = 200;
const OUTER_TOL: f64 = 1e-13;
const INNER_TOL: f64 = 1e-13;
const MONOTONE_SLACK: f64 = 1e-8;

/// Degrees of freedom of the Student-t rows of the equal-K' table.
pub const TABLE2_NU: [f64; 9] = [3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 25.0, 50.0, 100.0];

/// Which per-cell quantity is equalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellObjective {
    /// Conditional variance of the standardized margin.
    Variance,
    /// The K'-invariant.
    KPrime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionResult {
    pub levels: Vec<f64>,
    pub cell_values: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Largest pairwise gap between cell values.
    pub residual: f64,
    pub family: FamilySpec,
    pub objective: CellObjective,
}

impl PartitionResult {
    pub fn cells(&self) -> usize {
        self.levels.len() + 1
    }

    /// Probability carried by each cell.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.levels.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&self.levels);
        edges.push(1.0);
        edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn subsets(&self) -> Result<Vec<ProbabilitySubset>> {
        ProbabilitySubset::cells(&self.levels)
    }
}

struct Solver<'a> {
    family: &'a GeneratorFamily,
    objective: CellObjective,
    evaluations: Cell<usize>,
}

enum Sweep {
    /// Boundaries placed; carries `value(last cell) - v`.
    Placed(Vec<f64>, f64),
    /// Some cell cannot reach `v` even when stretched to 1.
    TooHigh,
    /// Even an infinitesimal cell exceeds `v`, so `v` is below the root.
    TooLow,
}

impl Solver<'_> {
    /// Oriented log cell value: increasing in `hi` for fixed `lo`.
    fn score(&self, lo: f64, hi: f64) -> Result<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        let cell = ProbabilitySubset::interval(lo, hi)?;
        match self.objective {
            CellObjective::Variance => {
                let (_, var, _) = standard_truncated(self.family, &cell)?;
                Ok(var.ln())
            }
            CellObjective::KPrime => Ok(-k_invariant(self.family, &cell)?.k_prime.ln()),
        }
    }

    fn cell_value(&self, score: f64) -> f64 {
        match self.objective {
            CellObjective::Variance => score.exp(),
            CellObjective::KPrime => (-score).exp(),
        }
    }

    fn sweep(&self, cells: usize, v: f64) -> Result<Sweep> {
        let mut levels = Vec::with_capacity(cells - 1);
        let mut lo = 0.0;
        for _ in 1..cells {
            if self.score(lo, 1.0)? < v {
                return Ok(Sweep::TooHigh);
            }
            let start = lo + (1.0 - lo) * 1e-12;
            if self.score(lo, start)? > v {
                return Ok(Sweep::TooLow);
            }
            let mut trace = Vec::new();
            let root = brent(
                |hi| {
                    let s = self.score(lo, hi)?;
                    trace.push((hi, s));
                    Ok(s - v)
                },
                start,
                1.0,
                INNER_TOL,
                INNER_ITER,
            )?;
            check_monotone(&mut trace)?;
            lo = root.x;
            if !(lo < 1.0) {
                return Ok(Sweep::TooHigh);
            }
            levels.push(lo);
        }
        let last = self.score(lo, 1.0)?;
        Ok(Sweep::Placed(levels, last - v))
    }

    fn solve(&self, cells: usize) -> Result<PartitionResult> {
        let spec = self.family.spec();
        if cells == 1 {
            let whole = self.score(0.0, 1.0)?;
            return Ok(PartitionResult {
                levels: Vec::new(),
                cell_values: vec![self.cell_value(whole)],
                iterations: 0,
                evaluations: self.evaluations.get(),
                residual: 0.0,
                family: spec,
                objective: self.objective,
            });
        }
        let mut hi = self.score(0.0, 1.0)?;
        let mut lo = hi - 1.0;
        let mut iterations = 0;
        let mut best = None;
        // widen downwards until the last cell ends up above v
        loop {
            iterations += 1;
            if iterations > OUTER_ITER {
                return Err(Error::NoConvergence {
                    iterations,
                    detail: "could not bracket the common cell value".into(),
                });
            }
            match self.sweep(cells, lo)? {
                Sweep::Placed(levels, r) if r > 0.0 => {
                    best = Some(levels);
                    break;
                }
                // heavy tails: K' of a shrinking tail cell stays bounded
                Sweep::TooLow => break,
                _ => {
                    let width = hi - lo;
                    hi = lo;
                    lo -= 2.0 * width;
                }
            }
        }
        while hi - lo > OUTER_TOL * hi.abs().max(1.0) {
            iterations += 1;
            if iterations > OUTER_ITER {
                return Err(Error::NoConvergence {
                    iterations,
                    detail: format!("common value bracket [{lo:e}, {hi:e}] did not close"),
                });
            }
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            match self.sweep(cells, mid)? {
                Sweep::Placed(levels, r) => {
                    if r == 0.0 {
                        best = Some(levels);
                        break;
                    }
                    if r > 0.0 {
                        lo = mid;
                        best = Some(levels);
                    } else {
                        hi = mid;
                    }
                }
                Sweep::TooHigh => hi = mid,
                Sweep::TooLow => lo = mid,
            }
        }
        let levels = best.ok_or_else(|| Error::NoConvergence {
            iterations,
            detail: "no admissible boundary placement found".into(),
        })?;
        if levels.windows(2).any(|w| !(w[0] < w[1])) || levels.is_empty() {
            return Err(Error::NoConvergence { iterations, detail: "levels collapsed".into() });
        }
        let cell_values = ProbabilitySubset::cells(&levels)?
            .iter()
            .map(|c| {
                let (lo, hi) = c.intervals()[0];
                self.score(lo, hi).map(|s| self.cell_value(s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PartitionResult {
            residual: spread(&cell_values),
            levels,
            cell_values,
            iterations,
            evaluations: self.evaluations.get(),
            family: spec,
            objective: self.objective,
        })
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn check_monotone(trace: &mut [(f64, f64)]) -> Result<()> {
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in trace.windows(2) {
        let ((x0, g0), (x1, g1)) = (w[0], w[1]);
        if g1 < g0 - MONOTONE_SLACK * (1.0 + g0.abs()) {
            return Err(Error::NonMonotoneObjective {
                at: x1,
                detail: format!("cell value drops from {g0} at {x0} to {g1} at {x1}"),
            });
        }
    }
    Ok(())
}

/// Levels `alpha_1 < ... < alpha_k` splitting the standard normal into
/// `k + 1` cells of equal conditional variance.
pub fn equal_variance_partition(k: usize) -> Result<PartitionResult> {
    if !(1..=MAX_LEVELS_VARIANCE).contains(&k) {
        return Err(Error::KOutOfRange { got: k, min: 1, max: MAX_LEVELS_VARIANCE });
    }
    let family = GeneratorFamily::Gaussian;
    Solver { family: &family, objective: CellObjective::Variance, evaluations: Cell::new(0) }.solve(k + 1)
}

/// Interior levels of the partition into `cells` intervals with equal K'.
pub fn equal_kprime_partition(family: &GeneratorFamily, cells: usize) -> Result<PartitionResult> {
    if !(MIN_CELLS_KPRIME..=MAX_CELLS_KPRIME).contains(&cells) {
        return Err(Error::KOutOfRange { got: cells, min: MIN_CELLS_KPRIME, max: MAX_CELLS_KPRIME });
    }
    family.validate()?;
    Solver { family, objective: CellObjective::KPrime, evaluations: Cell::new(0) }.solve(cells)
}

/// Cell values of an arbitrary set of levels, in the objective's own units.
pub fn evaluate_cells(family: &GeneratorFamily, objective: CellObjective, levels: &[f64]) -> Result<Vec<f64>> {
    let solver = Solver { family, objective, evaluations: Cell::new(0) };
    ProbabilitySubset::cells(levels)?
        .iter()
        .map(|c| {
            let (lo, hi) = c.intervals()[0];
            solver.score(lo, hi).map(|s| solver.cell_value(s))
        })
        .collect()
}

/// Largest pairwise relative gap `|v_i - v_j| / mean` between cell values.
pub fn cell_residual(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    spread(values) / mean.abs()
}

/// Per-cell conditional matrices of a solved partition.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionCheck {
    pub cells: Vec<ConditionalReport>,
    /// Max pairwise Frobenius distance between conditional covariances.
    pub cov_discrepancy: f64,
    /// Max pairwise Frobenius distance between conditional correlations.
    pub cor_discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McPartitionCheck>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct McPartitionCheck {
    pub cells: Vec<ConditionalReport>,
    pub cov_discrepancy: f64,
    pub cor_discrepancy: f64,
    /// Largest |analytic - simulated| / stderr over all cells and entries.
    pub max_z: f64,
}

/// Largest pairwise `||M_i - M_j||_F`.
pub fn max_pairwise_frobenius(matrices: &[DMatrix<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            worst = worst.max((&matrices[i] - &matrices[j]).norm());
        }
    }
    worst
}

/// Conditional covariance and correlation matrices on every cell of
/// `result`, with an optional Monte Carlo replay of `(draws, seed)`.
pub fn verify_partition(
    model: &EllipticalModel,
    a: &[f64],
    result: &PartitionResult,
    mc: Option<(usize, u64)>,
) -> Result<PartitionCheck> {
    let subsets = result.subsets()?;
    let cells = subsets.iter().map(|s| conditional_covariance(model, a, s)).collect::<Result<Vec<_>>>()?;
    let (cov_discrepancy, cor_discrepancy) = discrepancies(&cells);
    let mc = match mc {
        None => None,
        Some((draws, seed)) => {
            let sims = subsets
                .iter()
                .enumerate()
                .map(|(i, s)| conditional_covariance_mc(model, a, s, draws, seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let mut max_z: f64 = 0.0;
            for (exact, sim) in cells.iter().zip(&sims) {
                let err = &sim.mc.as_ref().expect("simulated report").cond_cov_stderr;
                for (idx, se) in err.iter().enumerate() {
                    max_z = max_z.max((exact.cond_cov[idx] - sim.cond_cov[idx]).abs() / se);
                }
            }
            let (cov, cor) = discrepancies(&sims);
            Some(McPartitionCheck { cells: sims, cov_discrepancy: cov, cor_discrepancy: cor, max_z })
        }
    };
    Ok(PartitionCheck { cells, cov_discrepancy, cor_discrepancy, mc })
}

fn discrepancies(cells: &[ConditionalReport]) -> (f64, f64) {
    let covs: Vec<_> = cells.iter().map(|c| c.cond_cov.clone()).collect();
    let cors: Vec<_> = cells.iter().map(|c| c.cond_cor.clone()).collect();
    (max_pairwise_frobenius(&covs), max_pairwise_frobenius(&cors))
}

/// One row of a reproduced partition table.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableRow {
    pub k: usize,
    /// Degrees of freedom; `None` is the Gaussian row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    pub levels: Vec<f64>,
    pub cell_probabilities: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Table1,
    Table2,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionTable {
    pub kind: TableKind,
    pub rows: Vec<TableRow>,
}

fn row(k: usize, nu: Option<f64>, r: &PartitionResult) -> TableRow {
    TableRow { k, nu, levels: r.levels.clone(), cell_probabilities: r.cell_probabilities(), residual: r.residual }
}

/// Equal-variance levels for `k = 1..=max_k`.
pub fn table1(max_k: usize) -> Result<PartitionTable> {
    let rows = (1..=max_k).map(|k| equal_variance_partition(k).map(|r| row(k, None, &r))).collect::<Result<_>>()?;
    Ok(PartitionTable { kind: TableKind::Table1, rows })
}

/// Equal-K' levels for `k = 2, 3` over the Student-t degrees of freedom in
/// [`TABLE2_NU`] followed by the Gaussian limit.
pub fn table2() -> Result<PartitionTable> {
    use rayon::prelude::*;
    let mut jobs = Vec::new();
    for k in [2usize, 3] {
        for nu in TABLE2_NU.iter().map(|&nu| Some(nu)).chain([None]) {
            jobs.push((k, nu));
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(k, nu)| {
            let family = match nu {
                Some(nu) => GeneratorFamily::student_t(nu)?,
                None => GeneratorFamily::Gaussian,
            };
            equal_kprime_partition(&family, k + 1).map(|r| row(k, nu, &r))
        })
        .collect::<Result<_>>()?;
    Ok(PartitionTable { kind: TableKind::Table2, rows })
}

fn percent(p: f64) -> String {
    let s = format!("{:.1}", 100.0 * p);
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

impl PartitionTable {
    fn width(&self) -> usize {
        self.rows.iter().map(|r| r.levels.len()).max().unwrap_or(0)
    }

    /// Plain-text layout: one row per solve, levels to three decimals and
    /// the rounded partition ratio.
    pub fn to_text(&self) -> String {
        let width = self.width();
        let mut out = String::new();
        let _ = write!(out, "{:>3}", "k");
        if self.kind == TableKind::Table2 {
            let _ = write!(out, " {:>4}", "v");
        }
        for i in 1..=width {
            let _ = write!(out, " {:>8}", format!("alpha_{i}"));
        }
        let _ = writeln!(out, "  partition ratio");
        for r in &self.rows {
            let _ = write!(out, "{:>3}", r.k);
            if self.kind == TableKind::Table2 {
                let nu = r.nu.map_or("inf".to_string(), |nu| format!("{nu}"));
                let _ = write!(out, " {nu:>4}");
            }
            for i in 0..width {
                match r.levels.get(i) {
                    Some(a) => {
                        let _ = write!(out, " {a:>8.3}");
                    }
                    None => {
                        let _ = write!(out, " {:>8}", "-");
                    }
                }
            }
            let ratio: Vec<_> = r.cell_probabilities.iter().map(|&p| percent(p)).collect();
            let _ = writeln!(out, "  {}", ratio.join("/"));
        }
        out
    }

    /// CSV with one row per solve and one column per level.
    pub fn to_csv(&self) -> String {
        let width = self.width();
        let mut out = String::from("k,nu");
        for i in 1..=width {
            let _ = write!(out, ",alpha_{i}");
        }
        out.push('\n');
        for r in &self.rows {
            let nu = r.nu.map_or("inf".to_string(), |nu| format!("{nu}"));
            let _ = write!(out, "{},{}", r.k, nu);
            for i in 0..width {
                match r.levels.get(i) {
                    Some(a) => {
                        let _ = write!(out, ",{a}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_sixty_twenty() {
        let r = equal_variance_partition(2).unwrap();
        assert!((r.levels[0] - 0.198).abs() < 1e-3);
        assert!((r.levels[0] + r.levels[1] - 1.0).abs() < 1e-9);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn single_level_is_the_median() {
        let r = equal_variance_partition(1).unwrap();
        assert!((r.levels[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(equal_variance_partition(0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(equal_variance_partition(13), Err(Error::KOutOfRange { .. })));
        let g = GeneratorFamily::Gaussian;
        assert!(matches!(equal_kprime_partition(&g, 1), Err(Error::KOutOfRange { .. })));
        assert!(matches!(equal_kprime_partition(&g, 9), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn gaussian_kprime_matches_equal_variance() {
        let a = equal_kprime_partition(&GeneratorFamily::Gaussian, 3).unwrap();
        let b = equal_variance_partition(2).unwrap();
        for (x, y) in a.levels.iter().zip(&b.levels) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn monotone_trace_check() {
        let mut ok = vec![(0.3, 1.0), (0.1, 0.5), (0.2, 0.7)];
        assert!(check_monotone(&mut ok).is_ok());
        let mut bad = vec![(0.1, 0.5), (0.2, 0.4)];
        assert!(matches!(check_monotone(&mut bad), Err(Error::NonMonotoneObjective { .. })));
    }

    #[test]
    fn frobenius_pairs() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::identity(2, 2) * 2.0;
        assert!((max_pairwise_frobenius(&[a.clone(), b]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(max_pairwise_frobenius(&[a]), 0.0);
    }

    #[test]
    fn text_table_layout() {
        let t = table1(2).unwrap();
        let text = t.to_text();
        assert!(text.contains("0.198"), "{text}");
        assert!(text.lines().nth(1).unwrap().ends_with("50/50"));
    }
}
