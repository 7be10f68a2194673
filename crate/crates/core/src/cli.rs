//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conditional::{conditional_covariance, conditional_covariance_mc, ConditionalReport};
use crate::diagnostics::{diagnose, Compare, DataMatrix, DiagnosticReport};
use crate::elliptical::{sample, BenchmarkSpec, EllipticalModel, FamilySpec, GeneratorFamily};
use crate::error::{Error, Result};
use crate::invariants::{k_invariant, k_invariant_mc, InvariantValue, Method};
use crate::partition::{
    equal_kprime_partition, equal_variance_partition, table1, table2, PartitionResult, PartitionTable, TableKind,
};
use crate::subset::{parse_pairs, ProbabilitySubset};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "CONDCOV_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DRAWS: usize = 1_000_000;
pub const MODEL_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "condcov",
    version,
    about = "Conditional covariance matrices of elliptical vectors on quantile regions"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// K- and K'-invariants of a generator on a probability subset.
    KInvariant(KInvariantArgs),
    /// Conditional covariance, cross-covariance and correlation on a quantile region.
    CondCov(CondCovArgs),
    /// Equal-variance or equal-K' quantile partitions.
    Partition(PartitionArgs),
    /// Normality diagnostic on sample data.
    CheckNormality(CheckNormalityArgs),
    /// Draws rows from a model as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Gaussian,
    T,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyName::Gaussian)]
    pub family: FamilyName,
    /// Degrees of freedom for `--family t`.
    #[arg(long)]
    pub nu: Option<f64>,
}

impl FamilyArgs {
    pub fn family(&self) -> Result<GeneratorFamily> {
        match (self.family, self.nu) {
            (FamilyName::Gaussian, None) => Ok(GeneratorFamily::Gaussian),
            (FamilyName::Gaussian, Some(_)) => Err(Error::InvalidArgument("--nu applies only to --family t".into())),
            (FamilyName::T, Some(nu)) => GeneratorFamily::student_t(nu),
            (FamilyName::T, None) => Err(Error::InvalidArgument("--family t requires --nu".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub draws: usize,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Quadrature,
    Mc,
}

#[derive(Debug, Args)]
pub struct KInvariantArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Probability subset `lo:hi[,lo:hi...]`.
    #[arg(long)]
    pub subset: ProbabilitySubset,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    pub method: MethodArg,
    #[command(flatten)]
    pub mc: SeedArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long, conflicts_with_all = ["mu", "sigma"])]
    pub model: Option<PathBuf>,
    /// Inline location, e.g. `0,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Inline covariance, rows separated by `;`, e.g. `1,0.5;0.5,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    #[command(flatten)]
    pub family: FamilyArgs,
}

impl ModelArgs {
    pub fn model(&self) -> Result<EllipticalModel> {
        if let Some(path) = &self.model {
            if self.family.nu.is_some() || self.family.family != FamilyName::Gaussian {
                return Err(Error::InvalidArgument("the family comes from the model file".into()));
            }
            return ModelFile::load(path)?.to_model();
        }
        let sigma = self.sigma.as_deref().ok_or_else(|| Error::InvalidArgument("give --model or --sigma".into()))?;
        let sigma = parse_matrix(sigma)?;
        let mu = match &self.mu {
            Some(mu) => parse_vector(mu)?,
            None => vec![0.0; sigma.len()],
        };
        EllipticalModel::from_rows(&mu, &sigma, self.family.family()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    None,
    Mc,
}

#[derive(Debug, Args)]
pub struct CondCovArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Benchmark weights, e.g. `1,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Probability subset `lo:hi[,...]`.
    #[arg(long, conflicts_with = "subset_values", required_unless_present = "subset_values")]
    pub subset: Option<ProbabilitySubset>,
    /// Value-space intervals of `Y`, `lo:hi[,...]`; `-inf` and `inf` allowed.
    #[arg(long, allow_hyphen_values = true)]
    pub subset_values: Option<String>,
    #[arg(long, value_enum, default_value_t = Oracle::None)]
    pub oracle: Oracle,
    #[command(flatten)]
    pub mc: SeedArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Variance,
    Kprime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Table1,
    Table2,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long, value_enum, required_unless_present = "emit")]
    pub mode: Option<Mode>,
    /// Number of levels for `--mode variance`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of cells for `--mode kprime`.
    #[arg(long)]
    pub cells: Option<usize>,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Reproduce a full table instead of one partition.
    #[arg(long, value_enum, conflicts_with_all = ["mode", "k", "cells"])]
    pub emit: Option<Emit>,
}

#[derive(Debug, Args)]
pub struct CheckNormalityArgs {
    /// CSV file, or `-` for standard input.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Number of levels of the equal-variance partition.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Bootstrap resamples; 0 skips the bootstrap.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CompareArg::Covariance)]
    pub compare: CompareArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareArg {
    Covariance,
    Correlation,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Model file: `{"schema": 1, "mu": [...], "sigma": [[...]], "family": {"name": "t", "nu": 5}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: u32,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub family: FamilySpec,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if file.schema != MODEL_SCHEMA {
            return Err(Error::InvalidArgument(format!(
                "unsupported model schema {} (expected {MODEL_SCHEMA})",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_model(&self) -> Result<EllipticalModel> {
        EllipticalModel::from_rows(&self.mu, &self.sigma, self.family.to_family()?)
    }
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("not a finite number: {t:?}")))
        })
        .collect()
}

pub fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(parse_vector).collect()
}

/// Parses arguments, runs the command and maps failures to a nonzero exit.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn execute(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let text = match &cli.command {
        Command::KInvariant(args) => render(&cmd_k_invariant(args)?, cli.format)?,
        Command::CondCov(args) => render(&cmd_cond_cov(args)?, cli.format)?,
        Command::Partition(args) => match cmd_partition(args)? {
            PartitionOutput::Single(r) => render(&r, cli.format)?,
            PartitionOutput::Table(t) => render(&t, cli.format)?,
        },
        Command::CheckNormality(args) => render(&cmd_check_normality(args)?, cli.format)?,
        Command::Sample(args) => {
            let csv = cmd_sample(args)?;
            match &args.out {
                Some(path) => {
                    std::fs::write(path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    String::new()
                }
                None => csv,
            }
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_k_invariant(args: &KInvariantArgs) -> Result<InvariantValue> {
    let family = args.family.family()?;
    match args.method {
        MethodArg::Quadrature => k_invariant(&family, &args.subset),
        MethodArg::Mc => k_invariant_mc(&family, &args.subset, args.mc.draws, args.mc.seed),
    }
}

/// Analytic report, with the simulated report when an oracle is requested.
#[derive(Debug, Clone, Serialize)]
pub struct CondCovOutput {
    pub analytic: ConditionalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<ConditionalReport>,
}

pub fn cmd_cond_cov(args: &CondCovArgs) -> Result<CondCovOutput> {
    let model = args.model.model()?;
    let a = parse_vector(&args.a)?;
    let subset = match (&args.subset, &args.subset_values) {
        (Some(s), _) => s.clone(),
        (None, Some(values)) => {
            ProbabilitySubset::from_values(&BenchmarkSpec::new(&model, &a)?, &parse_pairs(values)?)?
        }
        (None, None) => return Err(Error::InvalidArgument("give --subset or --subset-values".into())),
    };
    let analytic = conditional_covariance(&model, &a, &subset)?;
    let mc = match args.oracle {
        Oracle::None => None,
        Oracle::Mc => Some(conditional_covariance_mc(&model, &a, &subset, args.mc.draws, args.mc.seed)?),
    };
    Ok(CondCovOutput { analytic, mc })
}

pub enum PartitionOutput {
    Single(PartitionResult),
    Table(PartitionTable),
}

pub fn cmd_partition(args: &PartitionArgs) -> Result<PartitionOutput> {
    if let Some(emit) = args.emit {
        return Ok(PartitionOutput::Table(match emit {
            Emit::Table1 => table1(6)?,
            Emit::Table2 => table2()?,
        }));
    }
    match args.mode {
        Some(Mode::Variance) => {
            if args.cells.is_some() || args.family.nu.is_some() || args.family.family != FamilyName::Gaussian {
                return Err(Error::InvalidArgument("--mode variance takes only --k (Gaussian)".into()));
            }
            let k = args.k.ok_or_else(|| Error::InvalidArgument("--mode variance requires --k".into()))?;
            Ok(PartitionOutput::Single(equal_variance_partition(k)?))
        }
        Some(Mode::Kprime) => {
            let cells = match (args.cells, args.k) {
                (Some(c), None) => c,
                (None, Some(k)) => k + 1,
                (Some(_), Some(_)) => return Err(Error::InvalidArgument("give either --cells or --k".into())),
                (None, None) => return Err(Error::InvalidArgument("--mode kprime requires --cells".into())),
            };
            Ok(PartitionOutput::Single(equal_kprime_partition(&args.family.family()?, cells)?))
        }
        None => Err(Error::InvalidArgument("give --mode or --emit".into())),
    }
}

pub fn cmd_check_normality(args: &CheckNormalityArgs) -> Result<DiagnosticReport> {
    let data = if args.data.as_os_str() == "-" {
        DataMatrix::read_csv(std::io::stdin().lock())?
    } else {
        DataMatrix::from_path(&args.data)?
    };
    let a = parse_vector(&args.a)?;
    let compare = match args.compare {
        CompareArg::Covariance => Compare::Covariance,
        CompareArg::Correlation => Compare::Correlation,
    };
    let bootstrap = (args.bootstrap > 0).then_some((args.bootstrap, args.seed));
    diagnose(&data, &a, args.k, bootstrap, compare)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<String> {
    let model = args.model.model()?;
    let count = usize::try_from(args.count).map_err(|_| Error::InvalidArgument("count too large".into()))?;
    let rows = sample(&model, count, args.seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=rows.cols()).map(|i| format!("x{i}")).collect();
    w.write_record(&header).map_err(csv_error)?;
    for r in 0..rows.rows() {
        w.write_record(rows.data.row(r).iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    finish_csv(w)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// A report that can be printed in every output format.
pub trait Render: Serialize {
    fn table(&self) -> String;
    /// Rows of a long-format CSV, header first.
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

pub fn render<T: Render>(report: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Table => Ok(report.table()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in report.csv_rows() {
                w.write_record(&row).map_err(csv_error)?;
            }
            finish_csv(w)
        }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn matrix_text(name: &str, m: &DMatrix<f64>) -> String {
    let mut s = format!("{name}:\n");
    for r in 0..m.nrows() {
        let row: Vec<_> = m.row(r).iter().map(|v| format!("{v:>12.6}")).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
    s
}

fn vector_text(name: &str, v: &DVector<f64>) -> String {
    let row: Vec<_> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("{name}: [{}]\n", row.join(", "))
}

fn matrix_rows(rows: &mut Vec<Vec<String>>, quantity: &str, m: &DMatrix<f64>) {
    for ((i, j), v) in (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).zip(m.transpose().iter()) {
        rows.push(vec![quantity.into(), i.to_string(), j.to_string(), num(*v)]);
    }
}

fn scalar_row(rows: &mut Vec<Vec<String>>, quantity: &str, v: f64) {
    rows.push(vec![quantity.into(), String::new(), String::new(), num(v)]);
}

fn long_header() -> Vec<String> {
    ["quantity", "i", "j", "value"].map(String::from).to_vec()
}

impl Render for InvariantValue {
    fn table(&self) -> String {
        let method = match self.method {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        };
        let mut s = String::new();
        let _ = writeln!(s, "k      = {:.6}  (+/- {:.2e})", self.k, self.err_estimate);
        let _ = writeln!(s, "k'     = {:.6}  (+/- {:.2e})", self.k_prime, self.k_prime_err);
        let _ = writeln!(s, "varV1  = {:.6}  (+/- {:.2e})", self.var_v1, self.var_v1_err);
        let _ = writeln!(s, "method = {method}");
        if let Some((total, inside)) = self.draws {
            let _ = writeln!(s, "draws  = {total} ({inside} in subset)");
        }
        s
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let method = match self.method {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        };
        vec![
            ["k", "kPrime", "varV1", "method", "errEstimate", "kPrimeErr", "varV1Err"].map(String::from).to_vec(),
            vec![
                num(self.k),
                num(self.k_prime),
                num(self.var_v1),
                method.into(),
                num(self.err_estimate),
                num(self.k_prime_err),
                num(self.var_v1_err),
            ],
        ]
    }
}

fn report_text(r: &ConditionalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "subset   = {}", r.subset);
    let _ = writeln!(s, "P[B]     = {:.6}", r.prob);
    let _ = writeln!(s, "E_B[Y]   = {:.6}", r.mean_y_b);
    let _ = writeln!(s, "Var_B[Y] = {:.6}", r.var_y_b);
    let _ = writeln!(s, "k(B)     = {:.6}", r.k_b);
    if let Some(kp) = r.k_prime_b {
        let _ = writeln!(s, "k'(B)    = {kp:.6}");
    }
    s += &vector_text("beta", &r.beta);
    s += &matrix_text("Var_B[X]", &r.cond_cov);
    s += &vector_text("Cov_B[X,Y]", &r.cond_cross_cov);
    s += &matrix_text("Cor_B[X]", &r.cond_cor);
    if r.psd_warning {
        let _ = writeln!(s, "warning: Var_B[X] has a negative eigenvalue ({:e})", r.min_eigenvalue);
    }
    s
}

impl Render for CondCovOutput {
    fn table(&self) -> String {
        let mut s = report_text(&self.analytic);
        if let Some(mc) = &self.mc {
            let err = mc.mc.as_ref().expect("simulated report");
            let _ = writeln!(s, "\nMonte Carlo ({} draws, {} in subset)", err.draws, err.conditioned);
            s += &matrix_text("Var_B[X]", &mc.cond_cov);
            s += &matrix_text("stderr", &err.cond_cov_stderr);
            let z = (&self.analytic.cond_cov - &mc.cond_cov).component_div(&err.cond_cov_stderr);
            s += &matrix_text("z = (analytic - mc) / stderr", &z);
        }
        s
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut header = long_header();
        if self.mc.is_some() {
            header.extend(["mc", "mcStderr"].map(String::from));
        }
        let mut rows = vec![header];
        let a = &self.analytic;
        scalar_row(&mut rows, "prob", a.prob);
        scalar_row(&mut rows, "meanY_B", a.mean_y_b);
        scalar_row(&mut rows, "varY_B", a.var_y_b);
        scalar_row(&mut rows, "kB", a.k_b);
        let first = rows.len();
        matrix_rows(&mut rows, "condCov", &a.cond_cov);
        if let Some(mc) = &self.mc {
            let err = mc.mc.as_ref().expect("simulated report");
            for (row, (v, se)) in
                rows[first..].iter_mut().zip(mc.cond_cov.transpose().iter().zip(err.cond_cov_stderr.transpose().iter()))
            {
                row.push(num(*v));
                row.push(num(*se));
            }
            for row in rows[1..first].iter_mut() {
                row.extend([String::new(), String::new()]);
            }
        }
        let width = rows[0].len();
        let mut tail = Vec::new();
        matrix_rows(&mut tail, "condCor", &a.cond_cor);
        for (i, v) in a.cond_cross_cov.iter().enumerate() {
            tail.push(vec!["condCrossCov".into(), i.to_string(), String::new(), num(*v)]);
        }
        for (i, v) in a.beta.iter().enumerate() {
            tail.push(vec!["beta".into(), i.to_string(), String::new(), num(*v)]);
        }
        for mut row in tail {
            row.resize(width, String::new());
            rows.push(row);
        }
        rows
    }
}

impl Render for PartitionResult {
    fn table(&self) -> String {
        let mut s = String::new();
        let levels: Vec<_> = self.levels.iter().map(|v| format!("{v:.6}")).collect();
        let values: Vec<_> = self.cell_values.iter().map(|v| format!("{v:.6}")).collect();
        let probs: Vec<_> = self.cell_probabilities().iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "levels      = {}", levels.join(" "));
        let _ = writeln!(s, "cell probs  = {}", probs.join(" "));
        let _ = writeln!(s, "cell values = {}", values.join(" "));
        let _ = writeln!(s, "residual    = {:.3e}", self.residual);
        let _ = writeln!(s, "iterations  = {} ({} evaluations)", self.iterations, self.evaluations);
        s
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![["cell", "lo", "hi", "probability", "value"].map(String::from).to_vec()];
        let mut edges = vec![0.0];
        edges.extend_from_slice(&self.levels);
        edges.push(1.0);
        for (i, (w, v)) in edges.windows(2).zip(&self.cell_values).enumerate() {
            rows.push(vec![(i + 1).to_string(), num(w[0]), num(w[1]), num(w[1] - w[0]), num(*v)]);
        }
        rows
    }
}

impl Render for PartitionTable {
    fn table(&self) -> String {
        self.to_text()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let width = self.rows.iter().map(|r| r.levels.len()).max().unwrap_or(0);
        let mut header = vec!["k".to_string()];
        if self.kind == TableKind::Table2 {
            header.push("nu".into());
        }
        header.extend((1..=width).map(|i| format!("alpha_{i}")));
        let mut rows = vec![header];
        for r in &self.rows {
            let mut row = vec![r.k.to_string()];
            if self.kind == TableKind::Table2 {
                row.push(r.nu.map_or("inf".into(), num));
            }
            row.extend((0..width).map(|i| r.levels.get(i).map_or(String::new(), |v| num(*v))));
            rows.push(row);
        }
        rows
    }
}

impl Render for DiagnosticReport {
    fn table(&self) -> String {
        let mut s = String::new();
        let levels: Vec<_> = self.partition.levels.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(s, "rows        = {}", self.rows);
        let _ = writeln!(s, "levels      = {}", levels.join(" "));
        let counts: Vec<_> = self.cell_counts.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "cell counts = {}", counts.join(" "));
        for (i, m) in self.cell_covariances.iter().enumerate() {
            s += &matrix_text(&format!("cell {} covariance", i + 1), m);
        }
        let compare = match self.compare {
            Compare::Covariance => "covariance",
            Compare::Correlation => "correlation",
        };
        let _ = writeln!(s, "statistic ({compare}) = {:.6}", self.statistic);
        if let Some(q) = &self.bootstrap_quantiles {
            for (level, value) in q {
                let _ = writeln!(s, "bootstrap q{level:.2} = {value:.6}");
            }
            let _ = writeln!(s, "resamples = {}", self.draws);
        }
        s
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![long_header()];
        scalar_row(&mut rows, "statistic", self.statistic);
        for (i, c) in self.cell_counts.iter().enumerate() {
            rows.push(vec!["cellCount".into(), i.to_string(), String::new(), c.to_string()]);
        }
        for (i, m) in self.cell_covariances.iter().enumerate() {
            matrix_rows(&mut rows, &format!("cellCovariance{}", i + 1), m);
        }
        if let Some(q) = &self.bootstrap_quantiles {
            for (level, value) in q {
                scalar_row(&mut rows, &format!("bootstrapQ{level}"), *value);
            }
        }
        rows
    }
}
