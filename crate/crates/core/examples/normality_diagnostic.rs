//! Normality diagnostic on simulated Gaussian and t(3) data.
//!
//! cargo run --release --example normality_diagnostic

use condcov::{diagnose, sample, Compare, DataMatrix, EllipticalModel, GeneratorFamily};

fn main() -> condcov::Result<()> {
    let sigma = vec![vec![1.0, 0.3], vec![0.3, 1.0]];
    let a = [1.0, 1.0];
    for (name, family) in [("Gaussian", GeneratorFamily::Gaussian), ("t(3)", GeneratorFamily::student_t(3.0)?)] {
        let model = EllipticalModel::from_rows(&[0.0, 0.0], &sigma, family)?;
        let rows = sample(&model, 20_000, 1)?;
        let data = DataMatrix::new(rows.data, None)?;
        let report = diagnose(&data, &a, 2, Some((200, 9)), Compare::Covariance)?;
        let q95 = report.bootstrap_quantile(0.95).unwrap_or(f64::NAN);
        let q99 = report.bootstrap_quantile(0.99).unwrap_or(f64::NAN);
        println!(
            "{name:>8}: counts {:?}, statistic {:.4} (bootstrap 95% {:.4}, 99% {:.4})",
            report.cell_counts, report.statistic, q95, q99
        );
    }
    Ok(())
}
