//! On the equal-variance partition every Gaussian model has identical
//! conditional covariance matrices across cells; on the equal-K' partition
//! of a generator, conditional correlation matrices coincide instead.
//!
//! cargo run --release --example equality_chains

use condcov::{equal_kprime_partition, equal_variance_partition, verify_partition, EllipticalModel, GeneratorFamily};

fn main() -> condcov::Result<()> {
    let sigma = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let a = [1.0, 1.0];

    let split = equal_variance_partition(2)?;
    let gauss = EllipticalModel::from_rows(&[0.0, 0.0], &sigma, GeneratorFamily::Gaussian)?;
    let check = verify_partition(&gauss, &a, &split, Some((1_000_000, 5)))?;
    println!("Gaussian, levels {:.4?}", split.levels);
    for (i, cell) in check.cells.iter().enumerate() {
        println!("  cell {}: Var_B[X] = {:.6}", i + 1, cell.cond_cov);
    }
    println!("  max covariance gap  {:.2e}", check.cov_discrepancy);
    if let Some(mc) = &check.mc {
        println!("  simulated gap {:.2e}, worst |z| vs closed form {:.2}", mc.cov_discrepancy, mc.max_z);
    }

    let t10 = GeneratorFamily::student_t(10.0)?;
    let split = equal_kprime_partition(&t10, 3)?;
    let model = EllipticalModel::from_rows(&[0.0, 0.0], &sigma, t10)?;
    let check = verify_partition(&model, &a, &split, None)?;
    println!("\nt(10), levels {:.4?}", split.levels);
    println!("  max covariance gap  {:.2e}", check.cov_discrepancy);
    println!("  max correlation gap {:.2e}", check.cor_discrepancy);

    // the Gaussian split does not equalize t(10) correlations
    let check = verify_partition(&model, &a, &equal_variance_partition(2)?, None)?;
    println!("  on the Gaussian split: correlation gap {:.2e}", check.cor_discrepancy);
    Ok(())
}
