//! A user-supplied density generator: the standardized t(4) law written out
//! by hand, compared with the built-in family.
//!
//! cargo run --release --example custom_generator

use std::f64::consts::PI;
use std::sync::Arc;

use condcov::{k_invariant, CustomGenerator, GeneratorFamily, ProbabilitySubset};

fn main() -> condcov::Result<()> {
    let nu: f64 = 4.0;
    // g_k(u) = (1 + 2u / (nu - 2))^{-(nu + k) / 2}
    let c1 = 3.0 / (4.0 * 2.0f64.sqrt());
    let c2 = 1.0 / PI;
    let custom = CustomGenerator::new(
        Arc::new(move |u: f64| (1.0 + 2.0 * u / (nu - 2.0)).powf(-(nu + 1.0) / 2.0)),
        Arc::new(move |u: f64| (1.0 + 2.0 * u / (nu - 2.0)).powf(-(nu + 2.0) / 2.0)),
        c1,
        c2,
    )?;
    let custom = GeneratorFamily::Custom(custom);
    let builtin = GeneratorFamily::student_t(nu)?;

    for subset in ["0:0.1", "0.3:0.7", "0:0.05,0.95:1"] {
        let a: ProbabilitySubset = subset.parse()?;
        let (x, y) = (k_invariant(&custom, &a)?, k_invariant(&builtin, &a)?);
        println!("{subset:>14}: custom k = {:.8}, built-in k = {:.8}", x.k, y.k);
    }
    Ok(())
}
