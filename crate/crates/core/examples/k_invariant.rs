//! K- and K'-invariants of the Gaussian and Student-t generators, by
//! quadrature and by simulation.
//!
//! cargo run --release --example k_invariant

use condcov::{k_invariant, k_invariant_mc, k_via_radial, EllipticalModel, GeneratorFamily, ProbabilitySubset};

fn main() -> condcov::Result<()> {
    let lower_fifth = ProbabilitySubset::interval(0.0, 0.2)?;
    let gauss = k_invariant(&GeneratorFamily::Gaussian, &lower_fifth)?;
    println!("Gaussian on {lower_fifth}: k = {:.10}, k' = {:.6}", gauss.k, gauss.k_prime);

    println!("\nStudent-t on the upper tail 0.877:1");
    println!("{:>5} {:>10} {:>10} {:>10}", "nu", "k", "k'", "varV1");
    let tail = ProbabilitySubset::interval(0.877, 1.0)?;
    for nu in [3.0, 5.0, 10.0, 50.0] {
        let v = k_invariant(&GeneratorFamily::student_t(nu)?, &tail)?;
        println!("{nu:>5} {:>10.6} {:>10.6} {:>10.6}", v.k, v.k_prime, v.var_v1);
    }

    // same quantity three ways
    let t5 = GeneratorFamily::student_t(5.0)?;
    let quad = k_invariant(&t5, &tail)?;
    let mc = k_invariant_mc(&t5, &tail, 2_000_000, 7)?;
    let model = EllipticalModel::from_rows(&[0.0, 0.0], &[vec![1.0, 0.3], vec![0.3, 2.0]], t5)?;
    let radial = k_via_radial(&model, &[1.0, 1.0], &tail, 2_000_000, 8)?;
    println!("\nt(5) on {tail}");
    println!("  quadrature   {:.5}", quad.k);
    println!("  simulation   {:.5} +/- {:.5}", mc.k, mc.err_estimate);
    println!("  radial form  {:.5} +/- {:.5}", radial.value, radial.stderr);
    Ok(())
}
