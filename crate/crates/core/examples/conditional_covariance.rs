//! Closed-form conditional covariance on a quantile region of the
//! benchmark, checked against a simulated sample.
//!
//! cargo run --release --example conditional_covariance

use condcov::{
    conditional_covariance, conditional_covariance_mc, scaled_relation_check, EllipticalModel, GeneratorFamily,
    ProbabilitySubset,
};

fn main() -> condcov::Result<()> {
    let sigma = vec![vec![1.0, 0.4, 0.2], vec![0.4, 2.0, -0.3], vec![0.2, -0.3, 0.5]];
    let model = EllipticalModel::from_rows(&[0.0, 1.0, -1.0], &sigma, GeneratorFamily::student_t(5.0)?)?;
    let a = [1.0, 1.0, 1.0];
    let top = ProbabilitySubset::interval(0.8, 1.0)?;

    let exact = conditional_covariance(&model, &a, &top)?;
    println!("t(5), Y = X1 + X2 + X3, conditioned on the top 20% of Y");
    println!("k(B) = {:.6}, Var_B[Y] = {:.6}", exact.k_b, exact.var_y_b);
    println!("Var_B[X] (closed form):{:.6}", exact.cond_cov);

    let sim = conditional_covariance_mc(&model, &a, &top, 2_000_000, 3)?;
    let err = sim.mc.as_ref().expect("simulated report");
    println!("Var_B[X] (simulated, {} rows in B):{:.6}", err.conditioned, sim.cond_cov);
    let z = (&exact.cond_cov - &sim.cond_cov).component_div(&err.cond_cov_stderr);
    println!("largest |z| = {:.2}", z.abs().max());

    // Cov_B[X, Y] is Var_B[Y] times the unconditional regression vector
    println!("Cov_B[X,Y] = {:.6}", exact.cond_cross_cov.transpose());
    println!("Cor_B[X]:{:.4}", exact.cond_cor);
    println!("scaled relation residual = {:.2e}", scaled_relation_check(&model, &a, &top)?);
    Ok(())
}
