//! Conditional covariance and correlation matrices of `X` on `{Y in B1}`.
//!
//! The closed form is
//!
//! ```text
//! Var_B[X]   = k(B) Var[X] + (Var_B[Y] - k(B) Var[Y]) beta beta^T
//! Cov_B[X,Y] = Var_B[Y] beta
//! ```
//!
//! with `beta = Sigma a^T / (a Sigma a^T)` and `k(B) = K(psi, F_Y(B1))`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::elliptical::sampling::{transform, SphericalSampler};
use crate::elliptical::{check_weights, BenchmarkSpec, EllipticalModel};
use crate::error::{Error, Result};
use crate::invariants::{k_invariant, truncated_moments, Method, MIN_DRAWS};
use crate::mc::conditional_moments;
use crate::serde_mat;
use crate::subset::ProbabilitySubset;

/// Standard errors attached to a Monte Carlo report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct McErrors {
    pub draws: usize,
    pub conditioned: usize,
    #[serde(with = "serde_mat::matrix")]
    pub cond_cov_stderr: DMatrix<f64>,
    #[serde(with = "serde_mat::vector")]
    pub cond_cross_cov_stderr: DVector<f64>,
    pub var_y_b_stderr: f64,
    pub mean_y_b_stderr: f64,
    pub k_b_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionalReport {
    pub subset: ProbabilitySubset,
    pub method: Method,
    pub prob: f64,
    #[serde(rename = "meanY_B")]
    pub mean_y_b: f64,
    #[serde(rename = "varY_B")]
    pub var_y_b: f64,
    /// `k(B)`; not identifiable from simulation when `n = 1` (reported as NaN).
    pub k_b: f64,
    /// `k'(B)`; quadrature reports only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_prime_b: Option<f64>,
    #[serde(with = "serde_mat::vector")]
    pub beta: DVector<f64>,
    #[serde(with = "serde_mat::matrix")]
    pub cond_cov: DMatrix<f64>,
    #[serde(with = "serde_mat::vector")]
    pub cond_cross_cov: DVector<f64>,
    #[serde(with = "serde_mat::matrix")]
    pub cond_cor: DMatrix<f64>,
    pub min_eigenvalue: f64,
    /// Set when `cond_cov` has a negative eigenvalue. Nothing is clipped.
    pub psd_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McErrors>,
}

/// `beta(X|Y) = Sigma a^T / (a Sigma a^T)`.
pub fn regression_beta(model: &EllipticalModel, a: &[f64]) -> Result<DVector<f64>> {
    let weights = check_weights(model, a)?;
    let sa = model.sigma() * &weights;
    let var_y = sa.dot(&weights);
    if !(var_y > 0.0) {
        return Err(Error::ZeroWeightVector);
    }
    Ok(sa / var_y)
}

/// `k Sigma + (var_y_b - k var_y) beta beta^T`.
pub fn assemble_conditional_covariance(
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
    var_y: f64,
    var_y_b: f64,
    k: f64,
) -> DMatrix<f64> {
    let mut cov = sigma * k + (beta * beta.transpose()) * (var_y_b - k * var_y);
    // exact symmetry
    let n = cov.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Normalizes a covariance matrix; the diagonal is set to exactly 1.
pub fn covariance_to_correlation(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let mut cor = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cor[(i, j)] = if i == j { 1.0 } else { cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt() };
        }
    }
    cor
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

/// Analytic conditional report on `{F_Y(Y) in subset}`.
pub fn conditional_covariance(
    model: &EllipticalModel,
    a: &[f64],
    subset: &ProbabilitySubset,
) -> Result<ConditionalReport> {
    let spec = BenchmarkSpec::new(model, a)?;
    let beta = regression_beta(model, a)?;
    let inv = k_invariant(model.family(), subset)?;
    let tm = truncated_moments(&spec, subset)?;
    if !(tm.variance > 0.0) {
        return Err(Error::DegenerateConditionalVariance(tm.variance));
    }
    let cond_cov = assemble_conditional_covariance(model.sigma(), &beta, spec.variance(), tm.variance, inv.k);
    let cond_cross_cov = &beta * tm.variance;
    let cond_cor = covariance_to_correlation(&cond_cov);
    let min_eig = min_eigenvalue(&cond_cov);
    Ok(ConditionalReport {
        subset: subset.clone(),
        method: Method::Quadrature,
        prob: tm.prob,
        mean_y_b: tm.mean,
        var_y_b: tm.variance,
        k_b: inv.k,
        k_prime_b: Some(inv.k_prime),
        beta,
        cond_cov,
        cond_cross_cov,
        cond_cor,
        min_eigenvalue: min_eig,
        psd_warning: min_eig < 0.0,
        mc: None,
    })
}

/// Empirical conditional report from `draws` simulated rows.
pub fn conditional_covariance_mc(
    model: &EllipticalModel,
    a: &[f64],
    subset: &ProbabilitySubset,
    draws: usize,
    seed: u64,
) -> Result<ConditionalReport> {
    if draws < MIN_DRAWS {
        return Err(Error::TooFewDraws { got: draws, needed: MIN_DRAWS });
    }
    let n = model.dim();
    let weights = check_weights(model, a)?;
    let spec = BenchmarkSpec::new(model, a)?;
    let beta = regression_beta(model, a)?;
    let bounds = subset.to_values(&spec)?;
    let sampler = SphericalSampler::new(model.family())?;
    let (mean_y, var_y) = (spec.mean(), spec.variance());
    let radial_scale = if n > 1 { 1.0 / (n as f64 - 1.0) } else { f64::NAN };

    // tracked: x_1..x_n, y, radial K estimator
    let mc = conditional_moments(draws, seed, n + 2, |rng, buf| {
        let (x, rest) = buf.split_at_mut(n);
        let mut z = vec![0.0; n];
        sampler.fill(rng, &mut z);
        transform(model, &z, x);
        let y: f64 = x.iter().zip(weights.iter()).map(|(xi, ai)| xi * ai).sum();
        let r2: f64 = z.iter().map(|v| v * v).sum();
        rest[0] = y;
        rest[1] = (r2 - (y - mean_y) * (y - mean_y) / var_y) * radial_scale;
        bounds.iter().any(|&(lo, hi)| y >= lo && y < hi)
    })?;

    let cond_cov = mc.cov.view((0, 0), (n, n)).into_owned();
    let cond_cross_cov = mc.cov.view((0, n), (n, 1)).column(0).into_owned();
    let cond_cor = covariance_to_correlation(&cond_cov);
    let min_eig = min_eigenvalue(&cond_cov);
    let errors = McErrors {
        draws,
        conditioned: mc.count,
        cond_cov_stderr: mc.cov_stderr.view((0, 0), (n, n)).into_owned(),
        cond_cross_cov_stderr: mc.cov_stderr.view((0, n), (n, 1)).column(0).into_owned(),
        var_y_b_stderr: mc.cov_stderr[(n, n)],
        mean_y_b_stderr: mc.mean_stderr(n),
        k_b_stderr: if n > 1 { mc.mean_stderr(n + 1) } else { f64::NAN },
    };
    Ok(ConditionalReport {
        subset: subset.clone(),
        method: Method::MonteCarlo,
        prob: mc.count as f64 / draws as f64,
        mean_y_b: mc.mean[n],
        var_y_b: mc.cov[(n, n)],
        k_b: mc.mean[n + 1],
        k_prime_b: None,
        beta,
        cond_cov,
        cond_cross_cov,
        cond_cor,
        min_eigenvalue: min_eig,
        psd_warning: min_eig < 0.0,
        mc: Some(errors),
    })
}

/// Maximum elementwise gap between `Var_B[X] / Var_B[Y]` and
/// `k' Sigma / Var[Y] + (1 - k') beta beta^T`.
pub fn scaled_relation_check(model: &EllipticalModel, a: &[f64], subset: &ProbabilitySubset) -> Result<f64> {
    let report = conditional_covariance(model, a, subset)?;
    let spec = BenchmarkSpec::new(model, a)?;
    let k_prime = report.k_prime_b.expect("analytic report carries k'");
    let lhs = &report.cond_cov / report.var_y_b;
    let rhs = model.sigma() * (k_prime / spec.variance()) + (&report.beta * report.beta.transpose()) * (1.0 - k_prime);
    Ok((lhs - rhs).abs().max())
}
