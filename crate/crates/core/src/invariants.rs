//! Truncated univariate moments, the tail density `h`, and the K- and
//! K'-invariants.
//!
//! For `V = (V1, V2) ~ E_2(0, Id, psi)` and `A` a subset of (0, 1):
//!
//! ```text
//! K(psi, A)  = Var[V2 | F1(V1) in A] = P[W in B] / P[V1 in B],   B = F1^{-1}(A)
//! K'(psi, A) = K(psi, A) / Var[V1 | F1(V1) in A]
//! ```
//!
//! where `W` has the tail density `h(w) = c1 * int_{w^2/2}^inf g1(u) du`.
//! Both quantities are computed here by adaptive quadrature; the Monte Carlo
//! routines simulate the definition directly and serve as oracles.

use serde::{Deserialize, Serialize};

use crate::elliptical::sampling::{transform, SphericalSampler};
use crate::elliptical::{check_weights, BenchmarkSpec, EllipticalModel, GeneratorFamily};
use crate::error::{Error, Result};
use crate::mc::conditional_moments;
use crate::numerics::quadrature::{integrate, Integral, QuadOptions};
use crate::subset::ProbabilitySubset;

/// Minimum draw count accepted by the Monte Carlo estimators.
pub const MIN_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// Probability, mean and variance of `Y` on `{F_Y(Y) in A}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TruncatedMoments {
    pub prob: f64,
    pub mean: f64,
    pub variance: f64,
    pub err_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InvariantValue {
    pub k: f64,
    pub k_prime: f64,
    #[serde(rename = "varV1")]
    pub var_v1: f64,
    pub method: Method,
    /// Error bound (quadrature) or standard error (Monte Carlo) of `k`.
    pub err_estimate: f64,
    pub k_prime_err: f64,
    pub var_v1_err: f64,
    /// Monte Carlo only: draws generated and draws inside the event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<(usize, usize)>,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub conditioned: usize,
    pub draws: usize,
}

/// Absolute tolerance scaled to the probability carried by an interval.
fn mass_options(prob: f64) -> QuadOptions {
    QuadOptions::default().with_abs_tol(1e-10 * prob.min(1.0)).with_rel_tol(1e-10)
}

/// Standardized value-space intervals `F1^{-1}(A)`.
fn standard_bounds(family: &GeneratorFamily, subset: &ProbabilitySubset) -> Result<Vec<(f64, f64)>> {
    subset.intervals().iter().map(|&(lo, hi)| Ok((family.std_quantile(lo)?, family.std_quantile(hi)?))).collect()
}

/// Standardized truncated moments `(mean, variance)` with an error bound.
pub(crate) fn standard_truncated(family: &GeneratorFamily, subset: &ProbabilitySubset) -> Result<(f64, f64, f64)> {
    let prob = subset.measure();
    if !(prob > 0.0) {
        return Err(Error::EmptySubset);
    }
    let bounds = standard_bounds(family, subset)?;
    let pdf = |z: f64| family.std_pdf(z);
    let mut first = Integral::ZERO;
    for (&(plo, phi), &(lo, hi)) in subset.intervals().iter().zip(&bounds) {
        first = first + integrate(|z| z * pdf(z), lo, hi, &mass_options(phi - plo))?;
    }
    let mean = first.value / prob;
    // Centered second pass avoids cancellation in far-tail cells.
    let mut second = Integral::ZERO;
    for (&(plo, phi), &(lo, hi)) in subset.intervals().iter().zip(&bounds) {
        let d = |z: f64| (z - mean) * (z - mean) * pdf(z);
        second = second + integrate(d, lo, hi, &mass_options(phi - plo))?;
    }
    let variance = second.value / prob;
    let err = (first.error + second.error) / prob;
    Ok((mean, variance, err))
}

/// `P[F_Y(Y) in A]`, `E_B[Y]` and `Var_B[Y]` by quadrature over the
/// value-space image of `subset`.
pub fn truncated_moments(spec: &BenchmarkSpec, subset: &ProbabilitySubset) -> Result<TruncatedMoments> {
    let (mean, variance, err) = standard_truncated(spec.family(), subset)?;
    let s = spec.sd();
    Ok(TruncatedMoments {
        prob: subset.measure(),
        mean: spec.mean() + s * mean,
        variance: spec.variance() * variance,
        err_estimate: spec.variance() * err,
    })
}

/// Tail density `h(w) = c1 * int_{w^2/2}^inf g1(u) du`.
pub fn tail_density(family: &GeneratorFamily, w: f64) -> Result<f64> {
    if w.is_nan() {
        return Err(Error::InvalidArgument("tail density at NaN".into()));
    }
    Ok(tail_density_integral(family, w)?.value)
}

fn tail_density_integral(family: &GeneratorFamily, w: f64) -> Result<Integral> {
    let opts = QuadOptions::default().with_abs_tol(0.0).with_rel_tol(1e-12);
    integrate(|u| family.density_generator_unchecked(1, u), 0.5 * w * w, f64::INFINITY, &opts)
}

/// `P[W in B]` over `B = F1^{-1}(A)`.
///
/// Since `h'(w) = -w f(w)` for the standardized density `f`, integrating by
/// parts gives `int_a^b h = [w h(w)]_a^b + int_a^b w^2 f(w) dw`, which needs
/// `h` only at finite endpoints.
fn tail_mass(family: &GeneratorFamily, subset: &ProbabilitySubset) -> Result<Integral> {
    let bounds = standard_bounds(family, subset)?;
    let mut total = Integral::ZERO;
    for (&(plo, phi), &(lo, hi)) in subset.intervals().iter().zip(&bounds) {
        let edge = |w: f64| -> Result<Integral> {
            if w.is_finite() {
                let h = tail_density_integral(family, w)?;
                Ok(Integral { value: w * h.value, error: w.abs() * h.error, evaluations: h.evaluations })
            } else {
                Ok(Integral::ZERO)
            }
        };
        let (upper, lower) = (edge(hi)?, edge(lo)?);
        let inner = integrate(|w| w * w * family.std_pdf(w), lo, hi, &mass_options(phi - plo))?;
        total = total
            + inner
            + Integral {
                value: upper.value - lower.value,
                error: upper.error + lower.error,
                evaluations: upper.evaluations + lower.evaluations,
            };
    }
    Ok(total)
}

/// `P[W in B]` by direct quadrature of `h`, each node a quadrature itself.
#[cfg(test)]
fn tail_mass_nested(family: &GeneratorFamily, subset: &ProbabilitySubset) -> Result<Integral> {
    let bounds = standard_bounds(family, subset)?;
    let mut total = Integral::ZERO;
    for (&(plo, phi), &(lo, hi)) in subset.intervals().iter().zip(&bounds) {
        let failure = std::cell::Cell::new(None);
        let h = |w: f64| match tail_density_integral(family, w) {
            Ok(r) => r.value,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        };
        let part = integrate(h, lo, hi, &mass_options(phi - plo))?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total = total + part;
    }
    Ok(total)
}

/// K- and K'-invariants by quadrature.
pub fn k_invariant(family: &GeneratorFamily, subset: &ProbabilitySubset) -> Result<InvariantValue> {
    family.validate()?;
    let prob = subset.measure();
    if !(prob > 0.0) {
        return Err(Error::EmptySubset);
    }
    let mass = tail_mass(family, subset)?;
    let k = mass.value / prob;
    let k_err = mass.error / prob;
    let (_, var_v1, var_err) = standard_truncated(family, subset)?;
    if !(var_v1 > 0.0) {
        return Err(Error::DegenerateConditionalVariance(var_v1));
    }
    let k_prime = k / var_v1;
    Ok(InvariantValue {
        k,
        k_prime,
        var_v1,
        method: Method::Quadrature,
        err_estimate: k_err,
        k_prime_err: k_prime * (k_err / k.abs().max(f64::MIN_POSITIVE) + var_err / var_v1),
        var_v1_err: var_err,
        draws: None,
    })
}

/// K- and K'-invariants by direct simulation of `V ~ E_2(0, Id, psi)`.
pub fn k_invariant_mc(
    family: &GeneratorFamily,
    subset: &ProbabilitySubset,
    draws: usize,
    seed: u64,
) -> Result<InvariantValue> {
    if draws < MIN_DRAWS {
        return Err(Error::TooFewDraws { got: draws, needed: MIN_DRAWS });
    }
    family.validate()?;
    let sampler = SphericalSampler::new(family)?;
    let bounds = standard_bounds(family, subset)?;
    let inside = |v: f64| bounds.iter().any(|&(lo, hi)| v >= lo && v < hi);
    let mc = conditional_moments(draws, seed, 2, |rng, buf| {
        sampler.fill(rng, buf);
        inside(buf[0])
    })?;
    let var_v1 = mc.cov[(0, 0)];
    let k = mc.cov[(1, 1)];
    let k_prime = k / var_v1;
    // delta method for the ratio of the two variance estimators
    let v11 = mc.estimator_cov((0, 0), (0, 0));
    let v22 = mc.estimator_cov((1, 1), (1, 1));
    let v12 = mc.estimator_cov((0, 0), (1, 1));
    let ratio_var = (v22 / (k * k) + v11 / (var_v1 * var_v1) - 2.0 * v12 / (k * var_v1)) * k_prime * k_prime;
    Ok(InvariantValue {
        k,
        k_prime,
        var_v1,
        method: Method::MonteCarlo,
        err_estimate: mc.cov_stderr[(1, 1)],
        k_prime_err: ratio_var.max(0.0).sqrt(),
        var_v1_err: mc.cov_stderr[(0, 0)],
        draws: Some((mc.total, mc.count)),
    })
}

/// Monte Carlo estimate of the K-invariant through the radial variable:
/// `(E_B[R^2] - E_B[(Y - a mu)^2] / Var[Y]) / (n - 1)`.
pub fn k_via_radial(
    model: &EllipticalModel,
    a: &[f64],
    subset: &ProbabilitySubset,
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n = model.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("radial identity needs dimension at least 2".into()));
    }
    if draws < MIN_DRAWS {
        return Err(Error::TooFewDraws { got: draws, needed: MIN_DRAWS });
    }
    let weights = check_weights(model, a)?;
    let spec = BenchmarkSpec::new(model, a)?;
    let bounds = subset.to_values(&spec)?;
    let sampler = SphericalSampler::new(model.family())?;
    let (mean_y, var_y) = (spec.mean(), spec.variance());
    let mc = conditional_moments(draws, seed, 1, |rng, buf| {
        let mut z = vec![0.0; n];
        let mut x = vec![0.0; n];
        sampler.fill(rng, &mut z);
        transform(model, &z, &mut x);
        let y: f64 = x.iter().zip(weights.iter()).map(|(xi, ai)| xi * ai).sum();
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let d = y - mean_y;
        buf[0] = (r2 - d * d / var_y) / (n as f64 - 1.0);
        bounds.iter().any(|&(lo, hi)| y >= lo && y < hi)
    })?;
    Ok(McEstimate { value: mc.mean[0], stderr: mc.mean_stderr(0), conditioned: mc.count, draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sub(lo: f64, hi: f64) -> ProbabilitySubset {
        ProbabilitySubset::interval(lo, hi).unwrap()
    }

    #[test]
    fn full_space_moments() {
        let spec = BenchmarkSpec::standardized(GeneratorFamily::Gaussian);
        let m = truncated_moments(&spec, &ProbabilitySubset::full()).unwrap();
        assert_eq!(m.prob, 1.0);
        assert!(m.mean.abs() < 1e-12);
        assert!((m.variance - 1.0).abs() < 1e-10);
    }

    #[test]
    fn half_normal_moments() {
        let spec = BenchmarkSpec::standardized(GeneratorFamily::Gaussian);
        let m = truncated_moments(&spec, &sub(0.0, 0.5)).unwrap();
        assert_eq!(m.prob, 0.5);
        assert!((m.mean + (2.0 / PI).sqrt()).abs() < 1e-10);
        assert!((m.variance - (1.0 - 2.0 / PI)).abs() < 1e-10);
    }

    #[test]
    fn symmetric_interval_has_zero_mean() {
        let spec = BenchmarkSpec::standardized(GeneratorFamily::Gaussian);
        let m = truncated_moments(&spec, &sub(0.198, 0.802)).unwrap();
        assert!(m.mean.abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_density_is_phi() {
        let g = GeneratorFamily::Gaussian;
        assert!((tail_density(&g, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-12);
        let phi = (-1.125f64).exp() / (2.0 * PI).sqrt();
        assert!((tail_density(&g, 1.5).unwrap() - phi).abs() < 1e-12);
        assert!((phi - 0.129_517_595_665_891_7).abs() < 1e-15);
    }

    #[test]
    fn tail_density_is_even() {
        let t = GeneratorFamily::student_t(4.0).unwrap();
        for w in [0.3, 1.7, 6.0] {
            assert_eq!(tail_density(&t, w).unwrap(), tail_density(&t, -w).unwrap());
        }
    }

    #[test]
    fn gaussian_k_is_one() {
        let v = k_invariant(&GeneratorFamily::Gaussian, &sub(0.0, 0.2)).unwrap();
        assert!((v.k - 1.0).abs() < 1e-8, "k = {}", v.k);
        assert!((v.k_prime * v.var_v1 - v.k).abs() <= 10.0 * v.err_estimate.max(1e-16));
    }

    #[test]
    fn student_full_space_k_is_one() {
        let t5 = GeneratorFamily::student_t(5.0).unwrap();
        let v = k_invariant(&t5, &ProbabilitySubset::full()).unwrap();
        assert!((v.k - 1.0).abs() < 1e-8, "k = {}", v.k);
        assert!((v.var_v1 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn empty_and_bad_inputs() {
        assert!(matches!(
            k_invariant_mc(&GeneratorFamily::Gaussian, &sub(0.0, 1.0), 10, 1),
            Err(Error::TooFewDraws { .. })
        ));
        assert!(matches!(
            k_invariant_mc(&GeneratorFamily::Gaussian, &sub(0.0, 1e-6), 10_000, 1),
            Err(Error::TooFewConditionedSamples { .. })
        ));
    }

    #[test]
    fn mc_gaussian_middle_slice() {
        let v = k_invariant_mc(&GeneratorFamily::Gaussian, &sub(0.4, 0.6), 1_000_000, 11).unwrap();
        assert!(((v.k - 1.0) / v.err_estimate).abs() < 4.0, "k = {} ± {}", v.k, v.err_estimate);
    }

    #[test]
    fn mc_full_space_var_v1() {
        let t = GeneratorFamily::student_t(6.0).unwrap();
        let v = k_invariant_mc(&t, &ProbabilitySubset::full(), 1_000_000, 5).unwrap();
        assert!(((v.var_v1 - 1.0) / v.var_v1_err).abs() < 4.0);
    }

    #[test]
    fn student_tail_density_closed_form() {
        // c1 (nu-2)/(nu-1) (1 + w^2/(nu-2))^{-(nu-1)/2} at nu = 5, w = 1.3
        let t5 = GeneratorFamily::student_t(5.0).unwrap();
        assert!((tail_density(&t5, 1.3).unwrap() - 0.150_389_085_907_535_98).abs() < 1e-12);
    }

    #[test]
    fn student_k_reference_values() {
        // (nu - 2 + E[V1^2 | B]) / (nu - 1) evaluated at 40 digits
        let cases = [
            (5.0, 0.877, 1.0, 1.560_165_387_054_989_6, 3.039_617_422_733_211_3),
            (3.0, 0.045, 0.955, 0.671_175_913_776_158_9, 1.960_485_850_403_677),
            (7.0, 0.15, 0.85, 0.874_784_398_245_272_1, 3.517_337_854_100_650_6),
            (10.0, 0.0, 0.2, 1.135_939_993_064_268_4, 3.660_691_727_327_832),
        ];
        for (nu, lo, hi, k, kp) in cases {
            let t = GeneratorFamily::student_t(nu).unwrap();
            let v = k_invariant(&t, &sub(lo, hi)).unwrap();
            assert!((v.k - k).abs() < 1e-9, "nu = {nu}: k = {}", v.k);
            assert!((v.k_prime - kp).abs() < 1e-8, "nu = {nu}: k' = {}", v.k_prime);
        }
    }

    #[test]
    fn parts_identity_matches_nested_quadrature() {
        let t = GeneratorFamily::student_t(4.0).unwrap();
        let a = ProbabilitySubset::new(vec![(0.0, 0.1), (0.3, 0.45), (0.9, 1.0)]).unwrap();
        let fast = tail_mass(&t, &a).unwrap().value;
        let nested = tail_mass_nested(&t, &a).unwrap().value;
        assert!((fast - nested).abs() < 1e-10, "{fast} vs {nested}");
    }
}
