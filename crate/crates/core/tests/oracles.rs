//! Frozen reference values and Monte Carlo cross-checks.

use condcov::numerics::quadrature::{integrate, QuadOptions};
use condcov::{
    conditional_covariance, k_invariant, k_invariant_mc, k_via_radial, sample, tail_density, EllipticalModel,
    GeneratorFamily, ProbabilitySubset,
};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn sub(lo: f64, hi: f64) -> ProbabilitySubset {
    ProbabilitySubset::interval(lo, hi).unwrap()
}

fn t(nu: f64) -> GeneratorFamily {
    GeneratorFamily::student_t(nu).unwrap()
}

fn model(sigma: &[Vec<f64>], family: GeneratorFamily) -> EllipticalModel {
    EllipticalModel::from_rows(&vec![0.0; sigma.len()], sigma, family).unwrap()
}

fn assert_matrix(got: &DMatrix<f64>, want: &[Vec<f64>], tol: f64) {
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            let g = got[(i, j)];
            assert!((g - w).abs() <= tol * w.abs().max(1.0), "({i},{j}): {g} vs {w}");
        }
    }
}

// values from 40-digit quadrature of the truncated margins
#[test]
fn conditional_covariance_reference_values() {
    let r = conditional_covariance(
        &model(&[vec![1.0, 0.5], vec![0.5, 1.0]], GeneratorFamily::Gaussian),
        &[1.0, 1.0],
        &sub(0.198089615968897, 0.8019103840309825),
    )
    .unwrap();
    assert!((r.var_y_b - 0.653_263_062_169_914).abs() < 1e-9);
    assert_matrix(
        &r.cond_cov,
        &[vec![0.4133157655424785, -0.08668423445752149], vec![-0.08668423445752149, 0.4133157655424785]],
        1e-9,
    );

    let r = conditional_covariance(&model(&[vec![2.0, 0.6], vec![0.6, 1.0]], t(5.0)), &[1.0, -1.0], &sub(0.7, 1.0))
        .unwrap();
    assert!((r.k_b - 1.1567345545947099).abs() < 1e-8);
    assert!((r.var_y_b - 0.8091405702169167).abs() < 1e-8);
    assert_matrix(
        &r.cond_cov,
        &[vec![1.5433938033298582, 0.9140622487167007], vec![0.9140622487167007, 1.09387126432046]],
        1e-8,
    );

    let sigma = [vec![1.0, 0.2, 0.1], vec![0.2, 1.5, -0.4], vec![0.1, -0.4, 0.8]];
    let r = conditional_covariance(&model(&sigma, t(4.0)), &[0.5, 1.0, 2.0], &sub(0.1, 0.35)).unwrap();
    assert!((r.k_b - 0.8112407881333727).abs() < 1e-8);
    assert_matrix(
        &r.cond_cov,
        &[
            vec![0.6464067472056612, 0.015729010135375407, -0.14781208914181765],
            vec![0.015729010135375407, 1.086621939985571, -0.5279951312134867],
            vec![-0.14781208914181765, -0.5279951312134867, 0.331025730568983],
        ],
        1e-8,
    );
}

#[test]
fn full_space_is_unconditional() {
    for family in [GeneratorFamily::Gaussian, t(5.0)] {
        let v = k_invariant(&family, &ProbabilitySubset::full()).unwrap();
        assert!((v.k - 1.0).abs() < 1e-9 && (v.var_v1 - 1.0).abs() < 1e-9, "{v:?}");
    }
}

#[test]
fn quadrature_agrees_with_simulation() {
    let cases = [
        (GeneratorFamily::Gaussian, sub(0.0, 0.2)),
        (GeneratorFamily::Gaussian, "0:0.1,0.6:0.9".parse().unwrap()),
        (t(3.0), sub(0.045, 0.955)),
        (t(3.0), sub(0.9, 1.0)),
        (t(4.0), sub(0.3, 0.7)),
        (t(5.0), sub(0.877, 1.0)),
        (t(7.0), sub(0.15, 0.85)),
        (t(10.0), sub(0.0, 0.166)),
        (t(25.0), "0:0.05,0.95:1".parse().unwrap()),
        (t(50.0), sub(0.4, 0.45)),
    ];
    for (i, (family, a)) in cases.iter().enumerate() {
        let quad = k_invariant(family, a).unwrap();
        let mc = k_invariant_mc(family, a, 10_000_000, 100 + i as u64).unwrap();
        let z = (quad.k - mc.k) / mc.err_estimate;
        assert!(z.abs() < 4.0, "case {i} on {a}: quadrature {} vs simulation {} (z = {z:.2})", quad.k, mc.k);
    }
}

#[test]
fn radial_estimator_agrees_with_quadrature() {
    let iso = model(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], GeneratorFamily::Gaussian);
    let r = k_via_radial(&iso, &[1.0, 1.0, 1.0], &sub(0.0, 0.2), 2_000_000, 1).unwrap();
    assert!((r.value - 1.0).abs() < 4.0 * r.stderr, "{r:?}");

    let m = model(&[vec![1.0, 0.3], vec![0.3, 2.0]], t(7.0));
    let a = sub(0.15, 0.85);
    let r = k_via_radial(&m, &[1.0, 0.5], &a, 10_000_000, 2).unwrap();
    let quad = k_invariant(&t(7.0), &a).unwrap();
    assert!((r.value - quad.k).abs() < 4.0 * r.stderr, "{} vs {}", r.value, quad.k);

    let r = k_via_radial(&m, &[1.0, 0.5], &ProbabilitySubset::full(), 2_000_000, 3).unwrap();
    assert!((r.value - 1.0).abs() < 4.0 * r.stderr, "{r:?}");
}

fn whole_line(f: impl Fn(f64) -> f64) -> f64 {
    let opts = QuadOptions::default().with_abs_tol(1e-13).with_rel_tol(1e-12);
    integrate(&f, f64::NEG_INFINITY, 0.0, &opts).unwrap().value
        + integrate(&f, 0.0, f64::INFINITY, &opts).unwrap().value
}

#[test]
fn tail_density_closed_form_for_student_t() {
    // h(w) = c1 (nu - 2) / (nu - 1) (1 + w^2 / (nu - 2))^{-(nu - 1)/2}
    for nu in [3.0, 5.0, 10.0] {
        let family = t(nu);
        let c1 = family.density_generator(1, 0.0).unwrap();
        for w in [0.0, 0.4, 1.7, 6.0, 40.0] {
            let want = c1 * (nu - 2.0) / (nu - 1.0) * (1.0 + w * w / (nu - 2.0)).powf(-(nu - 1.0) / 2.0);
            let got = tail_density(&family, w).unwrap();
            assert!((got - want).abs() <= 1e-10 * want, "nu {nu}, w {w}: {got} vs {want}");
        }
    }
}

#[test]
fn generator_margins_are_normalized() {
    for family in [GeneratorFamily::Gaussian, t(3.0), t(5.0), t(10.0), t(60.0)] {
        let mass = whole_line(|x| family.std_pdf(x));
        let second = whole_line(|x| x * x * family.std_pdf(x));
        assert!((mass - 1.0).abs() < 1e-8, "{family:?}: mass {mass}");
        assert!((second - 1.0).abs() < 1e-6, "{family:?}: second moment {second}");
    }
}

fn mahalanobis_sq(m: &EllipticalModel, data: &DMatrix<f64>) -> Vec<f64> {
    let inv = m.sigma().clone().try_inverse().unwrap();
    (0..data.nrows())
        .map(|r| {
            let d: DVector<f64> = data.row(r).transpose() - m.mu();
            d.dot(&(&inv * &d))
        })
        .collect()
}

#[test]
fn radial_second_moment_is_the_dimension() {
    for (n, seed) in [(2, 21), (3, 22), (5, 23)] {
        let sigma: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 + i as f64 } else { 0.3 }).collect()).collect();
        let m = EllipticalModel::from_rows(&vec![1.0; n], &sigma, GeneratorFamily::Gaussian).unwrap();
        let r2 = mahalanobis_sq(&m, &sample(&m, 1_000_000, seed).unwrap().data);
        let len = r2.len() as f64;
        let mean = r2.iter().sum::<f64>() / len;
        let var = r2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
        assert!((mean - n as f64).abs() < 4.0 * (var / len).sqrt(), "n {n}: E[R^2] = {mean}");
    }
}

#[test]
fn gaussian_radius_is_chi_squared() {
    let sigma = [vec![2.0, 0.4, 0.0], vec![0.4, 1.0, 0.3], vec![0.0, 0.3, 0.7]];
    let m = EllipticalModel::from_rows(&[0.0, -2.0, 5.0], &sigma, GeneratorFamily::Gaussian).unwrap();
    let mut r2 = mahalanobis_sq(&m, &sample(&m, 200_000, 5).unwrap().data);
    r2.sort_by(f64::total_cmp);
    let chi = ChiSquared::new(3.0).unwrap();
    let len = r2.len() as f64;
    let d = r2
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = chi.cdf(x);
            (c - i as f64 / len).abs().max((i as f64 + 1.0) / len - c)
        })
        .fold(0.0, f64::max);
    // 0.1% critical value of the Kolmogorov distribution
    assert!(d * len.sqrt() < 1.95, "KS statistic {}", d * len.sqrt());
}

#[test]
fn student_sample_matches_covariance() {
    let sigma = [vec![1.0, -0.4], vec![-0.4, 3.0]];
    let m = EllipticalModel::from_rows(&[0.0, 0.0], &sigma, t(6.0)).unwrap();
    let data = sample(&m, 1_000_000, 77).unwrap().data;
    let len = data.nrows() as f64;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let prods: Vec<f64> = (0..data.nrows()).map(|r| data[(r, i)] * data[(r, j)]).collect();
        let mean = prods.iter().sum::<f64>() / len;
        let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (len - 1.0);
        assert!((mean - sigma[i][j]).abs() < 5.0 * (var / len).sqrt(), "({i},{j}): {mean}");
    }
}

#[test]
fn sampling_is_reproducible() {
    let m = model(&[vec![1.0, 0.2], vec![0.2, 1.0]], t(4.0));
    let a = sample(&m, 50_000, 9).unwrap();
    let b = sample(&m, 50_000, 9).unwrap();
    assert!(a.data.iter().zip(b.data.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let c = sample(&m, 50_000, 10).unwrap();
    assert_ne!(a.data, c.data);
    // shorter runs are prefixes of longer ones
    let d = sample(&m, 20_000, 9).unwrap();
    assert_eq!(d.data.rows(0, 20_000), a.data.rows(0, 20_000));
}
