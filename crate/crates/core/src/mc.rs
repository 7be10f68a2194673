//! Conditional sample moments over a seeded stream of draws.
//!
//! Two passes over the same deterministic stream: the first finds the
//! conditional mean, the second accumulates centered cross-products and
//! their second moments, which give standard errors for covariance entries.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::elliptical::sampling::chunked;
use crate::error::{Error, Result};

/// Minimum number of conditioned draws for a usable estimate.
pub const MIN_CONDITIONED: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct ConditionalMoments {
    pub total: usize,
    pub count: usize,
    pub mean: DVector<f64>,
    /// Sample covariance, divisor `count - 1`.
    pub cov: DMatrix<f64>,
    /// Standard error of each entry of `cov`.
    pub cov_stderr: DMatrix<f64>,
    /// Covariance between the centered products `(i, j)` and `(k, l)`,
    /// indexed through `pair_index`.
    pub product_cov: DMatrix<f64>,
}

pub(crate) fn pair_index(width: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * width - i * (i + 1) / 2 + j
}

impl ConditionalMoments {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean_stderr(&self, i: usize) -> f64 {
        (self.cov[(i, i)] / self.count as f64).sqrt()
    }

    /// Covariance of the estimators of `cov[(i,j)]` and `cov[(k,l)]`.
    pub fn estimator_cov(&self, ij: (usize, usize), kl: (usize, usize)) -> f64 {
        let w = self.width();
        self.product_cov[(pair_index(w, ij.0, ij.1), pair_index(w, kl.0, kl.1))] / self.count as f64
    }
}

/// `generate` fills a tracked vector of length `width` for one draw and
/// reports whether the draw lies in the conditioning event.
pub(crate) fn conditional_moments<G>(draws: usize, seed: u64, width: usize, generate: G) -> Result<ConditionalMoments>
where
    G: Fn(&mut ChaCha8Rng, &mut [f64]) -> bool + Sync,
{
    let first = chunked(draws, seed, |rng, len| {
        let mut buf = vec![0.0; width];
        let mut sums = vec![0.0; width];
        let mut count = 0usize;
        for _ in 0..len {
            if generate(rng, &mut buf) {
                count += 1;
                sums.iter_mut().zip(&buf).for_each(|(s, v)| *s += v);
            }
        }
        (count, sums)
    });
    let count: usize = first.iter().map(|(c, _)| c).sum();
    if count < MIN_CONDITIONED {
        return Err(Error::TooFewConditionedSamples { got: count, needed: MIN_CONDITIONED });
    }
    let mut mean = DVector::zeros(width);
    for (_, sums) in &first {
        for (m, s) in mean.iter_mut().zip(sums) {
            *m += s;
        }
    }
    mean /= count as f64;

    let pairs = width * (width + 1) / 2;
    let second = chunked(draws, seed, |rng, len| {
        let mut buf = vec![0.0; width];
        let mut prod = vec![0.0; pairs];
        let mut sum_prod = vec![0.0; pairs];
        let mut sum_outer = vec![0.0; pairs * pairs];
        for _ in 0..len {
            if !generate(rng, &mut buf) {
                continue;
            }
            for (v, m) in buf.iter_mut().zip(mean.iter()) {
                *v -= m;
            }
            let mut p = 0;
            for i in 0..width {
                for j in i..width {
                    prod[p] = buf[i] * buf[j];
                    p += 1;
                }
            }
            for a in 0..pairs {
                sum_prod[a] += prod[a];
                let row = &mut sum_outer[a * pairs..(a + 1) * pairs];
                for (b, cell) in row.iter_mut().enumerate().skip(a) {
                    *cell += prod[a] * prod[b];
                }
            }
        }
        (sum_prod, sum_outer)
    });
    let mut sum_prod = vec![0.0; pairs];
    let mut sum_outer = vec![0.0; pairs * pairs];
    for (sp, so) in &second {
        sum_prod.iter_mut().zip(sp).for_each(|(a, b)| *a += b);
        sum_outer.iter_mut().zip(so).for_each(|(a, b)| *a += b);
    }

    let m = count as f64;
    let mut cov = DMatrix::zeros(width, width);
    for i in 0..width {
        for j in i..width {
            let v = sum_prod[pair_index(width, i, j)] / (m - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let mut product_cov = DMatrix::zeros(pairs, pairs);
    for a in 0..pairs {
        for b in a..pairs {
            let v = sum_outer[a * pairs + b] / m - (sum_prod[a] / m) * (sum_prod[b] / m);
            product_cov[(a, b)] = v;
            product_cov[(b, a)] = v;
        }
    }
    let mut cov_stderr = DMatrix::zeros(width, width);
    for i in 0..width {
        for j in 0..width {
            let p = pair_index(width, i, j);
            cov_stderr[(i, j)] = (product_cov[(p, p)].max(0.0) / m).sqrt();
        }
    }
    Ok(ConditionalMoments { total: draws, count, mean, cov, cov_stderr, product_cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn pair_index_is_dense_upper_triangle() {
        let w = 4;
        let mut seen = vec![];
        for i in 0..w {
            for j in i..w {
                seen.push(pair_index(w, i, j));
            }
        }
        assert_eq!(seen, (0..w * (w + 1) / 2).collect::<Vec<_>>());
        assert_eq!(pair_index(w, 3, 1), pair_index(w, 1, 3));
    }

    #[test]
    fn unconditional_normal_moments() {
        let mc = conditional_moments(200_000, 3, 2, |rng, buf| {
            let z: f64 = rng.sample(StandardNormal);
            buf[0] = 2.0 * z;
            buf[1] = z + rng.sample::<f64, _>(StandardNormal);
            true
        })
        .unwrap();
        // cov = [[4, 2], [2, 2]]
        let target = [[4.0, 2.0], [2.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                let z = (mc.cov[(i, j)] - target[i][j]) / mc.cov_stderr[(i, j)];
                assert!(z.abs() < 4.0, "({i},{j}) z = {z}");
            }
        }
        // Var of sample variance of N(0, 4) is 2 * 16 / m
        let expected = (32.0 / 200_000f64).sqrt();
        assert!((mc.cov_stderr[(0, 0)] / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_conditioned() {
        let r = conditional_moments(10_000, 1, 1, |rng, buf| {
            buf[0] = rng.random();
            buf[0] < 0.001
        });
        assert!(matches!(r, Err(Error::TooFewConditionedSamples { .. })));
    }
}
