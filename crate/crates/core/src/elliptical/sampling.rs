//! Seeded Monte Carlo sampling through the canonical representation
//! `X = mu + R A U`.
//!
//! Draws are generated in fixed-size chunks; chunk `i` uses its own ChaCha
//! stream derived from `(seed, i)`, so output is bit-identical regardless of
//! how many threads rayon uses.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use rayon::prelude::*;

use super::{EllipticalModel, GeneratorFamily};
use crate::error::{Error, Result};

pub(crate) const CHUNK: usize = 1 << 14;

/// Rows drawn from a model, stored row-major as `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub data: DMatrix<f64>,
    pub seed: u64,
}

impl SampleMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

/// Deterministic RNG for substream `stream` of `seed`.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `job` over `count` draws split into chunks, in parallel, and returns
/// the per-chunk results in chunk order.
pub(crate) fn chunked<R, F>(count: usize, seed: u64, job: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> R + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            job(&mut rng, len)
        })
        .collect()
}

/// Draws standardized spherical vectors (`mu = 0`, covariance `Id`).
#[derive(Debug, Clone)]
pub(crate) enum SphericalSampler {
    Gaussian,
    StudentT { nu: f64, chi2: ChiSquared<f64> },
}

impl SphericalSampler {
    pub(crate) fn new(family: &GeneratorFamily) -> Result<Self> {
        match *family {
            GeneratorFamily::Gaussian => Ok(Self::Gaussian),
            GeneratorFamily::StudentT { nu } => {
                let chi2 =
                    ChiSquared::new(nu).map_err(|e| Error::InvalidArgument(format!("chi-squared({nu}): {e}")))?;
                Ok(Self::StudentT { nu, chi2 })
            }
            GeneratorFamily::Custom(_) => Err(Error::UnsupportedFamily(
                "sampling needs a radial law; custom generators provide only g1 and g2".into(),
            )),
        }
    }

    /// Fills `out` with one draw. The squared norm of `out` is a draw of
    /// `R^2`, with `E[R^2] = out.len()`.
    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        // |Z| ~ chi_n and Z/|Z| is uniform on the sphere, so Z = R U directly.
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        if let Self::StudentT { nu, chi2 } = self {
            let q: f64 = rng.sample(chi2);
            let w = ((nu - 2.0) / q).sqrt();
            out.iter_mut().for_each(|v| *v *= w);
        }
    }
}

/// Applies `x = mu + A z` in place of a scratch row.
pub(crate) fn transform(model: &EllipticalModel, z: &[f64], x: &mut [f64]) {
    let a = model.factor();
    let mu = model.mu();
    let n = z.len();
    for i in 0..n {
        let mut s = mu[i];
        for (k, zk) in z.iter().enumerate().take(i + 1) {
            s += a[(i, k)] * zk;
        }
        x[i] = s;
    }
}

/// Draws `count` rows from `model`; a pure function of `(model, count, seed)`.
pub fn sample(model: &EllipticalModel, count: usize, seed: u64) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let sampler = SphericalSampler::new(model.family())?;
    let n = model.dim();
    let parts = chunked(count, seed, |rng, len| {
        let mut z = vec![0.0; n];
        let mut rows = vec![0.0; len * n];
        for row in rows.chunks_exact_mut(n) {
            sampler.fill(rng, &mut z);
            transform(model, &z, row);
        }
        rows
    });
    let flat: Vec<f64> = parts.into_iter().flatten().collect();
    Ok(SampleMatrix { data: DMatrix::from_row_slice(count, n, &flat), seed })
}
