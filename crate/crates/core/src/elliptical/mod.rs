//! Elliptical models `X ~ E_n(mu, Sigma, psi)` and the univariate law of a
//! linear benchmark `Y = a X`.

pub mod family;
pub mod sampling;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
pub use family::{CustomGenerator, FamilySpec, GeneratorFamily};
pub use sampling::{sample, SampleMatrix};

/// Relative pivot floor for the Cholesky factorization.
pub const PIVOT_TOL: f64 = 1e-12;

/// Validated elliptical model. `sigma` is the covariance matrix and `factor`
/// the lower-triangular `A` with `A A^T = sigma`.
#[derive(Debug, Clone)]
pub struct EllipticalModel {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    factor: DMatrix<f64>,
    family: GeneratorFamily,
}

/// Checks dimensions, symmetry, positive definiteness and family parameters.
pub fn validate_model(mu: DVector<f64>, sigma: DMatrix<f64>, family: GeneratorFamily) -> Result<EllipticalModel> {
    EllipticalModel::new(mu, sigma, family)
}

impl EllipticalModel {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, family: GeneratorFamily) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if sigma.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.nrows() });
        }
        if sigma.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.ncols() });
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry in mu or sigma".into()));
        }
        family.validate()?;
        let scale = sigma.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                let gap = (sigma[(i, j)] - sigma[(j, i)]).abs();
                if gap > 1e-12 * scale {
                    return Err(Error::NonSymmetric { row: i, col: j, gap });
                }
            }
        }
        let factor = cholesky(&sigma)?;
        Ok(Self { mu, sigma, factor, family })
    }

    /// Convenience constructor from plain slices (`sigma` given row by row).
    pub fn from_rows(mu: &[f64], sigma: &[Vec<f64>], family: GeneratorFamily) -> Result<Self> {
        let n = mu.len();
        if let Some(row) = sigma.iter().find(|r| r.len() != sigma.len()) {
            return Err(Error::DimensionMismatch { expected: sigma.len(), got: row.len() });
        }
        let flat: Vec<f64> = sigma.iter().flatten().copied().collect();
        if sigma.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
        }
        Self::new(DVector::from_column_slice(mu), DMatrix::from_row_slice(n, n, &flat), family)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }
    pub fn family(&self) -> &GeneratorFamily {
        &self.family
    }

    /// Same location and generator, covariance replaced.
    pub fn with_sigma(&self, sigma: DMatrix<f64>) -> Result<Self> {
        Self::new(self.mu.clone(), sigma, self.family.clone())
    }

    /// Correlation matrix of `sigma`.
    pub fn correlation(&self) -> DMatrix<f64> {
        crate::conditional::covariance_to_correlation(&self.sigma)
    }
}

/// Lower Cholesky factor; rejects pivots below `PIVOT_TOL * max diag`.
fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    let max_diag = (0..n).map(|i| sigma[(i, i)]).fold(0.0f64, f64::max);
    let floor = PIVOT_TOL * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = sigma[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > floor) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Univariate law of the benchmark `Y = a X`: `E_1(a mu, a Sigma a^T, psi)`.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    weights: DVector<f64>,
    mean: f64,
    variance: f64,
    family: GeneratorFamily,
}

pub fn benchmark(model: &EllipticalModel, a: &[f64]) -> Result<BenchmarkSpec> {
    BenchmarkSpec::new(model, a)
}

impl BenchmarkSpec {
    pub fn new(model: &EllipticalModel, a: &[f64]) -> Result<Self> {
        let weights = check_weights(model, a)?;
        let mean = weights.dot(model.mu());
        let variance = (model.sigma() * &weights).dot(&weights);
        if !(variance > 0.0) {
            return Err(Error::ZeroWeightVector);
        }
        Ok(Self { weights, mean, variance, family: model.family().clone() })
    }

    /// The standardized margin `E_1(0, 1, psi)` viewed as a benchmark.
    pub fn standardized(family: GeneratorFamily) -> Self {
        Self { weights: DVector::from_element(1, 1.0), mean: 0.0, variance: 1.0, family }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn variance(&self) -> f64 {
        self.variance
    }
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
    pub fn family(&self) -> &GeneratorFamily {
        &self.family
    }

    /// `F_Y(y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        self.family.std_cdf((y - self.mean) / self.sd())
    }

    /// `F_Y^{-1}(p)` for `p` strictly inside (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        self.value_at(p)
    }

    /// Quantile on the closed interval, with 0 and 1 mapped to -inf and +inf.
    pub(crate) fn value_at(&self, p: f64) -> Result<f64> {
        Ok(self.mean + self.sd() * self.family.std_quantile(p)?)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let s = self.sd();
        self.family.std_pdf((y - self.mean) / s) / s
    }
}

pub(crate) fn check_weights(model: &EllipticalModel, a: &[f64]) -> Result<DVector<f64>> {
    if a.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: a.len() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite weight".into()));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroWeightVector);
    }
    Ok(DVector::from_column_slice(a))
}
