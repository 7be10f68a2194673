//! Generator families and the standardized univariate margin `E_1(0, 1, psi)`.
//!
//! Every family is parametrized so that the scale matrix *is* the covariance
//! matrix. For Student-t with `nu` degrees of freedom the classical scale
//! matrix is therefore `(nu - 2) / nu` times the covariance.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, QuadOptions};
use crate::numerics::roots::brent;
use crate::numerics::special::{beta_reg, erfc, ln_gamma};

/// Scalar density generator `g_k`.
pub type GeneratorFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied generator: univariate and bivariate density generators
/// together with their normalizing constants.
///
/// The standardized densities are `c1 * g1(x^2 / 2)` on the line and
/// `c2 * g2(|x|^2 / 2)` on the plane; both must integrate to one and have
/// unit variance per coordinate.
#[derive(Clone)]
pub struct CustomGenerator {
    pub g1: GeneratorFn,
    pub g2: GeneratorFn,
    pub c1: f64,
    pub c2: f64,
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator").field("c1", &self.c1).field("c2", &self.c2).finish_non_exhaustive()
    }
}

/// Tolerance on the mass and second-moment checks of a custom generator.
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl CustomGenerator {
    /// Builds a custom generator and checks its normalization by quadrature.
    pub fn new(g1: GeneratorFn, g2: GeneratorFn, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
            return Err(Error::BadNormalization("normalizing constants must be positive and finite".into()));
        }
        let gen = Self { g1, g2, c1, c2 };
        gen.check_normalization()?;
        Ok(gen)
    }

    fn check_normalization(&self) -> Result<()> {
        let opts = QuadOptions::default().with_abs_tol(1e-12).with_rel_tol(1e-10);
        let pdf = |x: f64| self.c1 * (self.g1)(0.5 * x * x);
        let mass = 2.0 * integrate(pdf, 0.0, f64::INFINITY, &opts)?.value;
        let second = 2.0 * integrate(|x| x * x * pdf(x), 0.0, f64::INFINITY, &opts)?.value;
        let planar = 2.0 * PI * integrate(|r| r * self.c2 * (self.g2)(0.5 * r * r), 0.0, f64::INFINITY, &opts)?.value;
        for (what, v) in [("univariate mass", mass), ("univariate variance", second), ("bivariate mass", planar)] {
            if (v - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::BadNormalization(format!("{what} = {v}, expected 1")));
            }
        }
        Ok(())
    }
}

/// The generator `psi` of an elliptical law, carried as a tag.
#[derive(Debug, Clone)]
pub enum GeneratorFamily {
    Gaussian,
    StudentT { nu: f64 },
    Custom(CustomGenerator),
}

/// Serializable description of a family, as used in model files and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum FamilySpec {
    Gaussian,
    #[serde(alias = "student-t", alias = "studentt")]
    T {
        nu: f64,
    },
    Custom,
}

impl FamilySpec {
    pub fn to_family(&self) -> Result<GeneratorFamily> {
        match *self {
            FamilySpec::Gaussian => Ok(GeneratorFamily::Gaussian),
            FamilySpec::T { nu } => GeneratorFamily::student_t(nu),
            FamilySpec::Custom => {
                Err(Error::UnsupportedFamily("custom generators cannot be loaded from a file".into()))
            }
        }
    }
}

impl fmt::Display for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorFamily::Gaussian => write!(f, "gaussian"),
            GeneratorFamily::StudentT { nu } => write!(f, "t({nu})"),
            GeneratorFamily::Custom(_) => write!(f, "custom"),
        }
    }
}

impl GeneratorFamily {
    pub fn student_t(nu: f64) -> Result<Self> {
        let family = GeneratorFamily::StudentT { nu };
        family.validate()?;
        Ok(family)
    }

    /// Checks the family parameters (`nu > 2` for Student-t).
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorFamily::StudentT { nu } if !(nu > 2.0) => Err(Error::BadDegreesOfFreedom(nu)),
            _ => Ok(()),
        }
    }

    pub fn spec(&self) -> FamilySpec {
        match *self {
            GeneratorFamily::Gaussian => FamilySpec::Gaussian,
            GeneratorFamily::StudentT { nu } => FamilySpec::T { nu },
            GeneratorFamily::Custom(_) => FamilySpec::Custom,
        }
    }

    /// `c_k * g_k(u)` for `k` in {1, 2}: the standardized `k`-dimensional
    /// density at any point with half squared norm `u`.
    pub fn density_generator(&self, k: u8, u: f64) -> Result<f64> {
        if u < 0.0 || u.is_nan() {
            return Err(Error::NegativeArgument(u));
        }
        if !(k == 1 || k == 2) {
            return Err(Error::InvalidArgument(format!("generator dimension must be 1 or 2, got {k}")));
        }
        Ok(self.density_generator_unchecked(k, u))
    }

    pub(crate) fn density_generator_unchecked(&self, k: u8, u: f64) -> f64 {
        match self {
            GeneratorFamily::Gaussian => {
                let c = if k == 1 { 1.0 / (2.0 * PI).sqrt() } else { 1.0 / (2.0 * PI) };
                c * (-u).exp()
            }
            GeneratorFamily::StudentT { nu } => {
                let (nu, kf) = (*nu, f64::from(k));
                let log_c = ln_gamma(0.5 * (nu + kf)) - ln_gamma(0.5 * nu) - 0.5 * kf * (PI * (nu - 2.0)).ln();
                (log_c - 0.5 * (nu + kf) * (2.0 * u / (nu - 2.0)).ln_1p()).exp()
            }
            GeneratorFamily::Custom(g) => {
                if k == 1 {
                    g.c1 * (g.g1)(u)
                } else {
                    g.c2 * (g.g2)(u)
                }
            }
        }
    }

    /// Density of the standardized univariate margin.
    pub fn std_pdf(&self, x: f64) -> f64 {
        self.density_generator_unchecked(1, 0.5 * x * x)
    }

    /// Distribution function of the standardized univariate margin.
    pub fn std_cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        match self {
            GeneratorFamily::Gaussian => 0.5 * erfc(-x / SQRT_2),
            GeneratorFamily::StudentT { nu } => {
                let nu = *nu;
                // classical t variable
                let t2 = x * x * nu / (nu - 2.0);
                let (x_near, x_far) = (t2 / (nu + t2), nu / (nu + t2));
                let lower_tail = if t2 < nu {
                    0.5 - 0.5 * beta_reg(0.5, 0.5 * nu, x_near, x_far)
                } else {
                    0.5 * beta_reg(0.5 * nu, 0.5, x_far, x_near)
                };
                if x <= 0.0 {
                    lower_tail
                } else {
                    1.0 - lower_tail
                }
            }
            GeneratorFamily::Custom(_) => {
                let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-12);
                let pdf = |t: f64| self.std_pdf(t);
                let tail = integrate(pdf, f64::NEG_INFINITY, -x.abs(), &opts).map(|r| r.value).unwrap_or(f64::NAN);
                if x <= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
        }
    }

    /// Quantile function of the standardized univariate margin.
    ///
    /// Accepts the closed interval; `0` and `1` map to the infinite ends.
    pub fn std_quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        if p > 0.5 {
            return Ok(-self.lower_quantile(1.0 - p)?);
        }
        self.lower_quantile(p)
    }

    /// Quantile for `p < 0.5`, refined by Newton steps against `std_cdf`.
    fn lower_quantile(&self, p: f64) -> Result<f64> {
        let mut x = match self {
            GeneratorFamily::Gaussian => Normal::standard().inverse_cdf(p),
            GeneratorFamily::StudentT { nu } => {
                let t = StudentsT::new(0.0, 1.0, *nu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                t.inverse_cdf(p) * ((nu - 2.0) / nu).sqrt()
            }
            GeneratorFamily::Custom(_) => return self.custom_quantile(p),
        };
        for _ in 0..8 {
            let dens = self.std_pdf(x);
            if !(dens > 0.0) {
                break;
            }
            let step = (self.std_cdf(x) - p) / dens;
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        Ok(x)
    }

    fn custom_quantile(&self, p: f64) -> Result<f64> {
        let mut lo = -1.0;
        while self.std_cdf(lo) > p {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::NoConvergence { iterations: 40, detail: format!("cannot bracket quantile {p}") });
            }
        }
        let root = brent(|x| Ok(self.std_cdf(x) - p), lo, 0.0, 1e-13, 200)?;
        Ok(root.x)
    }
}
