use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elliptical::BenchmarkSpec;
use crate::error::{Error, Result};

/// A finite union of disjoint subintervals of (0, 1), in probability space.
///
/// Each pair `(lo, hi)` stands for the half-open cell `[lo, hi)`; since every
/// law handled here is continuous the boundary convention carries no mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ProbabilitySubset {
    intervals: Vec<(f64, f64)>,
}

impl ProbabilitySubset {
    /// Sorts the intervals and checks bounds, non-degeneracy and disjointness.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptySubset);
        }
        for &(lo, hi) in &intervals {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > 1.0 {
                return Err(Error::InvalidSubset(format!("({lo}, {hi}) is not inside [0, 1]")));
            }
            if lo >= hi {
                return Err(Error::InvalidSubset(format!("({lo}, {hi}) is empty or reversed")));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidSubset(format!(
                    "({}, {}) overlaps ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    /// The whole unit interval.
    pub fn full() -> Self {
        Self { intervals: vec![(0.0, 1.0)] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Lebesgue measure, which equals `P[F_Y(Y) in A]`.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// `{1 - x : x in A}`.
    pub fn reflect(&self) -> Self {
        let mut intervals: Vec<_> = self.intervals.iter().map(|&(lo, hi)| (1.0 - hi, 1.0 - lo)).collect();
        intervals.reverse();
        Self { intervals }
    }

    /// Builds the probability-space subset for value-space intervals of `Y`.
    pub fn from_values(spec: &BenchmarkSpec, values: &[(f64, f64)]) -> Result<Self> {
        Self::new(values.iter().map(|&(lo, hi)| (spec.cdf(lo), spec.cdf(hi))).collect())
    }

    /// Maps each interval to value space through `spec`'s quantile function.
    pub fn to_values(&self, spec: &BenchmarkSpec) -> Result<Vec<(f64, f64)>> {
        self.intervals.iter().map(|&(lo, hi)| Ok((spec.value_at(lo)?, spec.value_at(hi)?))).collect()
    }

    /// Consecutive cells `[0, l1), [l1, l2), ..., [lk, 1)` of a level sequence.
    pub fn cells(levels: &[f64]) -> Result<Vec<Self>> {
        let mut bounds = Vec::with_capacity(levels.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(levels);
        bounds.push(1.0);
        bounds.windows(2).map(|w| Self::interval(w[0], w[1])).collect()
    }
}

impl TryFrom<Vec<(f64, f64)>> for ProbabilitySubset {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilitySubset> for Vec<(f64, f64)> {
    fn from(s: ProbabilitySubset) -> Self {
        s.intervals
    }
}

impl fmt::Display for ProbabilitySubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{lo}:{hi}")?;
        }
        Ok(())
    }
}

/// Parses `lo:hi[,lo:hi...]` into raw pairs without range checks.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) =
                part.split_once(':').ok_or_else(|| Error::InvalidSubset(format!("expected lo:hi, got {part:?}")))?;
            let parse = |t: &str| {
                let t = t.trim();
                match t {
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "inf" | "+inf" => Ok(f64::INFINITY),
                    _ => t.parse::<f64>().map_err(|_| Error::InvalidSubset(format!("not a number: {t:?}"))),
                }
            };
            Ok((parse(lo)?, parse(hi)?))
        })
        .collect()
}

impl FromStr for ProbabilitySubset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_pairs(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let s: ProbabilitySubset = "0.5:0.7,0:0.2".parse().unwrap();
        assert_eq!(s.intervals(), &[(0.0, 0.2), (0.5, 0.7)]);
        assert!((s.measure() - 0.4).abs() < 1e-15);
        assert_eq!(s.to_string(), "0:0.2,0.5:0.7");
    }

    #[test]
    fn rejects_bad_subsets() {
        assert!(matches!(ProbabilitySubset::new(vec![]), Err(Error::EmptySubset)));
        assert!("0.3:0.3".parse::<ProbabilitySubset>().is_err());
        assert!("0:0.5,0.4:0.6".parse::<ProbabilitySubset>().is_err());
        assert!("-0.1:0.5".parse::<ProbabilitySubset>().is_err());
        assert!("0.1-0.5".parse::<ProbabilitySubset>().is_err());
    }

    #[test]
    fn touching_intervals_are_disjoint() {
        assert!("0:0.5,0.5:1".parse::<ProbabilitySubset>().is_ok());
    }

    #[test]
    fn reflection_is_an_involution() {
        let s: ProbabilitySubset = "0:0.1,0.3:0.45".parse().unwrap();
        let r = s.reflect();
        let (lo, hi) = r.intervals()[0];
        assert!((lo - 0.55).abs() < 1e-15 && (hi - 0.7).abs() < 1e-15);
        for (x, y) in r.reflect().intervals().iter().zip(s.intervals()) {
            assert!((x.0 - y.0).abs() < 1e-15 && (x.1 - y.1).abs() < 1e-15);
        }
    }

    #[test]
    fn cells_cover_unit_interval() {
        let cells = ProbabilitySubset::cells(&[0.2, 0.8]).unwrap();
        assert_eq!(cells.len(), 3);
        let total: f64 = cells.iter().map(ProbabilitySubset::measure).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_validates() {
        let s: ProbabilitySubset = serde_json::from_str("[[0.1,0.2]]").unwrap();
        assert_eq!(s.intervals(), &[(0.1, 0.2)]);
        assert!(serde_json::from_str::<ProbabilitySubset>("[[0.3,0.2]]").is_err());
    }
}
