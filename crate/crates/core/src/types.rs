//! Validated scalar newtypes shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(
                "probability",
                format!("{value} is outside [0, 1]"),
            ))
        }
    }

    /// Clamps round-off excursions (e.g. `1 + 1e-17`) back into `[0, 1]`.
    pub(crate) fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// A correlation coefficient in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(value: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&value) {
            Ok(Correlation(value))
        } else {
            Err(Error::domain("rho", format!("|{value}| exceeds 1")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Share of the planned information observed at the interim, `0 < tau <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct InformationFraction(f64);

impl InformationFraction {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau <= 1.0 {
            Ok(InformationFraction(tau))
        } else {
            Err(Error::domain("tau", format!("{tau} is outside (0, 1]")))
        }
    }

    /// `n` observed out of `total` planned.
    pub fn from_counts(n: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::domain("n_planned", "planned size must be positive"));
        }
        if n > total {
            return Err(Error::domain(
                "n",
                format!("{n} observed exceeds {total} planned"),
            ));
        }
        Self::new(n as f64 / total as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rejects `tau = 1` for operations that need a second stage.
    pub fn interim(self) -> Result<Self> {
        if self.0 < 1.0 {
            Ok(self)
        } else {
            Err(Error::domain("tau", "an interim look needs tau < 1"))
        }
    }
}

impl TryFrom<f64> for InformationFraction {
    type Error = Error;

    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<InformationFraction> for f64 {
    fn from(t: InformationFraction) -> f64 {
        t.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_bounds() {
        assert!(Probability::new(0.0).is_ok());
        assert!(Probability::new(1.0).is_ok());
        assert!(Probability::new(-1e-9).is_err());
        assert!(Probability::new(f64::NAN).is_err());
    }

    #[test]
    fn correlation_bounds() {
        assert!(Correlation::new(-1.0).is_ok());
        assert!(Correlation::new(1.000_001).is_err());
    }

    #[test]
    fn fraction_from_counts() {
        let tau = InformationFraction::from_counts(80, 100).unwrap();
        assert_eq!(tau.value(), 0.8);
        assert!(InformationFraction::from_counts(0, 100).is_err());
        assert!(InformationFraction::from_counts(101, 100).is_err());
        assert!(InformationFraction::new(1.0).unwrap().interim().is_err());
    }
}
