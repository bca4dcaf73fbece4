//! Fixed-design sample size and power for a two-arm superiority trial with a
//! normally distributed endpoint and known common variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{cdf, quantile};
use crate::types::{InformationFraction, Probability};

/// Planning inputs.
///
/// `r` is the allocation ratio in the "1:r for control versus treatment"
/// sense: `r` treated patients per control patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// One-sided significance level.
    pub alpha: Probability,
    /// Planned type-II error.
    pub beta: Probability,
    /// Mean difference (treatment minus control) under the alternative.
    pub delta: f64,
    /// Common standard deviation.
    pub sigma: f64,
    pub r: f64,
}

impl DesignParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, sigma: f64, r: f64) -> Result<Self> {
        let params = DesignParams {
            alpha: Probability::new(alpha).map_err(|_| Error::domain("alpha", "not a probability"))?,
            beta: Probability::new(beta).map_err(|_| Error::domain("beta", "not a probability"))?,
            delta,
            sigma,
            r,
        };
        params.validate()?;
        Ok(params)
    }

    /// Standardized planning inputs: `delta = sigma = r = 1`.
    ///
    /// Every power formula in this crate that is expressed through the
    /// information fraction is invariant to these three, so this is the
    /// canonical choice when only `(alpha, power)` is known.
    pub fn standardized(alpha: f64, power_planned: f64) -> Result<Self> {
        Self::new(alpha, 1.0 - power_planned, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha.value();
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain("alpha", format!("{alpha} is outside (0, 0.5)")));
        }
        let beta = self.beta.value();
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::domain("beta", format!("{beta} is outside (0, 0.5)")));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain("sigma", "must be positive and finite"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::domain("r", "must be positive and finite"));
        }
        if !self.delta.is_finite() {
            return Err(Error::domain("delta", "must be finite"));
        }
        Ok(())
    }

    pub fn power_planned(&self) -> f64 {
        1.0 - self.beta.value()
    }

    pub fn z_alpha(&self) -> f64 {
        quantile(1.0 - self.alpha.value())
    }

    pub fn z_beta(&self) -> f64 {
        quantile(1.0 - self.beta.value())
    }

    /// `(δ/σ)·√(r/(r+1)²)`: drift per square-root patient.
    pub(crate) fn drift_per_root_patient(&self) -> f64 {
        self.delta / self.sigma * (self.r / (self.r + 1.0).powi(2)).sqrt()
    }
}

/// Result of sizing a fixed design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    /// Continuous total from the closed form.
    pub continuous: f64,
    pub continuous_control: f64,
    pub continuous_treatment: f64,
    /// Integer total, the sum of the per-arm ceilings.
    pub total: u64,
    pub per_arm_control: u64,
    pub per_arm_treatment: u64,
}

/// `N = (z_{1−α} + z_{1−β})² σ²/δ² · (r+1)²/r`, with per-arm ceilings.
pub fn required_sample_size(params: &DesignParams) -> Result<SampleSize> {
    params.validate()?;
    if !(params.delta > 0.0) {
        return Err(Error::domain(
            "delta",
            "a positive effect is required to size the trial",
        ));
    }
    let k = params.z_alpha() + params.z_beta();
    let r = params.r;
    let continuous = k * k * (params.sigma / params.delta).powi(2) * (r + 1.0).powi(2) / r;
    let continuous_control = continuous / (r + 1.0);
    let continuous_treatment = r * continuous / (r + 1.0);
    let per_arm_control = ceil_count(continuous_control);
    let per_arm_treatment = ceil_count(continuous_treatment);
    Ok(SampleSize {
        continuous,
        continuous_control,
        continuous_treatment,
        total: per_arm_control + per_arm_treatment,
        per_arm_control,
        per_arm_treatment,
    })
}

// Ceiling that ignores float noise a few ulps above an integer.
fn ceil_count(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// Power of the final z-test when analysed with `n` patients in total.
pub fn power_given_n(n: f64, params: &DesignParams) -> Result<Probability> {
    params.validate()?;
    if !(n >= 2.0) || !n.is_finite() {
        return Err(Error::domain("n", "at least two patients are required"));
    }
    let drift = params.drift_per_root_patient() * n.sqrt();
    Ok(Probability::saturating(cdf(drift - params.z_alpha())))
}

/// Power of an early analysis at information fraction `tau` of a design
/// planned for `power_planned` at level `alpha`.
///
/// Depends on neither the effect, the variance nor the allocation ratio:
/// `Φ(z_{1−β}·√τ − z_{1−α}·(1 − √τ))`.
pub fn power_at_fraction(
    alpha: Probability,
    power_planned: Probability,
    tau: InformationFraction,
) -> Result<Probability> {
    check_levels(alpha, power_planned)?;
    let za = quantile(1.0 - alpha.value());
    let zb = quantile(power_planned.value());
    let root_tau = tau.value().sqrt();
    Ok(Probability::saturating(cdf(zb * root_tau - za * (1.0 - root_tau))))
}

pub(crate) fn check_levels(alpha: Probability, power_planned: Probability) -> Result<()> {
    let a = alpha.value();
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::domain("alpha", format!("{a} is outside (0, 0.5)")));
    }
    let p = power_planned.value();
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::domain("power", format!("{p} is outside (0.5, 1)")));
    }
    Ok(())
}

/// `z_{1−α} + z_{1−β}`: the full-information drift of a design planned by the
/// closed-form sample size.
pub fn planned_noncentrality(alpha: Probability, power_planned: Probability) -> Result<f64> {
    check_levels(alpha, power_planned)?;
    Ok(quantile(1.0 - alpha.value()) + quantile(power_planned.value()))
}
