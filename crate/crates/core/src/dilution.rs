//! Joint law of the pre-disruption, post-disruption and pooled test
//! statistics `(t0, t1, t)` when the treatment effect is diluted and the
//! outcome variance changes for patients enrolled after the disruption.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::{planned_noncentrality, DesignParams};
use crate::error::{Error, Result};
use crate::kernel::cdf;
use crate::types::{InformationFraction, Probability};

/// Post-disruption change shared by both arms: the effect shrinks to
/// `(1 − eta)·delta` and the variance is multiplied by `psi`.
///
/// Negative `eta` (a larger effect after the disruption) is accepted as is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilutionSpec {
    pub eta: f64,
    pub psi: f64,
}

impl DilutionSpec {
    pub const NONE: DilutionSpec = DilutionSpec { eta: 0.0, psi: 1.0 };

    pub fn new(eta: f64, psi: f64) -> Result<Self> {
        let spec = DilutionSpec { eta, psi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(Error::domain("eta", "must be finite"));
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(Error::domain("psi", "variance factor must be positive"));
        }
        Ok(())
    }

    /// `eta > 1` reverses the sign of the post-disruption effect.
    pub fn is_reversal(&self) -> bool {
        self.eta > 1.0
    }

    /// The equivalent per-arm description with control mean 0 and arm SDs
    /// `sigma`.
    pub fn to_general(&self, params: &DesignParams) -> GeneralDilutionSpec {
        GeneralDilutionSpec {
            mu_c0: 0.0,
            mu_t0: params.delta,
            sigma_c0: params.sigma,
            sigma_t0: params.sigma,
            change_c: MeanChange::Absolute(0.0),
            change_t: MeanChange::Absolute(self.eta * params.delta),
            psi_c: self.psi,
            psi_t: self.psi,
        }
    }
}

/// How an arm mean moves after the disruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum MeanChange {
    /// `mu1 = (1 − eta)·mu0`
    Relative(f64),
    /// `mu1 = mu0 − epsilon`
    Absolute(f64),
}

impl MeanChange {
    pub fn post_mean(self, mu0: f64) -> f64 {
        match self {
            MeanChange::Relative(eta) => (1.0 - eta) * mu0,
            MeanChange::Absolute(eps) => mu0 - eps,
        }
    }
}

/// Converts a mean change to both parameterizations: `(eta, epsilon)` with
/// `epsilon = eta·mu0`.
pub fn convert_mean_change(change: MeanChange, mu0: f64) -> Result<(f64, f64)> {
    match change {
        MeanChange::Relative(eta) => Ok((eta, eta * mu0)),
        MeanChange::Absolute(eps) => {
            if mu0 == 0.0 {
                Err(Error::domain(
                    "mu0",
                    "a relative change is undefined for a zero pre-disruption mean",
                ))
            } else {
                Ok((eps / mu0, eps))
            }
        }
    }
}

/// Per-arm pre-disruption means and SDs plus per-arm changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralDilutionSpec {
    pub mu_c0: f64,
    pub mu_t0: f64,
    pub sigma_c0: f64,
    pub sigma_t0: f64,
    pub change_c: MeanChange,
    pub change_t: MeanChange,
    pub psi_c: f64,
    pub psi_t: f64,
}

impl GeneralDilutionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_c0 > 0.0) {
            return Err(Error::domain("sigma_c0", "pre-disruption SD must be positive"));
        }
        if !(self.sigma_t0 > 0.0) {
            return Err(Error::domain("sigma_t0", "pre-disruption SD must be positive"));
        }
        if !(self.psi_c > 0.0) {
            return Err(Error::domain("psi_c", "variance factor must be positive"));
        }
        if !(self.psi_t > 0.0) {
            return Err(Error::domain("psi_t", "variance factor must be positive"));
        }
        Ok(())
    }

    pub fn mu_c1(&self) -> f64 {
        self.change_c.post_mean(self.mu_c0)
    }

    pub fn mu_t1(&self) -> f64 {
        self.change_t.post_mean(self.mu_t0)
    }
}

/// Patients per arm and cohort when `n_total` are split 1:r and the first
/// `tau` share is enrolled before the disruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortSizes {
    pub control_pre: f64,
    pub treatment_pre: f64,
    pub control_post: f64,
    pub treatment_post: f64,
}

impl CohortSizes {
    pub fn split(n_total: f64, tau: f64, r: f64) -> Self {
        CohortSizes {
            control_pre: n_total * tau / (r + 1.0),
            treatment_pre: r * n_total * tau / (r + 1.0),
            control_post: n_total * (1.0 - tau) / (r + 1.0),
            treatment_post: r * n_total * (1.0 - tau) / (r + 1.0),
        }
    }
}

/// Mean vector and correlation matrix of `(t0, t1, t)`; unit variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLaw {
    pub mean: [f64; 3],
    pub corr: [[f64; 3]; 3],
}

impl JointLaw {
    /// Law for a design whose full-information drift is `drift`.
    pub fn from_drift(drift: f64, tau: InformationFraction, dilution: DilutionSpec) -> Result<Self> {
        dilution.validate()?;
        let tau = tau.interim()?.value();
        let DilutionSpec { eta, psi } = dilution;
        let pooled_var = tau + (1.0 - tau) * psi;
        let mean = [
            drift * tau.sqrt(),
            drift * (1.0 - tau).sqrt() * (1.0 - eta) / psi.sqrt(),
            drift * (tau + (1.0 - tau) * (1.0 - eta)) / pooled_var.sqrt(),
        ];
        let r02 = (tau / pooled_var).sqrt();
        let r12 = ((1.0 - tau) * psi / pooled_var).sqrt();
        Ok(JointLaw {
            mean,
            corr: [[1.0, 0.0, r02], [0.0, 1.0, r12], [r02, r12, 1.0]],
        })
    }

    pub fn corr_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.corr[i][j])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.corr_matrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.min_eigenvalue() >= -1e-10
    }
}

/// Joint law for `n_total` patients with common arm variances.
pub fn joint_law(
    n_total: f64,
    tau: InformationFraction,
    params: &DesignParams,
    dilution: DilutionSpec,
) -> Result<JointLaw> {
    params.validate()?;
    if !(n_total > 0.0 && n_total.is_finite()) {
        return Err(Error::domain("n", "total sample size must be positive"));
    }
    let drift = params.drift_per_root_patient() * n_total.sqrt();
    JointLaw::from_drift(drift, tau, dilution)
}

/// Joint law with arm-specific means, SDs and variance factors, computed
/// from the cohort-level sufficient statistics.
pub fn joint_law_general(
    n_total: f64,
    tau: InformationFraction,
    r: f64,
    spec: &GeneralDilutionSpec,
) -> Result<JointLaw> {
    spec.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", "must be positive and finite"));
    }
    if !(n_total > 0.0 && n_total.is_finite()) {
        return Err(Error::domain("n", "total sample size must be positive"));
    }
    let tau = tau.interim()?.value();
    let n = CohortSizes::split(n_total, tau, r);

    let var_c0 = spec.sigma_c0.powi(2);
    let var_t0 = spec.sigma_t0.powi(2);
    let var_c1 = spec.psi_c * var_c0;
    let var_t1 = spec.psi_t * var_t0;
    let (mu_c0, mu_t0, mu_c1, mu_t1) = (spec.mu_c0, spec.mu_t0, spec.mu_c1(), spec.mu_t1());

    let n_t = n.treatment_pre + n.treatment_post;
    let n_c = n.control_pre + n.control_post;

    let var_d0 = var_t0 / n.treatment_pre + var_c0 / n.control_pre;
    let var_d1 = var_t1 / n.treatment_post + var_c1 / n.control_post;
    let var_d = (n.treatment_pre * var_t0 + n.treatment_post * var_t1) / (n_t * n_t)
        + (n.control_pre * var_c0 + n.control_post * var_c1) / (n_c * n_c);

    let pooled_diff = (n.treatment_pre * mu_t0 + n.treatment_post * mu_t1) / n_t
        - (n.control_pre * mu_c0 + n.control_post * mu_c1) / n_c;

    let mean = [
        (mu_t0 - mu_c0) / var_d0.sqrt(),
        (mu_t1 - mu_c1) / var_d1.sqrt(),
        pooled_diff / var_d.sqrt(),
    ];
    let r02 = (var_t0 / n_t + var_c0 / n_c) / (var_d0 * var_d).sqrt();
    let r12 = (var_t1 / n_t + var_c1 / n_c) / (var_d1 * var_d).sqrt();
    Ok(JointLaw {
        mean,
        corr: [[1.0, 0.0, r02], [0.0, 1.0, r12], [r02, r12, 1.0]],
    })
}

/// Power of the single final analysis with all planned patients when the
/// post-disruption cohort is diluted.
pub fn fixed_power_diluted(
    alpha: Probability,
    power_planned: Probability,
    tau: InformationFraction,
    dilution: DilutionSpec,
) -> Result<Probability> {
    dilution.validate()?;
    let k = planned_noncentrality(alpha, power_planned)?;
    let za = k - crate::kernel::quantile(power_planned.value());
    let tau = tau.value();
    let DilutionSpec { eta, psi } = dilution;
    let m = k * (tau + (1.0 - tau) * (1.0 - eta)) / (tau + (1.0 - tau) * psi).sqrt();
    Ok(Probability::saturating(cdf(m - za)))
}
