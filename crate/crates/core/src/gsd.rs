//! Two-look group-sequential designs (efficacy boundaries only) and the
//! adaptive-design statistics built on them.

use serde::{Deserialize, Serialize};

use crate::design::{check_levels, planned_noncentrality};
use crate::dilution::{DilutionSpec, JointLaw};
use crate::error::{Error, Result};
use crate::kernel::{bisect, bvn_cdf, quantile, sf};
use crate::types::{InformationFraction, Probability};

/// Bracket for the boundary search.
pub const BOUNDARY_BRACKET: (f64, f64) = (0.0, 10.0);
/// Bisection stops once the bracket on `c` is this narrow.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Scheme {
    /// Same critical value at both looks.
    Pocock,
    /// Critical values proportional to `1/√information`.
    ObrienFleming,
    /// Power-family spending `α·t^rho`.
    KimDemets { rho: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Pocock => "pocock",
            Scheme::ObrienFleming => "obrien_fleming",
            Scheme::KimDemets { .. } => "kim_demets",
        }
    }
}

/// Interim at information fraction `tau`, final at full information.
/// Reject at the interim if `z1 >= c1`, at the final look if `z >= c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsdDesign {
    pub scheme: Scheme,
    pub tau: InformationFraction,
    pub alpha: Probability,
    pub c1: f64,
    pub c2: f64,
}

impl GsdDesign {
    /// Correlation of the interim and final statistics.
    pub fn look_correlation(&self) -> f64 {
        self.tau.value().sqrt()
    }

    /// `1 − Φ₂((c1, c2); √τ)` recomputed from the stored boundaries.
    pub fn type_one_error(&self) -> f64 {
        1.0 - bvn_cdf(self.c1, self.c2, self.look_correlation())
    }
}

/// Builds the design for any scheme.
pub fn boundary(scheme: Scheme, alpha: Probability, tau: InformationFraction) -> Result<GsdDesign> {
    match scheme {
        Scheme::Pocock => pocock_boundary(alpha, tau),
        Scheme::ObrienFleming => obf_boundary(alpha, tau),
        Scheme::KimDemets { rho } => spending_boundary(alpha, tau, rho),
    }
}

fn check_design_inputs(alpha: Probability, tau: InformationFraction) -> Result<f64> {
    let a = alpha.value();
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::domain("alpha", format!("{a} is outside (0, 0.5)")));
    }
    Ok(tau.interim()?.value())
}

fn solve(f: impl Fn(f64) -> f64) -> Result<f64> {
    let (lo, hi) = BOUNDARY_BRACKET;
    bisect(f, lo, hi, BOUNDARY_TOLERANCE)
}

pub fn pocock_boundary(alpha: Probability, tau: InformationFraction) -> Result<GsdDesign> {
    let t = check_design_inputs(alpha, tau)?;
    let rho = t.sqrt();
    let a = alpha.value();
    let c = solve(|c| 1.0 - bvn_cdf(c, c, rho) - a)?;
    Ok(GsdDesign {
        scheme: Scheme::Pocock,
        tau,
        alpha,
        c1: c,
        c2: c,
    })
}

pub fn obf_boundary(alpha: Probability, tau: InformationFraction) -> Result<GsdDesign> {
    let t = check_design_inputs(alpha, tau)?;
    let rho = t.sqrt();
    let a = alpha.value();
    let c = solve(|c| 1.0 - bvn_cdf(c / rho, c, rho) - a)?;
    Ok(GsdDesign {
        scheme: Scheme::ObrienFleming,
        tau,
        alpha,
        c1: c / rho,
        c2: c,
    })
}

/// Cumulative type-I error spent by information time `t` under `α·t^rho`.
pub fn power_family_spend(alpha: f64, t: f64, rho: f64) -> f64 {
    alpha * t.clamp(0.0, 1.0).powf(rho)
}

pub fn spending_boundary(alpha: Probability, tau: InformationFraction, rho: f64) -> Result<GsdDesign> {
    let t = check_design_inputs(alpha, tau)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain("rho_spend", "spending exponent must be positive"));
    }
    let a = alpha.value();
    let c1 = quantile(1.0 - power_family_spend(a, t, rho));
    let corr = t.sqrt();
    let c2 = solve(|c| 1.0 - bvn_cdf(c1, c, corr) - a)?;
    Ok(GsdDesign {
        scheme: Scheme::KimDemets { rho },
        tau,
        alpha,
        c1,
        c2,
    })
}

/// Probability of rejecting at the interim, and by the end of the trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub stage1: Probability,
    pub overall: Probability,
}

impl PowerBreakdown {
    /// Rejection probabilities of boundaries `(c1, c2)` applied to `(t0, t)`.
    pub fn from_law(c1: f64, c2: f64, law: &JointLaw) -> Self {
        let stage1 = sf(c1 - law.mean[0]);
        let overall = 1.0 - bvn_cdf(c1 - law.mean[0], c2 - law.mean[2], law.corr[0][2]);
        PowerBreakdown {
            stage1: Probability::saturating(stage1),
            overall: Probability::saturating(overall.max(stage1)),
        }
    }
}

/// Power of a fixed design converted to a two-look design at the
/// disruption, for a trial planned by the closed-form sample size.
pub fn gsd_power(
    design: &GsdDesign,
    alpha: Probability,
    power_planned: Probability,
    tau: InformationFraction,
    dilution: DilutionSpec,
) -> Result<PowerBreakdown> {
    check_levels(alpha, power_planned)?;
    if (design.tau.value() - tau.value()).abs() > 1e-12 {
        return Err(Error::domain(
            "tau",
            format!(
                "design was built for tau = {}, not {}",
                design.tau.value(),
                tau.value()
            ),
        ));
    }
    let k = planned_noncentrality(alpha, power_planned)?;
    let law = JointLaw::from_drift(k, tau, dilution)?;
    Ok(PowerBreakdown::from_law(design.c1, design.c2, &law))
}

/// Conditional probability of an eventual type-I error given the interim
/// statistic `z1`.
pub fn conditional_error(z1: f64, design: &GsdDesign) -> Result<Probability> {
    conditional_power(z1, design, 0.0)
}

/// Conditional probability of final rejection given `z1`, when the final
/// statistic has expectation `drift` at full information.
///
/// Returns 1 for `z1 >= c1` (the trial has already rejected).
pub fn conditional_power(z1: f64, design: &GsdDesign, drift: f64) -> Result<Probability> {
    if z1.is_nan() {
        return Err(Error::domain("z1", "NaN statistic"));
    }
    if !drift.is_finite() {
        return Err(Error::domain("drift", "must be finite"));
    }
    let t = design.tau.interim()?.value();
    if z1 >= design.c1 {
        return Ok(Probability::saturating(1.0));
    }
    let arg = (design.c2 - t.sqrt() * z1 - (1.0 - t) * drift) / (1.0 - t).sqrt();
    Ok(Probability::saturating(sf(arg)))
}

/// Pre-specified weight of the first stage in the inverse-normal
/// combination test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationSpec {
    w: f64,
}

impl CombinationSpec {
    pub fn new(w: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&w) {
            Ok(CombinationSpec { w })
        } else {
            Err(Error::domain("w", format!("{w} is outside [0, 1]")))
        }
    }

    pub fn weight(&self) -> f64 {
        self.w
    }
}

/// `√w·z1 + √(1−w)·z2`
pub fn combination_statistic(z1: f64, z2: f64, spec: CombinationSpec) -> f64 {
    spec.w.sqrt() * z1 + (1.0 - spec.w).sqrt() * z2
}

/// Increment statistic independent of the interim statistic `z_tau`:
/// `(z − √τ·z_tau)/√(1−τ)`.
pub fn second_stage_statistic(z: f64, z_tau: f64, tau: InformationFraction) -> Result<f64> {
    let t = tau.interim()?.value();
    Ok((z - t.sqrt() * z_tau) / (1.0 - t).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{cdf, integrate, pdf};

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    fn tau(t: f64) -> InformationFraction {
        InformationFraction::new(t).unwrap()
    }

    #[test]
    fn pocock_half() {
        let d = pocock_boundary(p(0.025), tau(0.5)).unwrap();
        assert!((d.c1 - 2.178).abs() < 5e-4);
        assert_eq!(d.c1, d.c2);
        assert!((d.type_one_error() - 0.025).abs() < 1e-8);
        let m0 = 0.5f64.sqrt() * (quantile(0.975) + quantile(0.8));
        assert!((sf(d.c1 - m0) - 0.422).abs() < 5e-4);
    }

    #[test]
    fn pocock_limits() {
        let late = pocock_boundary(p(0.025), tau(1.0 - 1e-9)).unwrap();
        assert!((late.c1 - quantile(0.975)).abs() < 1e-3);
        // independent looks: 1 − Φ(c)² = α
        let early = pocock_boundary(p(0.025), tau(1e-10)).unwrap();
        assert!((early.c1 - quantile(0.975f64.sqrt())).abs() < 1e-4);
        assert!((early.c1 - quantile(1.0 - 0.0125)).abs() < 5e-3);
    }

    #[test]
    fn obf_half() {
        let d = obf_boundary(p(0.025), tau(0.5)).unwrap();
        assert!((d.c2 - 1.977).abs() < 5e-4);
        assert!((d.c1 - 2.0f64.sqrt() * d.c2).abs() < 1e-12);
        assert!((d.c1 - 2.7965).abs() < 1e-4);
        assert!((d.type_one_error() - 0.025).abs() < 1e-8);
        let m0 = 0.5f64.sqrt() * (quantile(0.975) + quantile(0.8));
        assert!((sf(d.c1 - m0) - 0.207).abs() < 5e-4);
    }

    #[test]
    fn obf_first_boundary_dominates() {
        for i in 1..10 {
            let d = obf_boundary(p(0.025), tau(i as f64 / 10.0)).unwrap();
            assert!(d.c1 > d.c2);
        }
        let late = obf_boundary(p(0.025), tau(1.0 - 1e-9)).unwrap();
        assert!((late.c1 - quantile(0.975)).abs() < 1e-3);
        assert!((late.c2 - quantile(0.975)).abs() < 1e-3);
    }

    #[test]
    fn linear_spending_half() {
        let d = spending_boundary(p(0.025), tau(0.5), 1.0).unwrap();
        assert!((d.c1 - quantile(0.9875)).abs() < 1e-14);
        assert!((d.c1 - 2.2414).abs() < 1e-4);
        assert!((d.type_one_error() - 0.025).abs() < 1e-8);
        for &rho in &[0.5, 1.0, 3.0] {
            assert_eq!(power_family_spend(0.025, 1.0, rho), 0.025);
        }
        assert!(spending_boundary(p(0.025), tau(0.5), 0.0).is_err());
    }

    #[test]
    fn boundaries_need_an_interim() {
        assert!(pocock_boundary(p(0.025), tau(1.0)).is_err());
        assert!(obf_boundary(p(0.6), tau(0.5)).is_err());
    }

    #[test]
    fn table_cells_at_tau_point_eight() {
        let t = tau(0.8);
        let pk = pocock_boundary(p(0.025), t).unwrap();
        let of = obf_boundary(p(0.025), t).unwrap();
        let a = gsd_power(&pk, p(0.025), p(0.8), t, DilutionSpec::NONE).unwrap();
        let b = gsd_power(&of, p(0.025), p(0.8), t, DilutionSpec::NONE).unwrap();
        assert!((a.stage1.value() - 0.653).abs() < 5e-4);
        assert!((a.overall.value() - 0.780).abs() < 5e-4);
        assert!((b.stage1.value() - 0.597).abs() < 5e-4);
        assert!((b.overall.value() - 0.792).abs() < 5e-4);
    }

    #[test]
    fn diluted_pocock_half() {
        let t = tau(0.5);
        let pk = pocock_boundary(p(0.025), t).unwrap();
        let d = DilutionSpec::new(0.1, 1.0).unwrap();
        let a = gsd_power(&pk, p(0.025), p(0.8), t, d).unwrap();
        assert!((a.overall.value() - 0.718).abs() < 5e-4);
    }

    #[test]
    fn gsd_power_checks_tau() {
        let pk = pocock_boundary(p(0.025), tau(0.5)).unwrap();
        assert!(gsd_power(&pk, p(0.025), p(0.8), tau(0.6), DilutionSpec::NONE).is_err());
    }

    #[test]
    fn conditional_error_limits_and_integral() {
        let d = pocock_boundary(p(0.025), tau(0.5)).unwrap();
        assert_eq!(conditional_error(d.c1, &d).unwrap().value(), 1.0);
        assert_eq!(conditional_error(f64::NEG_INFINITY, &d).unwrap().value(), 0.0);
        let left = integrate(|z| conditional_error(z, &d).unwrap().value() * pdf(z), -8.0, d.c1, 1e-13)
            .unwrap()
            .value;
        let right = integrate(pdf, d.c1, 8.0, 1e-13).unwrap().value;
        assert!((left + right - 0.025).abs() < 1e-6);
    }

    #[test]
    fn conditional_error_monotone() {
        let d = obf_boundary(p(0.025), tau(0.4)).unwrap();
        let mut last = 0.0;
        for i in -60..60 {
            let v = conditional_error(i as f64 * 0.1, &d).unwrap().value();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn conditional_power_null_drift() {
        let d = pocock_boundary(p(0.025), tau(0.5)).unwrap();
        for &z in &[-1.0, 0.3, 1.7] {
            assert_eq!(
                conditional_power(z, &d, 0.0).unwrap(),
                conditional_error(z, &d).unwrap()
            );
        }
        assert_eq!(conditional_power(3.0, &d, -2.0).unwrap().value(), 1.0);
        let drift = quantile(0.975) + quantile(0.8);
        let cp = conditional_power(1.0, &d, drift).unwrap().value();
        let direct = 1.0 - cdf((d.c2 - 0.5f64.sqrt() - 0.5 * drift) / 0.5f64.sqrt());
        assert!((cp - direct).abs() < 1e-15);
    }

    #[test]
    fn combination_and_increment() {
        let full = CombinationSpec::new(1.0).unwrap();
        assert_eq!(combination_statistic(1.3, -0.4, full), 1.3);
        let half = CombinationSpec::new(0.5).unwrap();
        assert!((combination_statistic(1.0, 1.0, half) - 2f64.sqrt()).abs() < 1e-15);
        assert!(CombinationSpec::new(1.2).is_err());

        let t = tau(0.36);
        assert_eq!(second_stage_statistic(0.6 * 1.5, 1.5, t).unwrap(), 0.0);
        let tiny = second_stage_statistic(1.7, 0.4, tau(1e-12)).unwrap();
        assert!((tiny - 1.7).abs() < 1e-5);
        assert!(second_stage_statistic(1.0, 1.0, tau(1.0)).is_err());
    }
}
