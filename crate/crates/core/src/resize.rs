//! Number of post-disruption patients needed to restore the planned power.
//!
//! With `n0 = N·τ` patients enrolled before the disruption and `ñ1` after,
//! write `ξ = n0/(n0 + ñ1)`. For the fixed design the power condition
//! reduces to the quadratic
//!
//! ```text
//! ξ²(τη² − 1 + ψ) + ξ(2τη(1−η) − ψ) + τ(1−η)² = 0
//! ```
//!
//! and `ñ1 = N·τ·(1−ξ)/ξ`. The two-look design has no closed form and is
//! solved by search.

use serde::{Deserialize, Serialize};

use crate::design::planned_noncentrality;
use crate::dilution::{DilutionSpec, JointLaw};
use crate::error::{Error, Result};
use crate::gsd::{GsdDesign, PowerBreakdown};
use crate::kernel::{cdf, quantile, sf};
use crate::types::{InformationFraction, Probability};

/// `|τη² − 1 + ψ|` below this switches to the linear solution.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
/// Search stops once the bracket on `ñ1` is this narrow (patients).
pub const SEARCH_TOLERANCE: f64 = 1e-4;
/// Default cap on `ñ1` for the two-look search, as a multiple of `N`.
pub const SEARCH_CAP_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    QuadraticRoot,
    DegenerateLinear,
    BoundarySearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResizeResult {
    /// Share of the resized trial enrolled before the disruption.
    pub xi: f64,
    /// Continuous number of post-disruption patients.
    pub n1_tilde: f64,
    /// `ceil(n1_tilde)`, for reporting.
    pub n1_ceiling: u64,
    /// `N·τ + ñ1`
    pub total: f64,
    pub branch: Branch,
    pub achieved_power: Probability,
    /// Both quadratic roots fell in `(0, 1]`; the smaller `ñ1` was chosen.
    pub ambiguous_root: bool,
}

/// Roots of the quadratic in `ξ`, or the single root of its linear
/// degeneration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum XiRoots {
    Quadratic {
        /// Root taken with `−√discriminant`.
        root_minus: f64,
        /// Root taken with `+√discriminant`.
        root_plus: f64,
        discriminant: f64,
    },
    Linear {
        root: f64,
    },
}

/// Coefficients `(a, b, c)` of `a·ξ² + b·ξ + c`.
pub fn xi_coefficients(tau: f64, dilution: DilutionSpec) -> (f64, f64, f64) {
    let DilutionSpec { eta, psi } = dilution;
    (
        tau * eta * eta - 1.0 + psi,
        2.0 * tau * eta * (1.0 - eta) - psi,
        tau * (1.0 - eta).powi(2),
    )
}

/// Both roots, unfiltered.
pub fn xi_roots(tau: InformationFraction, dilution: DilutionSpec) -> Result<XiRoots> {
    dilution.validate()?;
    let t = tau.interim()?.value();
    let (a, b, c) = xi_coefficients(t, dilution);
    if a.abs() < DEGENERACY_THRESHOLD {
        if b == 0.0 {
            return Err(Error::infeasible("both quadratic coefficients vanish"));
        }
        return Ok(XiRoots::Linear { root: -c / b });
    }
    let DilutionSpec { eta, psi } = dilution;
    let discriminant = psi * psi - 4.0 * t * (1.0 - eta) * (eta + psi - 1.0);
    if discriminant < 0.0 {
        return Err(Error::infeasible(format!(
            "negative discriminant {discriminant:e}: no real share of pre-disruption patients restores the power"
        )));
    }
    let s = discriminant.sqrt();
    // Cancellation-free pair: q/a and c/q.
    let q = -0.5 * (b + b.signum() * s);
    let (from_q, from_c) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let (root_minus, root_plus) = if b < 0.0 {
        // q = (−b + s)/2 ⇒ q/a is the +√D root
        (from_c, from_q)
    } else {
        (from_q, from_c)
    };
    Ok(XiRoots::Quadratic {
        root_minus,
        root_plus,
        discriminant,
    })
}

fn in_unit(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

fn fixed_power_at_xi(xi: f64, tau: f64, dilution: DilutionSpec, k: f64, z_alpha: f64) -> f64 {
    let DilutionSpec { eta, psi } = dilution;
    let m = (tau / xi).sqrt() * (xi + (1.0 - xi) * (1.0 - eta)) / (xi + (1.0 - xi) * psi).sqrt() * k;
    cdf(m - z_alpha)
}

fn check_total(n_total: f64) -> Result<()> {
    if n_total > 0.0 && n_total.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("n", "planned sample size must be positive"))
    }
}

fn check_residual_effect(dilution: DilutionSpec) -> Result<()> {
    if dilution.eta >= 1.0 {
        Err(Error::infeasible(
            "no residual effect after the disruption (eta >= 1)",
        ))
    } else {
        Ok(())
    }
}

/// Post-disruption sample size for the single final analysis.
///
/// `n_total` is the originally planned (continuous) total.
pub fn adjusted_stage2_n(
    n_total: f64,
    tau: InformationFraction,
    dilution: DilutionSpec,
    alpha: Probability,
    power_planned: Probability,
) -> Result<ResizeResult> {
    check_total(n_total)?;
    dilution.validate()?;
    check_residual_effect(dilution)?;
    let k = planned_noncentrality(alpha, power_planned)?;
    let z_alpha = quantile(1.0 - alpha.value());
    let t = tau.interim()?.value();

    let (xi, branch, ambiguous_root) = match xi_roots(tau, dilution)? {
        XiRoots::Linear { root } if in_unit(root) => (root, Branch::DegenerateLinear, false),
        XiRoots::Linear { root } => {
            return Err(Error::infeasible(format!(
                "linear solution xi = {root} is outside (0, 1]"
            )))
        }
        XiRoots::Quadratic {
            root_minus,
            root_plus,
            ..
        } => match (in_unit(root_minus), in_unit(root_plus)) {
            (true, true) => (root_minus.max(root_plus), Branch::QuadraticRoot, true),
            (true, false) => (root_minus, Branch::QuadraticRoot, false),
            (false, true) => (root_plus, Branch::QuadraticRoot, false),
            (false, false) => {
                return Err(Error::infeasible(format!(
                    "no root in (0, 1]: {root_minus}, {root_plus}"
                )))
            }
        },
    };

    let n0 = n_total * t;
    let n1_tilde = n0 * (1.0 - xi) / xi;
    Ok(ResizeResult {
        xi,
        n1_tilde,
        n1_ceiling: ceil_patients(n1_tilde),
        total: n0 + n1_tilde,
        branch,
        achieved_power: Probability::saturating(fixed_power_at_xi(xi, t, dilution, k, z_alpha)),
        ambiguous_root,
    })
}

fn ceil_patients(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// Overall power of the two-look design after enrolling `n1` post-disruption
/// patients, keeping the original boundaries.
///
/// `n1` is expressed relative to a planned total of 1 (i.e. `ñ1/N`).
fn gsd_power_after(design: &GsdDesign, tau: f64, n1: f64, k: f64, dilution: DilutionSpec) -> Result<f64> {
    let m0 = tau.sqrt() * k;
    if n1 <= 0.0 {
        // no second cohort: the final statistic is the interim one
        return Ok(sf(design.c1.min(design.c2) - m0));
    }
    let total = tau + n1;
    let tau_new = InformationFraction::new(tau / total)?;
    let law = JointLaw::from_drift(k * total.sqrt(), tau_new, dilution)?;
    Ok(PowerBreakdown::from_law(design.c1, design.c2, &law).overall.value())
}

/// Post-disruption sample size for the two-look design: the smallest `ñ1`
/// whose overall power reaches `power_planned`.
///
/// A coarse scan locates the first grid step at which the target is met
/// (power need not be monotone in `ñ1` when `psi` is large), then bisection
/// narrows it to [`SEARCH_TOLERANCE`] patients. `cap` defaults to
/// `100·N`.
pub fn adjusted_stage2_n_gsd(
    design: &GsdDesign,
    n_total: f64,
    tau: InformationFraction,
    dilution: DilutionSpec,
    alpha: Probability,
    power_planned: Probability,
    cap: Option<f64>,
) -> Result<ResizeResult> {
    check_total(n_total)?;
    dilution.validate()?;
    let t = tau.interim()?.value();
    if (design.tau.value() - t).abs() > 1e-12 {
        return Err(Error::domain(
            "tau",
            format!("design was built for tau = {}", design.tau.value()),
        ));
    }
    let k = planned_noncentrality(alpha, power_planned)?;
    let target = power_planned.value();
    let cap = cap.unwrap_or(SEARCH_CAP_FACTOR * n_total);
    if !(cap > 0.0) {
        return Err(Error::domain("cap", "search cap must be positive"));
    }

    let power = |n1: f64| gsd_power_after(design, t, n1 / n_total, k, dilution);

    let finish = |n1: f64, achieved: f64| ResizeResult {
        xi: n_total * t / (n_total * t + n1),
        n1_tilde: n1,
        n1_ceiling: ceil_patients(n1),
        total: n_total * t + n1,
        branch: Branch::BoundarySearch,
        achieved_power: Probability::saturating(achieved),
        ambiguous_root: false,
    };

    let at_zero = power(0.0)?;
    if at_zero >= target {
        return Ok(finish(0.0, at_zero));
    }

    const SCAN_STEPS: usize = 4000;
    let step = cap / SCAN_STEPS as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=SCAN_STEPS {
        let n1 = step * i as f64;
        if power(n1)? >= target {
            hi = Some(n1);
            break;
        }
        lo = n1;
    }
    let Some(mut hi) = hi else {
        return Err(Error::infeasible(format!(
            "planned power {target} is not reached with up to {cap} additional patients"
        )));
    };
    while hi - lo > SEARCH_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if power(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(finish(hi, power(hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsd::{obf_boundary, pocock_boundary};
    use crate::kernel::bisect;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    fn tau(t: f64) -> InformationFraction {
        InformationFraction::new(t).unwrap()
    }

    fn dil(eta: f64, psi: f64) -> DilutionSpec {
        DilutionSpec::new(eta, psi).unwrap()
    }

    /// Root of the unsquared power equation in the number of new patients.
    fn power_equation_oracle(n: f64, t: f64, eta: f64, psi: f64) -> f64 {
        let k = quantile(0.975) + quantile(0.9);
        let f = |n1: f64| {
            let total = n * t + n1;
            let share = n * t / total;
            (total / n).sqrt() * (share + (1.0 - share) * (1.0 - eta))
                / (share + (1.0 - share) * psi).sqrt()
                * k
                - k
        };
        bisect(f, 0.0, 100.0 * n, 1e-10).unwrap()
    }

    #[test]
    fn degenerate_branch_without_dilution() {
        let r = adjusted_stage2_n(100.0, tau(0.3), DilutionSpec::NONE, p(0.025), p(0.9)).unwrap();
        assert_eq!(r.branch, Branch::DegenerateLinear);
        assert_eq!(r.xi, 0.3);
        assert!((r.n1_tilde - 70.0).abs() < 1e-12);
        assert!((r.achieved_power.value() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn half_interim_ten_percent_dilution() {
        match xi_roots(tau(0.5), dil(0.1, 1.0)).unwrap() {
            XiRoots::Quadratic {
                root_minus,
                root_plus,
                discriminant,
            } => {
                assert!((discriminant - 0.82).abs() < 1e-14);
                assert!((root_minus - (0.91 - 0.82f64.sqrt()) / 0.01).abs() < 1e-10);
                assert!((root_plus - (0.91 + 0.82f64.sqrt()) / 0.01).abs() < 1e-9);
                assert!((root_plus - 181.55).abs() < 0.01);
            }
            other => panic!("{other:?}"),
        }
        let r = adjusted_stage2_n(100.0, tau(0.5), dil(0.1, 1.0), p(0.025), p(0.9)).unwrap();
        assert_eq!(r.branch, Branch::QuadraticRoot);
        let oracle = power_equation_oracle(100.0, 0.5, 0.1, 1.0);
        assert!((r.n1_tilde - oracle).abs() < 1e-6, "{} vs {oracle}", r.n1_tilde);
        assert!((r.n1_tilde - 62.0703).abs() < 1e-4);
        assert_eq!(r.n1_ceiling, 63);
    }

    #[test]
    fn degenerate_signal_from_roots() {
        assert!(matches!(
            xi_roots(tau(0.5), DilutionSpec::NONE).unwrap(),
            XiRoots::Linear { .. }
        ));
    }

    #[test]
    fn vieta() {
        for &(t, eta, psi) in &[(0.5, 0.1, 1.0), (0.3, 0.3, 1.25), (0.8, 0.0, 0.8), (0.6, -0.2, 1.5)] {
            let (a, b, c) = xi_coefficients(t, dil(eta, psi));
            if let XiRoots::Quadratic { root_minus, root_plus, .. } = xi_roots(tau(t), dil(eta, psi)).unwrap() {
                assert!((root_minus + root_plus + b / a).abs() < 1e-10 * (b / a).abs().max(1.0));
                assert!((root_minus * root_plus - c / a).abs() < 1e-10 * (c / a).abs().max(1.0));
            } else {
                panic!("expected two roots");
            }
        }
    }

    #[test]
    fn continuity_across_degeneracy() {
        let t = 0.5;
        let eta = 0.2;
        let psi_star = 1.0 - t * eta * eta;
        let at = adjusted_stage2_n(100.0, tau(t), dil(eta, psi_star), p(0.025), p(0.9)).unwrap();
        assert_eq!(at.branch, Branch::DegenerateLinear);
        for &offset in &[1e-6, -1e-6] {
            let near = adjusted_stage2_n(100.0, tau(t), dil(eta, psi_star + offset), p(0.025), p(0.9)).unwrap();
            assert_eq!(near.branch, Branch::QuadraticRoot);
            assert!((near.xi - at.xi).abs() < 1e-5);
        }
    }

    #[test]
    fn infeasible_without_residual_effect() {
        let err = adjusted_stage2_n(100.0, tau(0.5), dil(1.0, 1.0), p(0.025), p(0.9)).unwrap_err();
        assert_eq!(err.code(), "infeasible");
    }

    #[test]
    fn gsd_resize_exceeds_fixed_remainder() {
        let t = tau(0.5);
        let d = pocock_boundary(p(0.025), t).unwrap();
        let r = adjusted_stage2_n_gsd(&d, 100.0, t, DilutionSpec::NONE, p(0.025), p(0.9), None).unwrap();
        assert!(r.n1_tilde > 50.0);
        assert!((r.achieved_power.value() - 0.9).abs() < 1e-4);
        assert!(r.achieved_power.value() >= 0.9);
    }

    #[test]
    fn gsd_resize_monotone_in_dilution() {
        let t = tau(0.6);
        let d = obf_boundary(p(0.025), t).unwrap();
        let mut last = 0.0;
        for &eta in &[0.0, 0.05, 0.1, 0.2] {
            let r = adjusted_stage2_n_gsd(&d, 100.0, t, dil(eta, 1.0), p(0.025), p(0.8), None).unwrap();
            assert!(r.n1_tilde >= last);
            last = r.n1_tilde;
        }
    }

    #[test]
    fn gsd_resize_unreachable() {
        let t = tau(0.5);
        let d = pocock_boundary(p(0.025), t).unwrap();
        let err = adjusted_stage2_n_gsd(&d, 100.0, t, dil(0.99, 1.0), p(0.025), p(0.9), Some(50.0)).unwrap_err();
        assert_eq!(err.code(), "infeasible");
    }
}
