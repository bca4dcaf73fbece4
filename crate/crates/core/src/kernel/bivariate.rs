//! Bivariate standard normal distribution function.
//!
//! Drezner–Wesolowsky reduction to a one-dimensional integral over the
//! correlation, evaluated with Gauss–Legendre rules whose order grows with
//! `|rho|` (6, 12, 20 points). For `|rho| > 0.925` the integrand is nearly
//! singular, so the dominant part is expanded analytically and only the
//! smooth remainder is integrated (Genz's modification).

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use super::normal::{cdf, sf};
use crate::error::{Error, Result};
use crate::types::{Correlation, Probability};

/// Integration limit: a finite abscissa or one of the infinite sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl From<f64> for Limit {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Limit::PosInfinity
        } else if x == f64::NEG_INFINITY {
            Limit::NegInfinity
        } else {
            Limit::Finite(x)
        }
    }
}

// (weight, abscissa) pairs on [-1, 0); the rule is symmetric.
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];

const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];

const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949),
    (0.4060142980038694e-01, -0.9639719272779138),
    (0.6267204833410906e-01, -0.9122344282513259),
    (0.8327674157670475e-01, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.7652652113349733e-01),
];

/// Lower-branch threshold above which the near-singular expansion is used.
pub const HIGH_CORRELATION: f64 = 0.925;

/// Checked `P(Z1 <= a, Z2 <= b)` for standard normals with correlation `rho`.
pub fn bivariate_normal_cdf(
    a: impl Into<Limit>,
    b: impl Into<Limit>,
    rho: Correlation,
) -> Result<Probability> {
    let a = finite_or_sentinel(a.into(), "a")?;
    let b = finite_or_sentinel(b.into(), "b")?;
    let rho = rho.value();
    let p = match (a, b) {
        (Limit::NegInfinity, _) | (_, Limit::NegInfinity) => 0.0,
        (Limit::PosInfinity, Limit::PosInfinity) => 1.0,
        (Limit::PosInfinity, Limit::Finite(y)) => cdf(y),
        (Limit::Finite(x), Limit::PosInfinity) => cdf(x),
        (Limit::Finite(x), Limit::Finite(y)) => bvn_upper(-x, -y, rho),
    };
    Ok(Probability::saturating(p))
}

fn finite_or_sentinel(x: Limit, name: &'static str) -> Result<Limit> {
    match x {
        Limit::Finite(v) if v.is_nan() => Err(Error::domain(name, "NaN limit")),
        other => Ok(other),
    }
}

/// Unchecked lower-orthant probability for finite (or infinite `f64`) limits.
///
/// Callers guarantee `|rho| <= 1`.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> f64 {
    if a == f64::INFINITY {
        return cdf(b);
    }
    if b == f64::INFINITY {
        return cdf(a);
    }
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    bvn_upper(-a, -b, rho).clamp(0.0, 1.0)
}

/// `P(Z1 > h, Z2 > k)` for finite `h`, `k`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };

    if r.abs() <= HIGH_CORRELATION {
        let mut bvn = 0.0;
        if r != 0.0 {
            let hk = h * k;
            let hs = 0.5 * (h * h + k * k);
            let asr = 0.5 * r.asin();
            for &(w, x) in rule {
                for side in [-1.0, 1.0] {
                    let sn = (asr * (side * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * PI);
        }
        return bvn + sf(h) * sf(k);
    }

    // |r| > 0.925: reflect the second coordinate for negative correlation.
    let (k, hk) = if r < 0.0 { (-k, -h * k) } else { (k, h * k) };
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_sq = (1.0 - r) * (1.0 + r);
        let mut a = a_sq.sqrt();
        let b_sq = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (b_sq / a_sq + hk);
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0
                    + c * d * a_sq * a_sq / 5.0);
        }
        if -hk < 100.0 {
            let b = b_sq.sqrt();
            bvn -= (-0.5 * hk).exp()
                * (2.0 * PI).sqrt()
                * cdf(-b / a)
                * b
                * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
        }
        a *= 0.5;
        for &(w, x) in rule {
            for side in [-1.0, 1.0] {
                let xs = (a * (side * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -0.5 * (b_sq / xs + hk);
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn /= -2.0 * PI;
    }

    if r > 0.0 {
        bvn + sf(h.max(k))
    } else {
        let mut bvn = -bvn;
        if k > h {
            bvn += if h < 0.0 {
                cdf(k) - cdf(h)
            } else {
                sf(h) - sf(k)
            };
        }
        bvn
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normal::pdf;
    use crate::kernel::quadrature::integrate;

    fn corr(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    /// Nested adaptive quadrature of the bivariate density: the outer
    /// integral runs over x, the inner over y, both on truncated ranges.
    fn nested_oracle(a: f64, b: f64, rho: f64) -> f64 {
        let s = (1.0 - rho * rho).sqrt();
        let outer = |x: f64| {
            let inner = |y: f64| pdf((y - rho * x) / s) / s;
            let lo = (rho * x - 12.0 * s).min(b);
            pdf(x) * integrate(inner, lo, b, 1e-14).map(|q| q.value).unwrap_or_else(|e| match e {
                Error::Numerical { estimate: Some(v), .. } => v,
                _ => f64::NAN,
            })
        };
        integrate(outer, (-12.0_f64).min(a), a, 1e-13).unwrap().value
    }

    #[test]
    fn independence() {
        for &(a, b) in &[(0.3, -1.2), (-2.0, 2.0), (1.5, 0.7)] {
            let p = bivariate_normal_cdf(a, b, corr(0.0)).unwrap().value();
            assert!((p - cdf(a) * cdf(b)).abs() < 1e-15);
        }
    }

    #[test]
    fn comonotone_and_antitone_limits() {
        for &(a, b) in &[(0.3, -1.2), (-2.0, 2.0), (1.5, 0.7)] {
            let p = bivariate_normal_cdf(a, b, corr(1.0)).unwrap().value();
            assert!((p - cdf(f64::min(a, b))).abs() < 1e-15);
            let q = bivariate_normal_cdf(a, b, corr(-1.0)).unwrap().value();
            assert!((q - (cdf(a) + cdf(b) - 1.0).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn value_against_nested_quadrature() {
        let p = bivariate_normal_cdf(0.197, -0.4835, corr(0.6)).unwrap().value();
        let oracle = nested_oracle(0.197, -0.4835, 0.6);
        assert!((p - oracle).abs() < 1e-8, "{p} vs {oracle}");
    }

    #[test]
    fn grid_against_nested_quadrature() {
        for &rho in &[-0.99, -0.95, -0.93, -0.5, -0.1, 0.2, 0.5, 0.8, 0.92, 0.93, 0.97, 0.995] {
            for &(a, b) in &[(-1.0, 0.5), (0.0, 0.0), (2.2, 1.9), (-2.5, -0.3), (1.0, -1.0)] {
                let p = bvn_cdf(a, b, rho);
                let oracle = nested_oracle(a, b, rho);
                assert!((p - oracle).abs() < 1e-10, "a={a} b={b} rho={rho}: {p} vs {oracle}");
            }
        }
    }

    #[test]
    fn infinite_sentinel_gives_margin() {
        for &rho in &[-0.9, 0.0, 0.7, 0.99] {
            let p = bivariate_normal_cdf(0.4, Limit::PosInfinity, corr(rho)).unwrap().value();
            assert_eq!(p, cdf(0.4));
            let q = bivariate_normal_cdf(Limit::PosInfinity, -1.3, corr(rho)).unwrap().value();
            assert_eq!(q, cdf(-1.3));
        }
        assert_eq!(bivariate_normal_cdf(f64::NEG_INFINITY, 0.0, corr(0.5)).unwrap().value(), 0.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        for &rho in &[-0.97, -0.4, 0.3, 0.93, 0.999] {
            let p = bvn_cdf(0.8, -0.35, rho);
            let q = bvn_cdf(-0.35, 0.8, rho);
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn nan_limit_rejected() {
        assert!(bivariate_normal_cdf(f64::NAN, 0.0, corr(0.1)).is_err());
    }
}
