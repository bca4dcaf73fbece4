//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Piece {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
///
/// Bisects the worst subinterval until the summed error estimate is below
/// `tol`. If the interval budget runs out, returns [`Error::Numerical`] with
/// the best estimate attached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Quadrature> {
    if !(tol > 0.0) {
        return Err(Error::domain("tol", "tolerance must be positive"));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain("lo", "integration limits must be finite"));
    }
    if lo == hi {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if lo > hi {
        return integrate(f, hi, lo, tol).map(|q| Quadrature {
            value: -q.value,
            ..q
        });
    }

    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, lo, hi);
    if !first.value.is_finite() || !first.error.is_finite() {
        return Err(Error::Numerical {
            message: "integrand is not finite".into(),
            estimate: None,
        });
    }
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;

    while error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numerical {
                message: format!(
                    "quadrature did not reach tolerance {tol:e} (estimated error {error:e})"
                ),
                estimate: Some(value),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval cannot be split further in f64
            heap.push(worst);
            return Err(Error::Numerical {
                message: "quadrature interval collapsed below machine resolution".into(),
                estimate: Some(value),
            });
        }
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        evaluations += 30;
        if !(left.value + right.value).is_finite() || !(left.error + right.error).is_finite() {
            return Err(Error::Numerical {
                message: format!("integrand is not finite on [{}, {}]", worst.lo, worst.hi),
                estimate: Some(value),
            });
        }
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if error <= tol {
            error = heap.iter().map(|p| p.error).sum();
        }
    }

    // re-sum to shed the drift of the incremental updates
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature {
        value,
        error,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normal::{cdf, pdf};

    #[test]
    fn normal_density_normalizes() {
        let q = integrate(pdf, -8.0, 8.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let q = integrate(|x| x * pdf(x), -8.0, 8.0, 1e-12).unwrap();
        assert!(q.value.abs() < 1e-10);
    }

    #[test]
    fn partial_mass_matches_cdf() {
        let q = integrate(pdf, 0.0, 1.959964, 1e-12).unwrap();
        assert!((q.value - (cdf(1.959964) - 0.5)).abs() < 1e-12);
        assert!((q.value - 0.475).abs() < 1e-8);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate(|x| x * x, 1.0, 0.0, 1e-12).unwrap();
        assert!((q.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        // 1/x diverges at the left end
        let err = integrate(|x: f64| if x > 0.0 { 1.0 / x } else { 0.0 }, 0.0, 1.0, 1e-15)
            .unwrap_err();
        match err {
            Error::Numerical { estimate, .. } => assert!(estimate.unwrap().is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_tolerance() {
        assert!(integrate(pdf, 0.0, 1.0, 0.0).is_err());
    }
}
