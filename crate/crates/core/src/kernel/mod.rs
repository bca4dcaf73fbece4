//! Standard-normal primitives, quadrature and root finding.

mod bivariate;
mod normal;
mod quadrature;
mod roots;

pub use bivariate::{bivariate_normal_cdf, bvn_cdf, Limit, HIGH_CORRELATION};
pub use normal::{cdf, pdf, quantile, sf, std_normal_cdf, std_normal_quantile};
pub use quadrature::{integrate, Quadrature, MAX_INTERVALS};
pub use roots::bisect;
