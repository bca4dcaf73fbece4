//! Ordinary least squares through a rank-revealing SVD.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Coefficients minimizing `‖X·β − y‖²`, or `None` when `X` lacks full
/// column rank.
pub(crate) fn fit(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    if rows.len() < p {
        return None;
    }
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let svd = x.svd(true, true);
    let largest = svd.singular_values.max();
    if !(largest > 0.0) || svd.singular_values.min() <= RANK_TOLERANCE * largest {
        return None;
    }
    let rhs = DVector::from_column_slice(y);
    let beta = svd.solve(&rhs, 0.0).ok()?;
    Some(beta.iter().copied().collect())
}

pub(crate) fn predict(beta: &[f64], row: &[f64]) -> f64 {
    beta.iter().zip(row).map(|(b, x)| b * x).sum()
}
