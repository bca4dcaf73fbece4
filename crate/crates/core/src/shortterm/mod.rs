//! Interim estimation of a binary long-term success rate when some patients
//! have only reached a binary short-term endpoint.
//!
//! Records follow monotone follow-up: the long-term outcome `l` is only ever
//! observed when the short-term outcome `s` is. Missingness is assumed to be
//! completely at random.

mod csv;
mod ols;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::InformationFraction;

pub use self::csv::{parse_csv, read_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// 0 = control, 1 = treatment.
    pub arm: u8,
    pub s: Option<bool>,
    pub l: Option<bool>,
    pub covariates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTermDataset {
    records: Vec<Record>,
    covariate_dim: usize,
}

impl ShortTermDataset {
    pub fn new(records: Vec<Record>, covariate_dim: usize) -> Result<Self> {
        for (i, rec) in records.iter().enumerate() {
            let line = i as u64 + 1;
            if rec.arm > 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("arm must be 0 or 1, got {}", rec.arm),
                });
            }
            if rec.l.is_some() && rec.s.is_none() {
                return Err(Error::Parse {
                    line,
                    message: "long-term outcome observed without the short-term outcome".into(),
                });
            }
            if rec.covariates.len() != covariate_dim {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "expected {covariate_dim} covariates, found {}",
                        rec.covariates.len()
                    ),
                });
            }
            if rec.covariates.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line,
                    message: "non-finite covariate".into(),
                });
            }
        }
        Ok(ShortTermDataset {
            records,
            covariate_dim,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    fn arm(&self, arm: u8) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.arm == arm)
    }

    fn counts(&self) -> (usize, usize) {
        let complete = self.records.iter().filter(|r| r.l.is_some()).count();
        let short_only = self
            .records
            .iter()
            .filter(|r| r.s.is_some() && r.l.is_none())
            .count();
        (complete, short_only)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterimEstimate {
    pub p_arm0: f64,
    pub p_arm1: f64,
    /// `p_arm1 − p_arm0`
    pub difference: f64,
    /// Records with both endpoints observed.
    pub n_complete: usize,
    /// Records with only the short-term endpoint observed.
    pub n_short_only: usize,
    /// An arm estimate left `[0, 1]` (only possible for the regression
    /// estimator, whose predictions are not clipped).
    pub out_of_range: bool,
}

impl InterimEstimate {
    fn new(p_arm0: f64, p_arm1: f64, data: &ShortTermDataset) -> Self {
        let (n_complete, n_short_only) = data.counts();
        let outside = |p: f64| !(0.0..=1.0).contains(&p);
        InterimEstimate {
            p_arm0,
            p_arm1,
            difference: p_arm1 - p_arm0,
            n_complete,
            n_short_only,
            out_of_range: outside(p_arm0) || outside(p_arm1),
        }
    }
}

/// Maximum-likelihood estimate combining short-term status with the
/// conditional long-term success rates of completed patients:
/// `P(L=1|S=1)·P(S=1) + P(L=1|S=0)·(1 − P(S=1))` per arm.
pub fn marschner_becker(data: &ShortTermDataset) -> Result<InterimEstimate> {
    let p0 = marschner_becker_arm(data, 0)?;
    let p1 = marschner_becker_arm(data, 1)?;
    Ok(InterimEstimate::new(p0, p1, data))
}

fn marschner_becker_arm(data: &ShortTermDataset, arm: u8) -> Result<f64> {
    let mut s_observed = 0usize;
    let mut s_success = 0usize;
    // [stratum] -> (completed, long-term successes)
    let mut complete = [(0usize, 0usize); 2];
    for rec in data.arm(arm) {
        let Some(s) = rec.s else { continue };
        s_observed += 1;
        s_success += s as usize;
        if let Some(l) = rec.l {
            let cell = &mut complete[s as usize];
            cell.0 += 1;
            cell.1 += l as usize;
        }
    }
    for stratum in [1u8, 0] {
        if complete[stratum as usize].0 == 0 {
            return Err(Error::StratumCollapse { arm, stratum });
        }
    }
    let p_s = s_success as f64 / s_observed as f64;
    let rate = |(n, k): (usize, usize)| k as f64 / n as f64;
    Ok(rate(complete[1]) * p_s + rate(complete[0]) * (1.0 - p_s))
}

/// Three-step covariate-adjusted estimator.
///
/// Per arm: (1) least-squares model of `l` on `(1, s, x)` over completed
/// patients, predicted for everyone with `s` observed; (2) least-squares
/// model of those predictions on `(1, x)` over the same patients; (3) mean
/// of the step-2 predictions over every recruited patient. Linear
/// probability models; predictions are not clipped.
pub fn van_lancker_estimate(data: &ShortTermDataset) -> Result<InterimEstimate> {
    let p0 = van_lancker_arm(data, 0)?;
    let p1 = van_lancker_arm(data, 1)?;
    Ok(InterimEstimate::new(p0, p1, data))
}

fn van_lancker_arm(data: &ShortTermDataset, arm: u8) -> Result<f64> {
    let dim = data.covariate_dim;
    let completed: Vec<&Record> = data.arm(arm).filter(|r| r.l.is_some()).collect();
    let needed = dim + 3;
    if completed.len() < needed {
        return Err(Error::InsufficientData {
            arm,
            needed,
            found: completed.len(),
        });
    }

    let with_s = |r: &Record| {
        let mut row = Vec::with_capacity(dim + 2);
        row.push(1.0);
        row.push(if r.s == Some(true) { 1.0 } else { 0.0 });
        row.extend_from_slice(&r.covariates);
        row
    };
    let baseline = |r: &Record| {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(1.0);
        row.extend_from_slice(&r.covariates);
        row
    };

    let x1: Vec<Vec<f64>> = completed.iter().map(|r| with_s(r)).collect();
    let y1: Vec<f64> = completed
        .iter()
        .map(|r| if r.l == Some(true) { 1.0 } else { 0.0 })
        .collect();
    let beta1 = ols::fit(&x1, &y1).ok_or(Error::Collinearity { arm, step: "first" })?;

    let observed: Vec<&Record> = data.arm(arm).filter(|r| r.s.is_some()).collect();
    let predicted: Vec<f64> = observed.iter().map(|r| ols::predict(&beta1, &with_s(r))).collect();
    let x2: Vec<Vec<f64>> = observed.iter().map(|r| baseline(r)).collect();
    let beta2 = ols::fit(&x2, &predicted).ok_or(Error::Collinearity { arm, step: "second" })?;

    let (sum, count) = data
        .arm(arm)
        .fold((0.0, 0usize), |(s, n), r| (s + ols::predict(&beta2, &baseline(r)), n + 1));
    Ok(sum / count as f64)
}

/// Share of planned patients with the long-term endpoint observed.
pub fn interim_information_fraction(
    data: &ShortTermDataset,
    n_planned: u64,
) -> Result<InformationFraction> {
    let observed = data.records.iter().filter(|r| r.l.is_some()).count() as u64;
    if observed == 0 {
        return Err(Error::domain(
            "data",
            "no long-term outcomes observed; the information fraction would be zero",
        ));
    }
    InformationFraction::from_counts(observed, n_planned)
}
