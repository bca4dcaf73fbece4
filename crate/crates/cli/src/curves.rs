//! Power curves over the information fraction and the reference power table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use trial_resizer::{boundary, gsd_power, power_at_fraction, DilutionSpec, Error, Scheme};

use crate::api::{fraction, prob, ApiResult};
use crate::error::ApiError;

/// Information fractions of the reference power table.
pub const TABLE_TAUS: [f64; 8] = [0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99];
pub const TABLE_POWERS: [f64; 2] = [0.8, 0.9];
pub const TABLE_ETAS: [f64; 2] = [0.0, 0.1];
pub const CURVE_ETAS: [f64; 3] = [0.0, 0.1, 0.5];

pub const DEFAULT_SERIES: [Series; 5] = [
    Series::Fixed,
    Series::PocockStage1,
    Series::PocockOverall,
    Series::ObfStage1,
    Series::ObfOverall,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Fixed,
    PocockStage1,
    PocockOverall,
    ObfStage1,
    ObfOverall,
    KimDemetsStage1,
    KimDemetsOverall,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::Fixed => "fixed",
            Series::PocockStage1 => "pocock_stage1",
            Series::PocockOverall => "pocock_overall",
            Series::ObfStage1 => "obf_stage1",
            Series::ObfOverall => "obf_overall",
            Series::KimDemetsStage1 => "kim_demets_stage1",
            Series::KimDemetsOverall => "kim_demets_overall",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParameters {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default)]
    pub rho_spend: Option<f64>,
}

impl Default for CurveParameters {
    fn default() -> Self {
        CurveParameters {
            alpha: default_alpha(),
            power: default_power(),
            eta: 0.0,
            psi: 1.0,
            rho_spend: None,
        }
    }
}

fn default_alpha() -> f64 {
    0.025
}
fn default_power() -> f64 {
    0.9
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveAxis {
    #[serde(default = "tau_axis")]
    pub axis: String,
    pub values: Vec<f64>,
}

fn tau_axis() -> String {
    "tau".into()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesRequest {
    #[serde(default)]
    pub parameters: CurveParameters,
    #[serde(default)]
    pub grid: Option<CurveAxis>,
    #[serde(default)]
    pub series: Option<Vec<Series>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveGrid {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    /// One entry per axis value; `None` where the quantity is undefined.
    pub series: BTreeMap<String, Vec<Option<f64>>>,
}

/// `0.50, 0.51, …, 0.99`.
pub fn default_tau_grid() -> Vec<f64> {
    (50..=99).map(|i| i as f64 / 100.0).collect()
}

/// Power values of one design at one information fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub fixed: f64,
    pub pocock: Option<(f64, f64)>,
    pub obf: Option<(f64, f64)>,
    pub kim_demets: Option<(f64, f64)>,
}

impl CurvePoint {
    pub fn get(&self, s: Series) -> Option<f64> {
        match s {
            Series::Fixed => Some(self.fixed),
            Series::PocockStage1 => self.pocock.map(|p| p.0),
            Series::PocockOverall => self.pocock.map(|p| p.1),
            Series::ObfStage1 => self.obf.map(|p| p.0),
            Series::ObfOverall => self.obf.map(|p| p.1),
            Series::KimDemetsStage1 => self.kim_demets.map(|p| p.0),
            Series::KimDemetsOverall => self.kim_demets.map(|p| p.1),
        }
    }
}

/// Evaluates the fixed design and the two-look designs at `tau`. The
/// two-look values are absent at `tau = 1`, where there is no interim.
pub fn curve_point(params: &CurveParameters, tau: f64, kim_demets: bool) -> Result<CurvePoint, Error> {
    let alpha = prob("alpha", params.alpha)?;
    let power = prob("power", params.power)?;
    let t = fraction(tau)?;
    let dil = DilutionSpec::new(params.eta, params.psi)?;
    let fixed = power_at_fraction(alpha, power, t)?.value();
    let two_look = |scheme: Scheme| -> Result<Option<(f64, f64)>, Error> {
        if tau >= 1.0 {
            return Ok(None);
        }
        let d = boundary(scheme, alpha, t)?;
        let pw = gsd_power(&d, alpha, power, t, dil)?;
        Ok(Some((pw.stage1.value(), pw.overall.value())))
    };
    let kd = match (kim_demets, params.rho_spend) {
        (false, _) => None,
        (true, Some(rho)) => two_look(Scheme::KimDemets { rho })?,
        (true, None) => {
            return Err(Error::Domain {
                parameter: "rho_spend",
                message: "kim_demets series need a spending exponent".into(),
            })
        }
    };
    Ok(CurvePoint {
        fixed,
        pocock: two_look(Scheme::Pocock)?,
        obf: two_look(Scheme::ObrienFleming)?,
        kim_demets: kd,
    })
}

pub fn curve_grid(req: &CurvesRequest) -> ApiResult<CurveGrid> {
    let (axis, values) = match &req.grid {
        Some(g) => (g.axis.clone(), g.values.clone()),
        None => (tau_axis(), default_tau_grid()),
    };
    if axis != "tau" {
        return Err(ApiError::bad_request(
            "invalid_parameter",
            format!("curves are evaluated over tau, not {axis:?}"),
            Some("grid.axis".into()),
        ));
    }
    let series = req.series.clone().unwrap_or_else(|| DEFAULT_SERIES.to_vec());
    let kd = series
        .iter()
        .any(|s| matches!(s, Series::KimDemetsStage1 | Series::KimDemetsOverall));
    let points = values
        .iter()
        .map(|&t| curve_point(&req.parameters, t, kd))
        .collect::<Result<Vec<_>, _>>()?;
    let series = series
        .iter()
        .map(|&s| (s.name().to_owned(), points.iter().map(|p| p.get(s)).collect()))
        .collect();
    Ok(CurveGrid {
        axis_name: axis,
        axis_values: values,
        series,
    })
}

/// One row of the long-format power table export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub eta: f64,
    pub power: f64,
    pub tau: f64,
    pub fixed: f64,
    pub pocock_stage1: f64,
    pub pocock_overall: f64,
    pub obf_stage1: f64,
    pub obf_overall: f64,
}

/// Power table rows, optionally restricted to one dilution level or one
/// planned power.
pub fn table1(eta: Option<f64>, power: Option<f64>, alpha: f64) -> Result<Vec<TableRow>, Error> {
    let etas: Vec<f64> = eta.map_or(TABLE_ETAS.to_vec(), |e| vec![e]);
    let powers: Vec<f64> = power.map_or(TABLE_POWERS.to_vec(), |p| vec![p]);
    let mut rows = Vec::new();
    for &eta in &etas {
        for &power in &powers {
            let params = CurveParameters {
                alpha,
                power,
                eta,
                ..CurveParameters::default()
            };
            for &tau in &TABLE_TAUS {
                let pt = curve_point(&params, tau, false)?;
                let (ps1, pov) = pt.pocock.expect("table fractions are interim");
                let (os1, oov) = pt.obf.expect("table fractions are interim");
                rows.push(TableRow {
                    eta,
                    power,
                    tau,
                    fixed: pt.fixed,
                    pocock_stage1: ps1,
                    pocock_overall: pov,
                    obf_stage1: os1,
                    obf_overall: oov,
                });
            }
        }
    }
    Ok(rows)
}

/// One row of the long-format curve export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub eta: f64,
    pub tau: f64,
    pub fixed: f64,
    pub pocock_stage1: Option<f64>,
    pub pocock_overall: Option<f64>,
    pub obf_stage1: Option<f64>,
    pub obf_overall: Option<f64>,
}

pub fn curve_rows(params: &CurveParameters, etas: &[f64], taus: &[f64]) -> Result<Vec<CurveRow>, Error> {
    let mut rows = Vec::with_capacity(etas.len() * taus.len());
    for &eta in etas {
        let p = CurveParameters { eta, ..params.clone() };
        for &tau in taus {
            let pt = curve_point(&p, tau, false)?;
            rows.push(CurveRow {
                eta,
                tau,
                fixed: pt.fixed,
                pocock_stage1: pt.get(Series::PocockStage1),
                pocock_overall: pt.get(Series::PocockOverall),
                obf_stage1: pt.get(Series::ObfStage1),
                obf_overall: pt.get(Series::ObfOverall),
            });
        }
    }
    Ok(rows)
}
