//! Typed requests for every operation and a name-based dispatcher shared by
//! the HTTP routes and the CLI subcommands.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use trial_resizer::kernel::quantile;
use trial_resizer::resize::{xi_roots, XiRoots};
use trial_resizer::{
    adjusted_stage2_n, adjusted_stage2_n_gsd, boundary, conditional_error, conditional_power,
    fixed_power_diluted, gsd_power, interim_information_fraction, joint_law, joint_law_general,
    marschner_becker, parse_csv, planned_noncentrality, power_at_fraction, required_sample_size,
    van_lancker_estimate, DesignParams, DilutionSpec, Error, GeneralDilutionSpec, GsdDesign,
    InformationFraction, InterimEstimate, JointLaw, Probability, ResizeResult, SampleSize, Scheme,
};

use crate::curves::{curve_grid, CurvesRequest};
use crate::error::ApiError;
use crate::format::round_json;

pub type ApiResult<T> = std::result::Result<T, ApiError>;

fn default_alpha() -> f64 {
    0.025
}
fn default_power() -> f64 {
    0.9
}
fn one() -> f64 {
    1.0
}

pub(crate) fn prob(parameter: &'static str, x: f64) -> Result<Probability, Error> {
    Probability::new(x).map_err(|_| Error::Domain {
        parameter,
        message: format!("{x} is outside [0, 1]"),
    })
}

pub(crate) fn fraction(x: f64) -> Result<InformationFraction, Error> {
    InformationFraction::new(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Pocock,
    #[serde(alias = "obf")]
    ObrienFleming,
    KimDemets,
}

impl SchemeName {
    pub fn resolve(self, rho_spend: Option<f64>) -> Result<Scheme, Error> {
        Ok(match self {
            SchemeName::Pocock => Scheme::Pocock,
            SchemeName::ObrienFleming => Scheme::ObrienFleming,
            SchemeName::KimDemets => Scheme::KimDemets {
                rho: rho_spend.ok_or(Error::Domain {
                    parameter: "rho_spend",
                    message: "the kim_demets scheme needs a spending exponent".into(),
                })?,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFractionRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub power: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerResponse {
    pub power: f64,
}

pub fn power_fraction(req: &PowerFractionRequest) -> ApiResult<PowerResponse> {
    let power = power_at_fraction(prob("alpha", req.alpha)?, prob("power", req.power)?, fraction(req.tau)?)?;
    Ok(PowerResponse {
        power: power.value(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSizeRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub r: f64,
}

impl SampleSizeRequest {
    fn params(&self) -> Result<DesignParams, Error> {
        design_params(self.alpha, self.power, self.delta, self.sigma, self.r)
    }
}

fn design_params(alpha: f64, power: f64, delta: f64, sigma: f64, r: f64) -> Result<DesignParams, Error> {
    prob("power", power)?;
    DesignParams::new(alpha, 1.0 - power, delta, sigma, r).map_err(|e| match e {
        Error::Domain { parameter: "beta", message } => Error::Domain {
            parameter: "power",
            message: format!("planned power {power} gives beta {message}"),
        },
        other => other,
    })
}

pub fn sample_size(req: &SampleSizeRequest) -> ApiResult<SampleSize> {
    Ok(required_sample_size(&req.params()?)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundariesRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub tau: f64,
    pub scheme: SchemeName,
    #[serde(default)]
    pub rho_spend: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundariesResponse {
    pub scheme: &'static str,
    pub alpha: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub look_correlation: f64,
    pub type_one_error: f64,
}

fn design(alpha: f64, tau: f64, scheme: SchemeName, rho_spend: Option<f64>) -> Result<GsdDesign, Error> {
    boundary(scheme.resolve(rho_spend)?, prob("alpha", alpha)?, fraction(tau)?)
}

pub fn gsd_boundaries(req: &BoundariesRequest) -> ApiResult<BoundariesResponse> {
    let d = design(req.alpha, req.tau, req.scheme, req.rho_spend)?;
    Ok(BoundariesResponse {
        scheme: d.scheme.name(),
        alpha: req.alpha,
        tau: req.tau,
        c1: d.c1,
        c2: d.c2,
        look_correlation: d.look_correlation(),
        type_one_error: d.type_one_error(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsdPowerRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    pub tau: f64,
    pub scheme: SchemeName,
    #[serde(default)]
    pub rho_spend: Option<f64>,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GsdPowerResponse {
    pub scheme: &'static str,
    pub c1: f64,
    pub c2: f64,
    pub stage1: f64,
    pub overall: f64,
}

pub fn gsd_power_op(req: &GsdPowerRequest) -> ApiResult<GsdPowerResponse> {
    let d = design(req.alpha, req.tau, req.scheme, req.rho_spend)?;
    let dil = DilutionSpec::new(req.eta, req.psi)?;
    let pw = gsd_power(&d, d.alpha, prob("power", req.power)?, d.tau, dil)?;
    Ok(GsdPowerResponse {
        scheme: d.scheme.name(),
        c1: d.c1,
        c2: d.c2,
        stage1: pw.stage1.value(),
        overall: pw.overall.value(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub tau: f64,
    pub scheme: SchemeName,
    #[serde(default)]
    pub rho_spend: Option<f64>,
    pub z1: f64,
    /// Expected final statistic at full information; defaults to the
    /// planned drift for `power` when omitted.
    #[serde(default)]
    pub drift: Option<f64>,
    #[serde(default)]
    pub power: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalErrorResponse {
    pub conditional_error: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn conditional_error_op(req: &ConditionalRequest) -> ApiResult<ConditionalErrorResponse> {
    let d = design(req.alpha, req.tau, req.scheme, req.rho_spend)?;
    Ok(ConditionalErrorResponse {
        conditional_error: conditional_error(req.z1, &d)?.value(),
        c1: d.c1,
        c2: d.c2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalPowerResponse {
    pub conditional_power: f64,
    pub drift: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn conditional_power_op(req: &ConditionalRequest) -> ApiResult<ConditionalPowerResponse> {
    let d = design(req.alpha, req.tau, req.scheme, req.rho_spend)?;
    let drift = match (req.drift, req.power) {
        (Some(drift), _) => drift,
        (None, Some(power)) => planned_noncentrality(d.alpha, prob("power", power)?)?,
        (None, None) => {
            return Err(Error::Domain {
                parameter: "drift",
                message: "give either drift or the planned power".into(),
            }
            .into())
        }
    };
    Ok(ConditionalPowerResponse {
        conditional_power: conditional_power(req.z1, &d, drift)?.value(),
        drift,
        c1: d.c1,
        c2: d.c2,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLawRequest {
    pub tau: f64,
    /// Total sample size; defaults to the continuous planned size.
    #[serde(default)]
    pub n: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
    /// Arm-specific description; replaces `delta`, `sigma`, `eta`, `psi`.
    #[serde(default)]
    pub general: Option<GeneralDilutionSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointLawResponse {
    pub n: f64,
    #[serde(flatten)]
    pub law: JointLaw,
    pub min_eigenvalue: f64,
    pub positive_semidefinite: bool,
}

pub fn joint_law_op(req: &JointLawRequest) -> ApiResult<JointLawResponse> {
    let params = design_params(req.alpha, req.power, req.delta, req.sigma, req.r)?;
    let n = match req.n {
        Some(n) => n,
        None => required_sample_size(&params)?.continuous,
    };
    let tau = fraction(req.tau)?;
    let law = match &req.general {
        Some(spec) => joint_law_general(n, tau, req.r, spec)?,
        None => joint_law(n, tau, &params, DilutionSpec::new(req.eta, req.psi)?)?,
    };
    Ok(JointLawResponse {
        n,
        law,
        min_eigenvalue: law.min_eigenvalue(),
        positive_semidefinite: law.is_positive_semidefinite(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilutionPowerRequest {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    pub tau: f64,
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DilutionPowerResponse {
    /// Final analysis with all planned patients.
    pub power: f64,
    /// Analysis of the pre-disruption patients only.
    pub interim_power: f64,
}

pub fn dilution_power(req: &DilutionPowerRequest) -> ApiResult<DilutionPowerResponse> {
    let (alpha, power, tau) = (prob("alpha", req.alpha)?, prob("power", req.power)?, fraction(req.tau)?);
    let dil = DilutionSpec::new(req.eta, req.psi)?;
    Ok(DilutionPowerResponse {
        power: fixed_power_diluted(alpha, power, tau, dil)?.value(),
        interim_power: power_at_fraction(alpha, power, tau)?.value(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResizeRequest {
    /// Planned total sample size.
    pub n: f64,
    pub tau: f64,
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResizeResponse {
    #[serde(flatten)]
    pub result: ResizeResult,
    pub roots: XiRoots,
}

pub fn resize_fixed(req: &ResizeRequest) -> ApiResult<ResizeResponse> {
    let tau = fraction(req.tau)?;
    let dil = DilutionSpec::new(req.eta, req.psi)?;
    let result = adjusted_stage2_n(req.n, tau, dil, prob("alpha", req.alpha)?, prob("power", req.power)?)?;
    Ok(ResizeResponse {
        result,
        roots: xi_roots(tau, dil)?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResizeGsdRequest {
    pub n: f64,
    pub tau: f64,
    pub eta: f64,
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    pub scheme: SchemeName,
    #[serde(default)]
    pub rho_spend: Option<f64>,
    /// Largest post-disruption size searched; defaults to `100·n`.
    #[serde(default)]
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResizeGsdResponse {
    #[serde(flatten)]
    pub result: ResizeResult,
    pub scheme: &'static str,
    pub c1: f64,
    pub c2: f64,
}

pub fn resize_gsd(req: &ResizeGsdRequest) -> ApiResult<ResizeGsdResponse> {
    let d = design(req.alpha, req.tau, req.scheme, req.rho_spend)?;
    let dil = DilutionSpec::new(req.eta, req.psi)?;
    let result = adjusted_stage2_n_gsd(&d, req.n, d.tau, dil, d.alpha, prob("power", req.power)?, req.cap)?;
    Ok(ResizeGsdResponse {
        result,
        scheme: d.scheme.name(),
        c1: d.c1,
        c2: d.c2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    MarschnerBecker,
    VanLancker,
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortTermResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marschner_becker: Option<InterimEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub van_lancker: Option<InterimEstimate>,
    pub records: usize,
    pub covariate_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub information_fraction: Option<f64>,
}

pub fn shortterm_estimate(csv: &[u8], estimator: Estimator, n_planned: Option<u64>) -> ApiResult<ShortTermResponse> {
    let data = parse_csv(csv)?;
    let mb = matches!(estimator, Estimator::MarschnerBecker | Estimator::Both);
    let vl = matches!(estimator, Estimator::VanLancker | Estimator::Both);
    Ok(ShortTermResponse {
        marschner_becker: mb.then(|| marschner_becker(&data)).transpose()?,
        van_lancker: vl.then(|| van_lancker_estimate(&data)).transpose()?,
        records: data.records().len(),
        covariate_dim: data.covariate_dim(),
        information_fraction: n_planned
            .map(|n| interim_information_fraction(&data, n).map(|t| t.value()))
            .transpose()?,
    })
}

/// Generic request: an operation name, its parameters, and an optional
/// grid over one scalar parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeRequest {
    pub operation: String,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    #[serde(default)]
    pub grid: Option<GridAxis>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Operation names accepted by [`dispatch`], with their scalar parameters.
pub const OPERATIONS: &[(&str, &[&str])] = &[
    ("power_fraction", &["alpha", "power", "tau"]),
    ("sample_size", &["alpha", "power", "delta", "sigma", "r"]),
    ("gsd_boundaries", &["alpha", "tau", "rho_spend"]),
    ("gsd_power", &["alpha", "power", "tau", "rho_spend", "eta", "psi"]),
    ("conditional_error", &["alpha", "tau", "rho_spend", "z1"]),
    ("conditional_power", &["alpha", "tau", "rho_spend", "z1", "drift", "power"]),
    ("joint_law", &["tau", "n", "alpha", "power", "delta", "sigma", "r", "eta", "psi"]),
    ("dilution_power", &["alpha", "power", "tau", "eta", "psi"]),
    ("resize_fixed", &["n", "tau", "eta", "psi", "alpha", "power"]),
    ("resize_gsd", &["n", "tau", "eta", "psi", "alpha", "power", "rho_spend", "cap"]),
    ("curves", &[]),
];

pub(crate) fn parse<T: DeserializeOwned>(value: &Value) -> ApiResult<T> {
    serde_path_to_error::deserialize(value).map_err(ApiError::from_serde)
}

fn run<T: DeserializeOwned, R: Serialize>(params: &Value, op: fn(&T) -> ApiResult<R>) -> ApiResult<Value> {
    let request = parse::<T>(params)?;
    let response = op(&request)?;
    Ok(round_json(serde_json::to_value(response).expect("responses serialize")))
}

/// Runs the named operation on JSON parameters; the output is rounded to
/// the wire precision.
pub fn dispatch(operation: &str, params: &Value) -> ApiResult<Value> {
    match operation {
        "power_fraction" => run(params, power_fraction),
        "sample_size" => run(params, sample_size),
        "gsd_boundaries" => run(params, gsd_boundaries),
        "gsd_power" => run(params, gsd_power_op),
        "conditional_error" => run(params, conditional_error_op),
        "conditional_power" => run(params, conditional_power_op),
        "joint_law" => run(params, joint_law_op),
        "dilution_power" => run(params, dilution_power),
        "resize_fixed" => run(params, resize_fixed),
        "resize_gsd" => run(params, resize_gsd),
        "curves" => run::<CurvesRequest, _>(params, curve_grid),
        other => Err(ApiError::bad_request(
            "unknown_operation",
            format!("no operation named {other:?}"),
            Some("operation".into()),
        )),
    }
}

#[derive(Debug, Clone, Serialize)]
struct GridResponse {
    operation: String,
    axis: String,
    values: Vec<f64>,
    results: Vec<Value>,
}

/// Evaluates a [`ComputeRequest`], sweeping the grid axis when present.
pub fn compute(req: &ComputeRequest) -> ApiResult<Value> {
    let Some(grid) = &req.grid else {
        return dispatch(&req.operation, &req.parameters);
    };
    let scalars = OPERATIONS
        .iter()
        .find(|(name, _)| *name == req.operation)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            ApiError::bad_request(
                "unknown_operation",
                format!("no operation named {:?}", req.operation),
                Some("operation".into()),
            )
        })?;
    if !scalars.contains(&grid.axis.as_str()) {
        return Err(ApiError::bad_request(
            "invalid_parameter",
            format!("{:?} is not a scalar parameter of {}", grid.axis, req.operation),
            Some("grid.axis".into()),
        ));
    }
    let Value::Object(base) = &req.parameters else {
        return Err(ApiError::bad_request(
            "invalid_parameter",
            "parameters must be an object",
            Some("parameters".into()),
        ));
    };
    let results = grid
        .values
        .iter()
        .map(|&v| {
            let mut params = base.clone();
            params.insert(grid.axis.clone(), serde_json::json!(v));
            dispatch(&req.operation, &Value::Object(params))
        })
        .collect::<ApiResult<Vec<Value>>>()?;
    Ok(round_json(serde_json::to_value(GridResponse {
        operation: req.operation.clone(),
        axis: grid.axis.clone(),
        values: grid.values.clone(),
        results,
    })
    .expect("responses serialize")))
}

/// `z_{1−α}`, exposed for the text renderer of the CLI.
pub fn critical_value(alpha: f64) -> ApiResult<f64> {
    let a = prob("alpha", alpha)?;
    Ok(quantile(1.0 - a.value()))
}
