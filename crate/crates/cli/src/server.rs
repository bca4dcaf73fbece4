//! HTTP routes over the shared operations.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::api::{self, ApiResult, ComputeRequest, Estimator};
use crate::error::ApiError;
use crate::format::round_json;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BIND: IpAddr = IpAddr::V4(Ipv4Addr::LOCALHOST);
pub const PORT_ENV: &str = "TRIAL_RESIZER_PORT";
pub const BIND_ENV: &str = "TRIAL_RESIZER_BIND";
pub const CORS_ENV: &str = "TRIAL_RESIZER_CORS_ORIGINS";

/// JSON routes and the operation each one runs.
pub const ROUTES: &[(&str, &str)] = &[
    ("/v1/power/fraction", "power_fraction"),
    ("/v1/design/sample-size", "sample_size"),
    ("/v1/gsd/boundaries", "gsd_boundaries"),
    ("/v1/gsd/power", "gsd_power"),
    ("/v1/gsd/conditional-error", "conditional_error"),
    ("/v1/gsd/conditional-power", "conditional_power"),
    ("/v1/dilution/joint-law", "joint_law"),
    ("/v1/dilution/power", "dilution_power"),
    ("/v1/resize/fixed", "resize_fixed"),
    ("/v1/resize/gsd", "resize_gsd"),
    ("/v1/curves", "curves"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorsOrigins {
    Any,
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub cors: CorsOrigins,
}

impl ServeConfig {
    /// Flags win over the environment, which wins over the defaults.
    pub fn resolve(
        port: Option<u16>,
        bind: Option<IpAddr>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, String> {
        let port = match port {
            Some(p) => p,
            None => match env(PORT_ENV) {
                Some(v) => v.trim().parse().map_err(|_| format!("{PORT_ENV}={v:?} is not a port"))?,
                None => DEFAULT_PORT,
            },
        };
        let bind = match bind {
            Some(b) => b,
            None => match env(BIND_ENV) {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| format!("{BIND_ENV}={v:?} is not an IP address"))?,
                None => DEFAULT_BIND,
            },
        };
        let cors = match env(CORS_ENV) {
            Some(v) if v.trim() != "*" => CorsOrigins::List(
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect(),
            ),
            _ => CorsOrigins::Any,
        };
        Ok(ServeConfig { bind, port, cors })
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::UNPROCESSABLE_ENTITY);
        (status, Json(self)).into_response()
    }
}

fn parse_body(body: &[u8]) -> ApiResult<Value> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(json!({}));
    }
    serde_json::from_slice(body).map_err(|e| {
        ApiError::bad_request(
            "invalid_json",
            format!("request body is not valid JSON: {e}"),
            Some(format!("line {} column {}", e.line(), e.column())),
        )
    })
}

async fn blocking<F>(f: F) -> Response
where
    F: FnOnce() -> ApiResult<Value> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(_) => ApiError {
            status: 422,
            code: "numerical_error".into(),
            message: "the computation did not complete".into(),
            parameter: None,
        }
        .into_response(),
    }
}

async fn run_operation(State(op): State<&'static str>, body: Bytes) -> Response {
    blocking(move || api::dispatch(op, &parse_body(&body)?)).await
}

async fn compute(body: Bytes) -> Response {
    blocking(move || {
        let req: ComputeRequest = api::parse(&parse_body(&body)?)?;
        api::compute(&req)
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShortTermQuery {
    #[serde(default)]
    estimator: Estimator,
    #[serde(default)]
    n_planned: Option<u64>,
}

async fn shortterm(query: Result<Query<ShortTermQuery>, axum::extract::rejection::QueryRejection>, body: Bytes) -> Response {
    let Query(q) = match query {
        Ok(q) => q,
        Err(e) => return ApiError::bad_request("invalid_parameter", e.body_text(), Some("query".into())).into_response(),
    };
    blocking(move || {
        let res = api::shortterm_estimate(&body, q.estimator, q.n_planned)?;
        Ok(round_json(serde_json::to_value(res).expect("responses serialize")))
    })
    .await
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError {
        status: 405,
        code: "method_not_allowed".into(),
        message: "method not allowed on this endpoint".into(),
        parameter: None,
    }
}

fn cors_layer(origins: &CorsOrigins) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers(Any);
    match origins {
        CorsOrigins::Any => layer.allow_origin(Any),
        CorsOrigins::List(list) => layer.allow_origin(AllowOrigin::list(
            list.iter().filter_map(|o| HeaderValue::from_str(o).ok()),
        )),
    }
}

pub fn router(cors: &CorsOrigins) -> Router {
    let mut app = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/compute", post(compute))
        .route("/v1/shortterm/estimate", post(shortterm));
    for &(path, op) in ROUTES {
        app = app.route(path, post(run_operation).with_state(op));
    }
    app.fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors_layer(cors))
}

pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(&config.cors))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
