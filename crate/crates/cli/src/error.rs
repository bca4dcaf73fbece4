use serde::Serialize;

/// Structured error shared by the service and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub parameter: Option<String>,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>, parameter: Option<String>) -> Self {
        ApiError {
            status: 400,
            code: code.into(),
            message: message.into(),
            parameter,
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: 404,
            code: "not_found".into(),
            message: message.into(),
            parameter: None,
        }
    }

    /// Input rejected before reaching the core (usage-level problem).
    pub fn is_usage(&self) -> bool {
        self.status == 400 || self.status == 404
    }

    pub(crate) fn from_serde(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let parameter = (path != ".").then_some(path);
        ApiError::bad_request("invalid_parameter", err.into_inner().to_string(), parameter)
    }
}

impl From<trial_resizer::Error> for ApiError {
    fn from(err: trial_resizer::Error) -> Self {
        ApiError {
            status: 422,
            code: err.code().into(),
            message: err.to_string(),
            parameter: err.parameter().map(str::to_owned),
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.parameter {
            Some(p) => write!(f, "{} ({}): {}", self.code, p, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for ApiError {}
