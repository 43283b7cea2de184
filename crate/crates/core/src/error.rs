use thiserror::Error;

/// Errors produced anywhere in the solve / simulate / verify pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: String,
        got: String,
    },

    #[error("{what} is not symmetric (asymmetry {asymmetry:e})")]
    Asymmetry { what: String, asymmetry: f64 },

    #[error("invalid horizon: t0 = {t0} must be < T = {t_end}")]
    Horizon { t0: f64, t_end: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("invalid game spec: {0}")]
    InvalidSpec(String),

    #[error("time {s} outside horizon [{t0}, {t_end}]")]
    OutOfHorizon { s: f64, t0: f64, t_end: f64 },

    #[error("convexity violated: {what} has smallest eigenvalue {min_eigenvalue:e}")]
    ConvexityViolation { what: String, min_eigenvalue: f64 },

    #[error("singular matrix in {0}")]
    SingularMatrix(String),

    #[error("condition {condition} violated at s = {s} (smallest eigenvalue {margin:e})")]
    ConditionViolation {
        condition: String,
        s: f64,
        margin: f64,
    },

    #[error("case preconditions fail: {}", .0.join(", "))]
    CasePreconditions(Vec<String>),

    #[error("blow-up in {what} at s = {s}")]
    BlowUp { what: String, s: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(what: impl Into<String>, expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected: format!("{}x{}", expected.0, expected.1),
            got: format!("{}x{}", got.0, got.1),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 validation, 3 condition violation, 4 blow-up, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::Asymmetry { .. }
            | Error::Horizon { .. }
            | Error::NonFinite { .. }
            | Error::InvalidSpec(_)
            | Error::OutOfHorizon { .. }
            | Error::CasePreconditions(_)
            | Error::InsufficientData(_)
            | Error::Config(_)
            | Error::Json(_) => 2,
            Error::ConvexityViolation { .. }
            | Error::SingularMatrix(_)
            | Error::ConditionViolation { .. } => 3,
            Error::BlowUp { .. } => 4,
            Error::Io(_) => 5,
        }
    }

    /// Short machine-readable category printed alongside the exit code.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation",
            3 => "condition-violation",
            4 => "blow-up",
            _ => "io",
        }
    }
}
