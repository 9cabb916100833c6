use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code classes:
/// `Validation`/`Parse`/`Config` are configuration errors, the rest are
/// runtime/numeric errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input (bad index, empty hyperedge, shape mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed file contents.
    #[error("parse error: {0}")]
    Parse(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An iterative solver hit its iteration cap before meeting its stop rule.
    #[error("solver did not converge: last residual {residual:.3e}")]
    SolverStall { residual: f64 },

    /// Non-finite values or an otherwise undefined numeric result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Multiset decoding failed (roots not real/consistent within tolerance).
    #[error("decode error: residual {residual:.3e}")]
    Decode { residual: f64 },

    /// A score with an empty domain (e.g. homophily with no neighbors at all).
    #[error("undefined score: {0}")]
    Undefined(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad inputs/configuration rather than runtime
    /// numerics; the CLI maps these to exit code 2 and the rest to 3.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Parse(_) | Error::Config(_)
        )
    }
}
