use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{what}: linear solve failed (residual {residual:e})")]
    Solver { what: &'static str, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("blow-up at t = {t}: {quantity} = {value:e}")]
    BlowUp {
        t: f64,
        quantity: &'static str,
        value: f64,
    },
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("no plateau reached: {0}")]
    NoPlateau(String),
    #[error("no scaling region found: {0}")]
    NoScalingRegion(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Shape { .. } => "shape",
            Error::Solver { .. } => "solver",
            Error::Precondition(_) => "precondition",
            Error::BlowUp { .. } => "blow_up",
            Error::Incompatible(_) => "incompatible",
            Error::NoPlateau(_) => "no_plateau",
            Error::NoScalingRegion(_) => "no_scaling_region",
            Error::Config { .. } => "config",
            Error::Parameter(_) => "parameter",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
