use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ladder: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} needs {spins} spins, above the configured cap of {cap}")]
    DimensionCap {
        what: &'static str,
        spins: usize,
        cap: usize,
    },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("diagonalization did not converge: {0}")]
    Diagonalization(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("insufficient samples for {what}: need {needed}, found {found}")]
    InsufficientSamples {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("plateau reached at t = {t_end} before the fit onset t = {onset}")]
    PlateauBeforeOnset { onset: f64, t_end: f64 },

    #[error("singular regression: {0}")]
    SingularRegression(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("malformed series file {path}: {reason}")]
    Series { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
