use thiserror::Error;

/// A parameter outside its allowed range. `field` uses the names of the
/// JSON parameter object (`N`, `d`, `V`, `kappa1`, `kappa2`, `hbar`, ...).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {field}: {message}")]
pub struct ParamError {
    pub field: &'static str,
    pub message: String,
}

impl ParamError {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Range(#[from] ParamError),

    #[error("mean field diverged at t = {t}: |alpha_{site}| = {amplitude:.3e} exceeds {limit:.3e}")]
    Divergence { t: f64, site: usize, amplitude: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("covariance at t = {t} is unphysical: min eig(C + i hbar Omega / 2) = {min_eigenvalue:.3e}")]
    Physicality { t: f64, min_eigenvalue: f64 },

    #[error("matrix is singular or not positive definite ({0})")]
    SingularMatrix(String),

    #[error("sampling grid incompatible with step: {0}")]
    Sampling(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Range(_) => "range",
            Error::Divergence { .. } => "divergence",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Physicality { .. } => "physicality",
            Error::SingularMatrix(_) => "singular_matrix",
            Error::Sampling(_) => "sampling",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
