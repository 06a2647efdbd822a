use chimera_core::io::IoError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] chimera_core::Error),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error("{} of {total} seeds failed: {failed:?}", failed.len())]
    PartialSweep { failed: Vec<u64>, total: usize },
}

impl From<chimera_core::ParamError> for CliError {
    fn from(e: chimera_core::ParamError) -> Self {
        CliError::Numerical(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io { path: String::new(), source: e })
    }
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for numerical failures,
    /// 4 for a sweep with failed seeds, 1 for file-system trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(chimera_core::Error::Range(_)) => 2,
            CliError::Numerical(_) => 3,
            CliError::PartialSweep { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::PartialSweep { .. } => "partial_sweep",
        }
    }

    /// The machine-readable report printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut report = json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        });
        if let CliError::PartialSweep { failed, .. } = self {
            report["error"]["failed_seeds"] = json!(failed);
        }
        report
    }
}
