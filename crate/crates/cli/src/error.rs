use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or malformed flag or config value.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] tournament_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write output: {0}")]
    Output(String),

    /// Some simulated estimate disagrees with its quadrature value.
    #[error("{failures} of {checks} comparisons have |z| > {threshold} (max |z| = {max_z})")]
    OracleFailure {
        failures: usize,
        checks: usize,
        threshold: f64,
        max_z: f64,
    },
}

impl CliError {
    /// 0 success, 1 usage or validation, 2 non-convergence, 3 oracle failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(tournament_core::Error::NonConvergence { .. }) => 2,
            Self::OracleFailure { .. } => 3,
            _ => 1,
        }
    }
}
