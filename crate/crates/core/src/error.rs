use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent or invalid parameters (dimension mismatches, bad values).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A parameter that appears as a divisor is zero.
    #[error("singular parameter: {0}")]
    SingularParameter(String),

    /// Argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (sample grids, matrices, certificates).
    #[error("input error: {0}")]
    Input(String),

    /// Invalid run or simulation configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The simulation produced a non-finite value.
    #[error("simulation diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// A fitting window holds too few or nonpositive samples.
    #[error("window error: {0}")]
    Window(String),

    /// The SDP solver did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
