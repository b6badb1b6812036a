use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("mass matrix is ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in `{signal}` at tick {tick}")]
    NonFinite { signal: String, tick: usize },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("concurrent session missed {missed} of {total} control ticks")]
    DeadlineMiss { missed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error stems from bad input rather than from the
    /// numerics or the closed loop.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::Config(_)
                | Error::Usage(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
