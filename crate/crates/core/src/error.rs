use thiserror::Error;

/// Errors raised by the library. Callers that need an exit status map
/// [`Error::is_input`] to "bad request" and everything else to "invariant".
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("window too small: {0}")]
    Window(String),

    #[error("compatibility violated on component {component}: defect {defect:.3e}")]
    Compatibility { component: usize, defect: f64 },

    /// `best` is the best iterate found (Minkowski offsets or transport weights).
    #[error("iteration limit reached after {iterations} steps (residual {residual:.3e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// True for errors caused by the caller's data rather than a broken invariant.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Window(_) | Error::Compatibility { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
