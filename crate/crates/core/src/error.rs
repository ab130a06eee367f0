use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative method ran out of iterations. The best iterate found is
    /// kept so callers can decide whether it is usable.
    #[error("convergence failure after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// `exp(lambda * x)` would overflow. The potential is bounded by theory,
    /// so hitting this means the queue has grown past anything a correct run
    /// can produce.
    #[error("potential overflow guard: lambda * x = {0:e} exceeds 700")]
    Overflow(f64),

    /// A numerical routine gave up without an iteration count to report.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no feasible point: {0}")]
    Infeasible(String),

    #[error("destination unreachable from source")]
    NoPath,

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("comparator solver failed at round {round}: {source}")]
    Solver {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
