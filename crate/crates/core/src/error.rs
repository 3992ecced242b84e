use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton matrix is singular to working precision (condition number {cond:e})")]
    SingularJacobian { cond: f64 },
    #[error("truncation M={requested} is smaller than the wave truncation M={wave}")]
    TruncationTooSmall { requested: usize, wave: usize },
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),
    #[error("branch continuation ambiguous at xi={xi}: best overlap {overlap}")]
    BranchCrossing { xi: f64, overlap: f64 },
    #[error("shift i*{mu} lies on the spectrum (smallest singular value {sigma:e})")]
    SingularShift { mu: f64, sigma: f64 },
    #[error("grid of {n_grid} points is not divisible by N={n}")]
    GridMismatch { n_grid: usize, n: usize },
    #[error("window leak {leak:e} exceeds threshold at t={t}")]
    WindowLeak { leak: f64, t: f64 },
    #[error("matrix exponential is ill-conditioned: {0}")]
    IllConditionedExponential(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("stage `{stage}` failed: {message}")]
    StageFailure { stage: String, message: String },
    #[error("hash mismatch for {file}: manifest has {expected}, file has {found}")]
    HashMismatch {
        file: String,
        expected: String,
        found: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
