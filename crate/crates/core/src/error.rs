use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("states or kernels live on different grids")]
    GridMismatch,

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{operation} does not support the `{kind}` action")]
    UnsupportedAction {
        kind: &'static str,
        operation: &'static str,
    },

    #[error("action evaluation is not finite at x = {x:?}, y = {y:?}")]
    Evaluation { x: Vec<f64>, y: Vec<f64> },

    /// The unitarity deviation had no interior minimum over the amplitude
    /// bracket. `scanned` holds `(|A|, deviation)` pairs.
    #[error("amplitude calibration found no interior minimum over {} scanned values", scanned.len())]
    CalibrationFailed { scanned: Vec<(f64, f64)> },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("packet envelope reaches the boundary margin at step {step}")]
    BoundaryViolation { step: usize },

    #[error("root finding failed: {0}")]
    Solver(String),
}
