use thiserror::Error;

/// Errors shared by the solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fold m={m} is not supported: (4+∂θθ) is singular at wavenumber ±2 unless m ≥ 3")]
    FoldTooSmall { m: u32 },

    #[error("grid size {n} must be a power of two and at least 8")]
    BadGridSize { n: usize },

    #[error("value count {got} does not match grid size {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("fold mismatch: data carries m={data}, argument requests m={arg}")]
    FoldMismatch { data: u32, arg: u32 },

    #[error("marker ordering violated at t={t} near index {index}: characteristics crossed, which signals numerical failure")]
    MarkersCrossed { t: f64, index: usize },

    #[error("time step {dt:e} exceeds the CFL bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("invalid jump profile: {reason}")]
    BadProfile { reason: String },

    #[error("interval length {len} outside (0, {max}) where the sine representation is well posed")]
    IntervalLength { len: f64, max: f64 },

    #[error("levels do not strictly alternate in sign; the only steady state for them is zero")]
    NoNontrivialState,

    #[error("Newton iteration failed to converge after {iters} steps (residual {residual:e})")]
    NewtonDivergence { iters: usize, residual: f64 },

    #[error("shooting bracket failed: {reason}")]
    BracketFailure { reason: String },

    #[error("path left the positive cone: y ≤ 0 at t={t}")]
    NonPositiveY { t: f64 },

    #[error("classification undecided: {reason}")]
    Undecided { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
