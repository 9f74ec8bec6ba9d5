use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed coupling graph; the message names the offending link or site.
    #[error("invalid coupling graph: {0}")]
    InvalidGraph(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cannot compose schedules: {0}")]
    Composition(String),

    #[error("step {step} exceeds the smallest gap {gap} between schedule breakpoints")]
    Step { step: f64, gap: f64 },

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("system of {n} sites exceeds the full-space limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error(
        "level matching is ambiguous near t = {t}; refine the grid to a spacing of at most {suggested_spacing:.3e}"
    )]
    GridTooCoarse { t: f64, suggested_spacing: f64 },

    #[error("overlap ambiguity across the jump at t = {t}: the bias change is not sudden relative to the level structure")]
    AmbiguousJump { t: f64 },

    #[error("no path between blocs {from} and {to}")]
    NoPath { from: usize, to: usize },

    #[error("compile error: {0}")]
    Compile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
