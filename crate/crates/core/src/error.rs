//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("negative base {base:e} raised to non-integer exponent {exponent}")]
    NegativePower { base: f64, exponent: f64 },

    #[error("non-Lipschitz regime: {0}")]
    NonLipschitz(String),

    #[error("degenerate cubic: leading coefficient is zero")]
    DegenerateCubic,

    #[error("no admissible non-trivial equilibrium: {0}")]
    NoAdmissibleEquilibrium(String),

    #[error("predicate does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("shape mismatch: got {got} samples, grid expects {expected}")]
    ShapeMismatch { got: usize, expected: usize },

    #[error("time step too large: exp({z}) overflows at mode index {mode}")]
    StepTooLarge { mode: usize, z: f64 },

    #[error("ETD2 step requires the nonlinear term of a previous step")]
    MissingHistory,

    #[error("solution blew up at t = {time} (first non-finite mode index {mode})")]
    BlowUp { time: f64, mode: usize },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
