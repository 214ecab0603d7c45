//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::integrator::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state carried a NaN or infinite amplitude.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Model parameters or schedules cannot be evaluated as configured.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A documented invariant was violated while validating input.
    #[error("validation error: {0}")]
    Validation(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dual-channel formula was asked to describe a single open channel.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// Channel ratio R < 0 has no coherent-population-trapping solution.
    #[error("no CPT solution for R = {0} < 0")]
    NoCptSolution(f64),

    #[error("unsupported matrix size {0} (maximum is {1})")]
    UnsupportedSize(usize, usize),

    /// Finite-difference evaluation hit a non-finite right-hand side.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Adaptive step size fell below the configured minimum.
    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow {
        t: f64,
        step: f64,
        partial: Box<Trajectory>,
    },

    /// The state became non-finite; `last_good_t` is the last accepted time.
    #[error("divergence after t = {last_good_t}")]
    Divergence {
        last_good_t: f64,
        partial: Box<Trajectory>,
    },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown scenario '{name}' (registered: {registered})")]
    UnknownScenario { name: String, registered: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::UnknownScenario { .. }
            | Error::Domain(_)
            | Error::DegenerateChannel(_)
            | Error::NoCptSolution(_)
            | Error::Configuration(_) => 1,
            _ => 2,
        }
    }
}
