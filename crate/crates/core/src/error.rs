//! Error type shared by the solvers and simulators.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Parameter validation failed; one message per offending field.
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    /// A structurally invalid argument (wrong curve kind, bad grid, ...).
    #[error("bad input: {0}")]
    BadInput(String),

    /// Policy iteration did not meet its tolerance within the sweep cap.
    #[error("policy iteration failed to converge: {iterations} sweeps, last sup-change {last_change:e}")]
    NonConvergence { iterations: usize, last_change: f64 },

    /// The converged primal iterate lost convexity (scheme violation).
    #[error("solution lost convexity at grid index {index} (second difference {value:e})")]
    ConvexityLost { index: usize, value: f64 },

    /// Policy-iteration sup-changes grew by more than the allowed factor.
    #[error("policy iteration diverging: sup-change grew from {previous:e} to {current:e}")]
    IterationDiverging { previous: f64, current: f64 },

    /// The M-doubling ladder stopped contracting.
    #[error("barrier ladder failed to contract: gap {gap:e} at M = {m_barrier} did not shrink (previous {previous:e})")]
    LadderStalled { m_barrier: f64, gap: f64, previous: f64 },

    /// The dual continuation region is empty or degenerate.
    #[error("barrier M = {m_barrier} must exceed 1/lambda = {threshold} for a non-degenerate continuation region")]
    DegenerateContinuation { m_barrier: f64, threshold: f64 },

    /// The dual ODE produced a non-concave curvature along a shot.
    #[error("concavity breakdown in dual shot at y = {y}")]
    ConcavityBreakdown { y: f64 },

    /// A dual shot ran past the cap without the slope reaching zero.
    #[error("no pasting point below y = {y_cap}: slope never reached zero")]
    NoPastingPoint { y_cap: f64 },

    /// The bracketing scan found no sign change for the pasting value.
    #[error("degenerate continuation region: g(y_stop) - 1 kept one sign over {scanned} scan trials")]
    NoBracket { scanned: usize },

    /// A transform or policy query landed outside the stored grid.
    #[error("query z = {z} outside curve domain [{lower}, {upper}] (extrapolation refused)")]
    OutOfDomain { z: f64, lower: f64, upper: f64 },

    /// Dual curve slopes do not span the range required by the transform.
    #[error("dual curve slopes span [{min_slope}, {max_slope}], need [0, {need}]")]
    SlopeRange { min_slope: f64, max_slope: f64, need: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized artifact failed to parse.
    #[error("parse error in {context} line {line}: {message}")]
    Parse { context: String, line: usize, message: String },
}
