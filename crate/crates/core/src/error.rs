use std::fmt;

use thiserror::Error;

/// Finite-difference regime used to propagate the log-price at one variance node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Implicit in time, centred in space. Used when the variance is above the threshold.
    Implicit,
    /// Explicit in time, upwind in space. Used at or below the threshold.
    Explicit,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Implicit => f.write_str("implicit"),
            Regime::Explicit => f.write_str("explicit"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The operator for variance `v` is not a stochastic matrix. The grid or
    /// the regime threshold is misconfigured for this time step.
    #[error(
        "{regime} operator is not stochastic at v = {v:e} (alpha = {alpha:e}, beta = {beta:e})"
    )]
    StabilityViolation {
        regime: Regime,
        alpha: f64,
        beta: f64,
        v: f64,
    },

    #[error("tridiagonal elimination broke down at row {row}: pivot {pivot:e}")]
    PivotBreakdown { row: usize, pivot: f64 },

    #[error("degenerate variance lattice at node ({n}, {k}): up and down targets coincide")]
    DegenerateLattice { n: usize, k: usize },

    #[error("node ({n}, {k}) is outside a lattice with {n_steps} steps")]
    NodeOutOfRange { n: usize, k: usize, n_steps: usize },

    #[error("vector length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("convergence ratio undefined: the two finest prices are equal")]
    ZeroDenominator,

    #[error("hypotheses violated: {}", .0.join("; "))]
    HypothesisViolation(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
