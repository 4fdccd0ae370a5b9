//! Unified error type for the verification core.

use alloc::string::String;

/// Everything that can go wrong across the matrix, operator, grid, and
/// equation layers. Variants carry the diagnostics a caller needs to decide
/// whether the failure is a bug (argument/dimension), a numeric budget breach
/// (fit residual, eigensolve stall), or a legitimate mathematical outcome
/// (`NotHyperbolicAt` for operators without real radial roots).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolve did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    /// The radial polynomial of the probed matrix has non-real roots. This is
    /// a result, not a crash: some catalog operators are hyperbolic only on a
    /// thin set.
    #[error("operator is not hyperbolic at the probed matrix (max imaginary magnitude {max_imag:e})")]
    NotHyperbolicAt { max_imag: f64 },

    #[error("numeric fit residual {residual:e} exceeds budget {budget:e}")]
    FitResidual { residual: f64, budget: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
