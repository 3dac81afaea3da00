use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structure, coupler or pump description violates its invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The steady-state system has no unique solution.
    #[error("degenerate structure: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: {message} (achieved error {achieved:.3e}, requested {requested:.3e})")]
    Quadrature {
        message: String,
        achieved: f64,
        requested: f64,
    },

    #[error("root is not bracketed: g(lo) = {g_lo:.6e}, g(hi) = {g_hi:.6e}")]
    Bracket { g_lo: f64, g_hi: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("resonance triple violates energy conservation: |2wP - wS - wI| = {mismatch:.6e} rad/s > {tolerance:.6e} rad/s")]
    EnergyConservation { mismatch: f64, tolerance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A tensor-grid estimate failed to settle within the refinement budget.
    #[error("grid too coarse: relative change {change:.3e} after {levels} refinements")]
    GridTooCoarse { change: f64, levels: usize },
}

impl Error {
    /// True for errors that stem from numerical convergence rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::Bracket { .. }
                | Error::Fit(_)
                | Error::GridTooCoarse { .. }
                | Error::Degenerate(_)
        )
    }
}
