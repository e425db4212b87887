use thiserror::Error;

/// Failures raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("composite dimension {dim} exceeds the configured limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("invalid mode index {index} for a {modes}-mode space")]
    InvalidMode { index: usize, modes: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("mode {mode}: resonator-drive detuning is zero")]
    SingularDetuning { mode: usize },

    #[error("mode {mode}: inconsistent frame frequencies ({detail})")]
    InconsistentFrame { mode: usize, detail: String },

    #[error("mode {mode}: dispersive detuning vanishes, expansion parameter undefined")]
    DispersiveSingularity { mode: usize },

    #[error("mode {mode}: |lambda| = {lambda:.4} is outside the perturbative range")]
    PerturbativeBreakdown { mode: usize, lambda: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "step size underflow at t = {t:.6} (h = {step:.3e}); \
         the system is stiff, try smaller cutoffs or an implicit method"
    )]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("steady-state iteration did not converge after {iterations} iterations (change {change:.3e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("Liouvillian null space is degenerate (second eigenvalue magnitude {second:.3e})")]
    DegenerateSteadyState { second: f64 },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::NonConvergence { .. }
                | Error::DegenerateSteadyState { .. }
                | Error::NumericalInconsistency(_)
                | Error::LinearAlgebra(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
