use thiserror::Error;

/// Failures raised by grid construction, assembly, solves and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: L/dx = {ratio:.2} but at least 50 is required")]
    GridTooCoarse { ratio: f64 },

    #[error("support layout violation: {0}")]
    LayoutViolation(String),

    #[error("grid mismatch: expected {expected} nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("operator tag {0} cannot carry an absorber")]
    BadTag(String),

    #[error("shifted operator is numerically singular at lambda = {lambda_re} + {lambda_im}i (condition estimate {condition:.3e})")]
    NearSingular {
        lambda_re: f64,
        lambda_im: f64,
        condition: f64,
    },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate:.6e}, gap estimate {gap:.3e})")]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        gap: f64,
    },

    #[error("absorber stability check failed: relative change {relative_change:.3e} exceeds {tolerance:.1e}")]
    Unstable {
        relative_change: f64,
        tolerance: f64,
    },

    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),

    #[error("Neumann series not convergent: |E - lambda| * |R(E)| = {ratio:.3}")]
    Divergent { ratio: f64 },

    #[error("energy drift {drift:.3e} exceeds {tolerance:.1e}; refine dt")]
    EnergyDrift { drift: f64, tolerance: f64 },

    #[error("phase grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("no seeds on the energy shell: {0}")]
    EmptyShell(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
