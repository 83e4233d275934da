use thiserror::Error;

/// Errors raised by the solvers and model routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Zero or sign-changing shear, for which stationary states are not
    /// unique and the accumulated shear cannot be inverted.
    #[error("degenerate shear: {0}")]
    DegenerateShear(String),

    #[error("accumulated shear {value} is outside the invertible range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} above tolerance {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error(
        "time step {step} resolves only {samples} samples in induction window {window} (need at least {required})"
    )]
    WindowResolution {
        step: f64,
        window: usize,
        samples: usize,
        required: usize,
    },

    #[error("grid geometry: {0}")]
    Geometry(String),

    #[error("CFL number {cfl} exceeds 1")]
    CflViolation { cfl: f64 },

    #[error("negative shear rate {0} fed to the advection step")]
    NegativeRate(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("no negative root of the rate equation found for omega = {omega} on [{scan_lo}, {scan_hi}]")]
    NoRootFound { omega: f64, scan_lo: f64, scan_hi: f64 },

    #[error("kernel step {step} too coarse for delay {omega} (need step <= omega/32)")]
    KernelResolution { omega: f64, step: f64 },

    #[error("variation-of-constants and direct stepping disagree by {gap:e} (tolerance {tolerance:e})")]
    Discrepancy { gap: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
