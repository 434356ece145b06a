//! Error type shared across the simulation library.

use std::fmt;

/// Everything that can go wrong while validating parameters or running a
/// simulation. Validation failures carry the offending key so front ends can
/// point at the bad config entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed its validity constraint.
    InvalidParam { field: String, message: String },
    /// Spin-drive detuning is zero, so the dispersive shift is undefined.
    DegenerateDetuning,
    /// The two populations to discriminate coincide.
    DegenerateDiscrimination,
    /// The adaptive integrator drove the step size below the resolvable
    /// limit; usually means the problem is too stiff for an explicit scheme.
    StepSizeUnderflow { t: f64 },
    /// A state component became NaN or infinite during integration.
    NonFinite { component: &'static str, t: f64 },
    /// The dispersive fixed-point iteration did not converge; the system is
    /// likely outside the validity range of the dispersive approximation.
    NonConvergence { iterations: usize, residual: f64 },
    /// A query was made outside the valid domain.
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    /// The readout signal vanished over the whole window, so the inverse
    /// readout fidelity is unbounded.
    EmptySignal { detail: String },
    /// A scaling fit could not be performed.
    FitError { message: String },
    /// The phase-noise table could not be parsed or fails its invariants.
    TableError { message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam { field, message } => {
                write!(f, "invalid parameter `{field}`: {message}")
            }
            Error::DegenerateDetuning => {
                write!(f, "spin-drive detuning is zero: dispersive shift undefined")
            }
            Error::DegenerateDiscrimination => {
                write!(f, "p0 and p0' coincide: nothing to discriminate")
            }
            Error::StepSizeUnderflow { t } => {
                write!(f, "integrator step size underflow at t = {t:.6e} s")
            }
            Error::NonFinite { component, t } => {
                write!(f, "non-finite value in `{component}` at t = {t:.6e} s")
            }
            Error::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "self-consistent solve did not converge after {iterations} iterations \
                 (last residual {residual:.3e})"
            ),
            Error::OutOfRange {
                what,
                value,
                min,
                max,
            } => write!(
                f,
                "{what} = {value:.6e} outside valid range [{min:.6e}, {max:.6e}]"
            ),
            Error::EmptySignal { detail } => {
                write!(f, "readout signal is zero over the whole window: {detail}")
            }
            Error::FitError { message } => write!(f, "scaling fit failed: {message}"),
            Error::TableError { message } => write!(f, "phase-noise table: {message}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidParam {
        field: field.to_string(),
        message: message.into(),
    }
}
