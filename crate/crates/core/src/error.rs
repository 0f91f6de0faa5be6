use thiserror::Error;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Inputs outside the physical domain of the model.
    Domain,
    /// A numerical procedure could not meet its contract.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("frequency {omega} is at or below the cutoff {cutoff} of the requested mode")]
    BelowCutoff { omega: f64, cutoff: f64 },
    #[error("mode {0} is not supported by a rectangular waveguide")]
    UnsupportedMode(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("emitters {0} and {1} coincide")]
    CoincidentEmitters(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not a valid density matrix: {0}")]
    NonPhysicalState(String),
    #[error("negative Lindblad rate {rate:.3e} (index {index})")]
    NegativeRate { index: usize, rate: f64 },
    #[error("observable starts at zero; no decay rate can be defined")]
    ZeroInitial,
    #[error("integration failed to meet its tolerance at t = {t}: {reason}")]
    ToleranceFailure { t: f64, reason: String },
    #[error("generator kernel has dimension {dimension}; the steady state is not unique")]
    DegenerateKernel {
        dimension: usize,
        /// Kernel basis, each entry a `d x d` operator normalised to unit Frobenius norm.
        basis: Vec<crate::CMatrix>,
        /// Eigenvectors of the collective decay matrix with vanishing rate.
        dark_modes: Vec<Vec<f64>>,
    },
    #[error("correlation has not reached its asymptotic floor: residual {residual:.3e} exceeds {cutoff:.3e}")]
    HorizonTooShort { residual: f64, cutoff: f64 },
    #[error("malformed generator dump: {0}")]
    MalformedDump(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BelowCutoff { .. }
            | Error::UnsupportedMode(_)
            | Error::InvalidParameter { .. }
            | Error::CoincidentEmitters(..)
            | Error::DimensionMismatch { .. }
            | Error::NonPhysicalState(_)
            | Error::NegativeRate { .. }
            | Error::ZeroInitial
            | Error::MalformedDump(_) => ErrorKind::Domain,
            Error::ToleranceFailure { .. }
            | Error::DegenerateKernel { .. }
            | Error::HorizonTooShort { .. } => ErrorKind::Numerical,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
