use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("finite-difference step {step:e} underflows relative to |r| = {scale:e}")]
    DegenerateStep { step: f64, scale: f64 },

    #[error("coincident points: r == r' ({context})")]
    CoincidentPoints { context: String },

    #[error("point outside the provider domain: {0}")]
    OutOfDomain(String),

    #[error("Green's tensor is singular at zero frequency; evaluate omega^2 G instead")]
    SingularFrequency,

    #[error("extrapolation did not converge: {0}")]
    NonConvergent(String),

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFail(String),

    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("regime violation: ratio {ratio} exceeds {limit}")]
    RegimeViolation { ratio: f64, limit: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unknown quantity kind: {0}")]
    UnknownQuantityKind(String),

    #[error("invalid input at {field}: {reason}")]
    InvalidInput { field: String, reason: String },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergent(_)
                | Error::QuadratureFail(_)
                | Error::ImaginaryResidue { .. }
                | Error::DegenerateStep { .. }
        )
    }

    /// Stable short name used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateStep { .. } => "DegenerateStep",
            Error::CoincidentPoints { .. } => "CoincidentPoints",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::SingularFrequency => "SingularFrequency",
            Error::NonConvergent(_) => "NonConvergent",
            Error::ImaginaryResidue { .. } => "ImaginaryResidue",
            Error::QuadratureFail(_) => "QuadratureFail",
            Error::DimensionCap { .. } => "DimensionCap",
            Error::RegimeViolation { .. } => "RegimeViolation",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::UnknownQuantityKind(_) => "UnknownQuantityKind",
            Error::InvalidInput { .. } => "InvalidInput",
        }
    }
}
