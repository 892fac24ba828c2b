use thiserror::Error;

pub type Result<T> = std::result::Result<T, IdtError>;

#[derive(Debug, Error)]
pub enum IdtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("jump density is not Lévy-integrable: {0}")]
    NonIntegrableJumpDensity(String),
    #[error("triplet cannot be sampled: {0}")]
    NotSamplable(String),
    #[error("stable index {alpha} outside the admissible range {range}")]
    BadStableIndex { alpha: f64, range: &'static str },
    #[error("base grid ends at {available} but {required} is needed")]
    GridCoverage { required: f64, available: f64 },
    #[error("radial measure support not supported here: {0}")]
    UnsupportedMeasureSupport(String),
    #[error("base ensemble carries no explicit jump lists")]
    JumpsUnavailable,
    #[error("jump functional does not vanish at zero jump size (f({v}, 0) = {value})")]
    NonZeroAtOrigin { v: f64, value: f64 },
    #[error("kernel truncation too small: relative mass {relative_mass:e} beyond T exceeds {tolerance:e}")]
    TruncationTooSmall { relative_mass: f64, tolerance: f64 },
    #[error("covariance matrix not positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, jitter {jitter:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64, jitter: f64 },
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("no closed form for this kernel")]
    NoClosedForm,
    #[error("measure transform diverges: {0}")]
    DivergentTransform(String),
    #[error("rescaled time {time} exceeds path horizon {horizon}")]
    HorizonExceeded { time: f64, horizon: f64 },
    #[error("time {0} is not a grid point")]
    GridMismatch(f64),
    #[error("sample size {m} below minimum {min}")]
    SampleTooSmall { m: usize, min: usize },
    #[error("characteristic function magnitude {magnitude:.4} below floor {floor} at probe {probe:?}")]
    CfTooSmall { magnitude: f64, floor: f64, probe: Vec<f64> },
    #[error("functional is negative ({0}) on a probe")]
    NegativeFunctional(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IdtError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            IdtError::InvalidParameter(_) => "InvalidParameter",
            IdtError::InvalidGrid(_) => "InvalidGrid",
            IdtError::NonIntegrableJumpDensity(_) => "NonIntegrableJumpDensity",
            IdtError::NotSamplable(_) => "NotSamplable",
            IdtError::BadStableIndex { .. } => "BadStableIndex",
            IdtError::GridCoverage { .. } => "GridCoverage",
            IdtError::UnsupportedMeasureSupport(_) => "UnsupportedMeasureSupport",
            IdtError::JumpsUnavailable => "JumpsUnavailable",
            IdtError::NonZeroAtOrigin { .. } => "NonZeroAtOrigin",
            IdtError::TruncationTooSmall { .. } => "TruncationTooSmall",
            IdtError::NotPositiveSemidefinite { .. } => "NotPositiveSemidefinite",
            IdtError::QuadratureFailure(_) => "QuadratureFailure",
            IdtError::NoClosedForm => "NoClosedForm",
            IdtError::DivergentTransform(_) => "DivergentTransform",
            IdtError::HorizonExceeded { .. } => "HorizonExceeded",
            IdtError::GridMismatch(_) => "GridMismatch",
            IdtError::SampleTooSmall { .. } => "SampleTooSmall",
            IdtError::CfTooSmall { .. } => "CfTooSmall",
            IdtError::NegativeFunctional(_) => "NegativeFunctional",
            IdtError::Json(_) => "Json",
            IdtError::Io(_) => "Io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> IdtError {
    IdtError::InvalidParameter(msg.into())
}
