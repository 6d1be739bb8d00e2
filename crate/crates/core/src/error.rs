use alloc::string::String;

/// Errors raised by the pricing, calibration and lattice routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("frequency outside the analyticity strip: {0}")]
    Domain(String),
    #[error("exponential moment does not exist: {0}")]
    MomentExplosion(String),
    #[error("degenerate specification: {0}")]
    DegenerateSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("strike outside the truncated support: {0}")]
    Range(String),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("series are not aligned: {0}")]
    MisalignedSeries(String),
    #[error("date ranges do not intersect")]
    EmptyIntersection,
    #[error("degenerate lattice step: {0}")]
    DegenerateStep(String),
    #[error("zero one-period growth factor at step {0}")]
    ZeroGrowthFactor(usize),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("finite-difference step too small: {0}")]
    StepTooSmall(String),
    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

impl Error {
    /// Variant name, for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "InvalidModel",
            Error::Domain(_) => "Domain",
            Error::MomentExplosion(_) => "MomentExplosion",
            Error::DegenerateSpec(_) => "DegenerateSpec",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Config(_) => "Config",
            Error::Range(_) => "Range",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::InsufficientData(_) => "InsufficientData",
            Error::MisalignedSeries(_) => "MisalignedSeries",
            Error::EmptyIntersection => "EmptyIntersection",
            Error::DegenerateStep(_) => "DegenerateStep",
            Error::ZeroGrowthFactor(_) => "ZeroGrowthFactor",
            Error::NoRoot(_) => "NoRoot",
            Error::NonFinite(_) => "NonFinite",
            Error::Consistency(_) => "Consistency",
            Error::StepTooSmall(_) => "StepTooSmall",
            Error::StepTooLarge(_) => "StepTooLarge",
        }
    }
}
