use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("value is rational to working precision: {0}")]
    NearRational(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("not enough digits: {0}")]
    DepthExceeded(String),
    #[error("invalid digit stream: {0}")]
    InvalidDigits(String),
    #[error("orbit escaped: {0}")]
    EscapeDetected(String),
    #[error("partial Brjuno sums do not settle: {0}")]
    NonBrjunoSuspected(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("no cycle found: {0}")]
    NoCycleFound(String),
    #[error("zero argument: {0}")]
    ZeroArgument(String),
    #[error("pole argument: {0}")]
    PoleArgument(String),
    #[error("Fatou chart diverged: {0}")]
    ChartDiverged(String),
    #[error("outside regime: {0}")]
    OutsideRegime(String),
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    #[error("no return to strip: {0}")]
    NoReturn(String),
    #[error("cache entry corrupt: {0}")]
    CacheCorrupt(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NearRational(_) => "NearRational",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::DepthExceeded(_) => "DepthExceeded",
            Error::InvalidDigits(_) => "InvalidDigits",
            Error::EscapeDetected(_) => "EscapeDetected",
            Error::NonBrjunoSuspected(_) => "NonBrjunoSuspected",
            Error::NewtonDiverged(_) => "NewtonDiverged",
            Error::NoCycleFound(_) => "NoCycleFound",
            Error::ZeroArgument(_) => "ZeroArgument",
            Error::PoleArgument(_) => "PoleArgument",
            Error::ChartDiverged(_) => "ChartDiverged",
            Error::OutsideRegime(_) => "OutsideRegime",
            Error::OutsideDomain(_) => "OutsideDomain",
            Error::NoReturn(_) => "NoReturn",
            Error::CacheCorrupt(_) => "CacheCorrupt",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
