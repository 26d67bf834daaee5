use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("region must contain at least one site")]
    EmptyRegion,

    #[error("sign-resolved tracking was not enabled for this state")]
    SignedModeDisabled,

    #[error("cannot sample from a quasi-probability distribution")]
    QuasiProbability,

    #[error("{0}")]
    Degenerate(String),

    #[error("every realization produced a non-finite value")]
    AllNonFinite,

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_site(site: usize, n: usize) -> Result<()> {
    if site >= n {
        Err(Error::SiteOutOfRange { site, n })
    } else {
        Ok(())
    }
}
