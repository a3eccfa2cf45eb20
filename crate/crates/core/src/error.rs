use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("water depth vanishes: {0}")]
    Depth(String),
    #[error("body touches the bottom: {0}")]
    BottomContact(String),
    #[error("added-mass matrix is singular or indefinite: {0}")]
    SingularAddedMass(String),
    #[error("incompatible data: {0}")]
    Compatibility(String),
    #[error("transmission conditions violated: {0}")]
    Transmission(String),
    #[error("characteristics cross at t = {time}, x = {position}")]
    Shock { time: f64, position: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Events that end a run mid-flight (as opposed to rejected input).
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            Error::Depth(_) | Error::BottomContact(_) | Error::Shock { .. } | Error::SingularAddedMass(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Resolution(_) => "resolution",
            Error::Depth(_) => "depth",
            Error::BottomContact(_) => "bottom_contact",
            Error::SingularAddedMass(_) => "singular_added_mass",
            Error::Compatibility(_) => "compatibility",
            Error::Transmission(_) => "transmission",
            Error::Shock { .. } => "shock",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
