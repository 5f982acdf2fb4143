use thiserror::Error;

#[derive(Debug, Error)]
pub enum SftError {
    /// An argument lies outside the range an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),
    /// A geometric construction needs a larger host cube.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    /// The requested computation exceeds a fixed enumeration or memory budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    /// A hypothesis of a covering construction fails for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SftError {
    /// Short machine-readable tag used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            SftError::Domain(_) => "domain",
            SftError::Degenerate(_) => "degenerate",
            SftError::Resource(_) => "resource",
            SftError::Precondition(_) => "precondition",
            SftError::Format(_) => "format",
            SftError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, SftError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SftError::Domain(msg.into()))
}
