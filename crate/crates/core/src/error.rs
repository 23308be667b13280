use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("squeezing level must be non-negative, got {0} dB")]
    NegativeDecibel(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular network system at sideband offset {offset} rad/s")]
    SingularSystem { offset: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("port {port} of component `{component}` is already connected")]
    PortInUse { component: String, port: usize },

    #[error("no such port: {0}")]
    UnknownPort(String),

    #[error("missing transfer for input `{0}`")]
    MissingTransfer(String),

    #[error("no parameters beat the unsqueezed noise (best ratio {best})")]
    NoImprovement { best: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
