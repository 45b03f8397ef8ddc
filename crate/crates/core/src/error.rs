use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("first channel tap underflows to zero for {link} (D = {diffusion:e}, d = {distance:e}, Ts = {symbol_duration:e})")]
    UnusableLink {
        link: String,
        diffusion: f64,
        distance: f64,
        symbol_duration: f64,
    },

    #[error("channel taps are all zero")]
    ZeroTaps,

    #[error("sequence length mismatch: {decisions} decisions vs {truth} reference bits")]
    LengthMismatch { decisions: usize, truth: usize },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
