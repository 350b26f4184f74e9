use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An identity that must hold exactly failed (e.g. a vanishing
    /// resonance denominator with nonzero prefactor).
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("blow-up at t = {time}: L2 norm grew by a factor {ratio}")]
    BlowUp { time: f64, ratio: f64 },
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
