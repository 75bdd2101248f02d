use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutogradError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("state error: {0}")]
    State(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, AutogradError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(AutogradError::Shape(msg.into()))
}
