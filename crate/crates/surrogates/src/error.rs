use thiserror::Error;

pub type Result<T> = std::result::Result<T, SurrogateError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("training diverged at epoch {epoch} with learning rate {learning_rate}: loss {loss}")]
    Divergence { epoch: usize, learning_rate: f64, loss: f64 },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl SurrogateError {
    pub fn is_numeric(&self) -> bool {
        matches!(self, SurrogateError::Divergence { .. })
    }
}

impl From<std::io::Error> for SurrogateError {
    fn from(e: std::io::Error) -> Self {
        SurrogateError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for SurrogateError {
    fn from(e: serde_json::Error) -> Self {
        SurrogateError::Parse(e.to_string())
    }
}
