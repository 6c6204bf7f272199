use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty sentence{}", .0.as_deref().map(|id| format!(" `{id}`")).unwrap_or_default())]
    EmptySentence(Option<String>),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown aspect category `{0}`")]
    UnknownCategory(String),
    #[error("word `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("id mismatch: {0}")]
    IdMismatch(String),
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
