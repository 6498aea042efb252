use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate aim: bow and arrow hands coincide")]
    DegenerateAim,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid config `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("training diverged at epoch {epoch}: {what} is not finite")]
    Diverged { epoch: usize, what: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
