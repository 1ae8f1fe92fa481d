use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IssueError {
    #[error("no changelog entries selected")]
    EmptySelection,
    #[error("unknown changelog entry {0}")]
    UnknownEntry(u64),
    #[error("invalid draft: {0}")]
    InvalidDraft(String),
    #[error("invalid GitLab username `{0}`")]
    InvalidMention(String),
    #[error("GitLab rejected the token (HTTP {0})")]
    AuthFailed(u16),
    #[error("GITLAB_TOKEN is not set")]
    MissingToken,
    #[error("GitLab project not found")]
    ProjectNotFound,
    #[error("GitLab error (HTTP {status}): {message}")]
    RemoteError { status: u16, message: String },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("i/o error: {0}")]
    IoError(String),
}

impl IssueError {
    pub fn kind(&self) -> &'static str {
        match self {
            IssueError::EmptySelection => "EmptySelection",
            IssueError::UnknownEntry(_) => "UnknownEntry",
            IssueError::InvalidDraft(_) => "InvalidDraft",
            IssueError::InvalidMention(_) => "InvalidMention",
            IssueError::AuthFailed(_) => "AuthFailed",
            IssueError::MissingToken => "MissingToken",
            IssueError::ProjectNotFound => "ProjectNotFound",
            IssueError::RemoteError { .. } => "RemoteError",
            IssueError::TransportError(_) => "TransportError",
            IssueError::IoError(_) => "IoError",
        }
    }
}
