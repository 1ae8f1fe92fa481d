use cityplan_core::model::ValidationReport;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollabError {
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("{0}")]
    InvalidModel(ValidationReport),
    #[error("`{0}` is not a member of this room")]
    NotMember(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
}

impl CollabError {
    pub fn kind(&self) -> &'static str {
        match self {
            CollabError::UnknownRoom(_) => "UnknownRoom",
            CollabError::InvalidModel(_) => "InvalidModel",
            CollabError::NotMember(_) => "NotMember",
            CollabError::MalformedMessage(_) => "MalformedMessage",
        }
    }
}
