use thiserror::Error;

use super::op::EntryId;
use crate::model::{EntityId, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChangeError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("entity `{0}` is deleted")]
    EntityDeleted(EntityId),
    #[error("name `{0}` is already taken")]
    DuplicateName(String),
    #[error("cannot move `{entity}` into itself or its descendant `{target}`")]
    CyclicMove { entity: EntityId, target: EntityId },
    #[error("class `{0}` cannot communicate with itself")]
    SelfCommunication(EntityId),
    #[error("{0}")]
    InvalidTarget(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("unknown changelog entry {0}")]
    UnknownEntry(EntryId),
    #[error("{0}")]
    InvalidModel(ValidationReport),
    #[error("changelog does not replay{}: {reason}", entry.map(|e| format!(" at entry {e}")).unwrap_or_default())]
    CorruptLedger {
        entry: Option<EntryId>,
        reason: String,
    },
}

impl ChangeError {
    /// Stable machine-readable name, used on the wire and in CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            ChangeError::UnknownEntity(_) => "UnknownEntity",
            ChangeError::EntityDeleted(_) => "EntityDeleted",
            ChangeError::DuplicateName(_) => "DuplicateName",
            ChangeError::CyclicMove { .. } => "CyclicMove",
            ChangeError::SelfCommunication(_) => "SelfCommunication",
            ChangeError::InvalidTarget(_) => "InvalidTarget",
            ChangeError::InvalidName(_) => "InvalidName",
            ChangeError::UnknownEntry(_) => "UnknownEntry",
            ChangeError::InvalidModel(_) => "InvalidModel",
            ChangeError::CorruptLedger { .. } => "CorruptLedger",
        }
    }
}
