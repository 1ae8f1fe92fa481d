use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::EntityId;

/// A requested modification of the city.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum ChangeOp {
    CreateApplication {
        name: String,
        language: String,
    },
    CreatePackage {
        parent_id: EntityId,
        name: String,
    },
    CreateClass {
        parent_package_id: EntityId,
        name: String,
    },
    RenameEntity {
        entity_id: EntityId,
        new_name: String,
    },
    MoveEntity {
        entity_id: EntityId,
        new_parent_id: EntityId,
    },
    DeleteEntity {
        entity_id: EntityId,
    },
    CreateCommunication {
        source_class_id: EntityId,
        target_class_id: EntityId,
        method_name: String,
    },
    CutCommunication {
        link_id: EntityId,
    },
}

impl ChangeOp {
    /// Whether applying the op mints a new entity id.
    pub fn creates_entity(&self) -> bool {
        matches!(
            self,
            ChangeOp::CreateApplication { .. }
                | ChangeOp::CreatePackage { .. }
                | ChangeOp::CreateClass { .. }
                | ChangeOp::CreateCommunication { .. }
        )
    }

    /// Every entity id the op refers to.
    pub fn references(&self) -> Vec<&EntityId> {
        match self {
            ChangeOp::CreateApplication { .. } => vec![],
            ChangeOp::CreatePackage { parent_id, .. } => vec![parent_id],
            ChangeOp::CreateClass {
                parent_package_id, ..
            } => vec![parent_package_id],
            ChangeOp::RenameEntity { entity_id, .. } | ChangeOp::DeleteEntity { entity_id } => {
                vec![entity_id]
            }
            ChangeOp::MoveEntity {
                entity_id,
                new_parent_id,
            } => vec![entity_id, new_parent_id],
            ChangeOp::CreateCommunication {
                source_class_id,
                target_class_id,
                ..
            } => vec![source_class_id, target_class_id],
            ChangeOp::CutCommunication { link_id } => vec![link_id],
        }
    }

    /// The entity the op is about, if it targets an existing one.
    pub fn subject(&self) -> Option<&EntityId> {
        match self {
            ChangeOp::RenameEntity { entity_id, .. }
            | ChangeOp::MoveEntity { entity_id, .. }
            | ChangeOp::DeleteEntity { entity_id } => Some(entity_id),
            ChangeOp::CutCommunication { link_id } => Some(link_id),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChangeOp::CreateApplication { .. } => "CreateApplication",
            ChangeOp::CreatePackage { .. } => "CreatePackage",
            ChangeOp::CreateClass { .. } => "CreateClass",
            ChangeOp::RenameEntity { .. } => "RenameEntity",
            ChangeOp::MoveEntity { .. } => "MoveEntity",
            ChangeOp::DeleteEntity { .. } => "DeleteEntity",
            ChangeOp::CreateCommunication { .. } => "CreateCommunication",
            ChangeOp::CutCommunication { .. } => "CutCommunication",
        }
    }
}

pub type EntryId = u64;

/// A recorded, undoable modification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChangelogEntry {
    pub id: EntryId,
    pub op: ChangeOp,
    pub author: String,
    /// Shared by a triggering entry and the companions generated for it;
    /// equals the trigger's id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<EntryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_entity_id: Option<EntityId>,
}

/// Texture shown on a modified entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mark {
    #[serde(rename = "pencil")]
    Renamed,
    #[serde(rename = "arrow")]
    Moved,
    #[serde(rename = "plus")]
    Created,
    #[serde(rename = "x-cross")]
    Deleted,
    #[serde(rename = "plus-dashed")]
    LinkCreated,
    #[serde(rename = "stripe")]
    LinkCut,
}

impl Mark {
    pub fn texture(self) -> &'static str {
        match self {
            Mark::Created => "plus",
            Mark::Renamed => "pencil",
            Mark::Moved => "arrow",
            Mark::Deleted => "x-cross",
            Mark::LinkCreated => "plus-dashed",
            Mark::LinkCut => "stripe",
        }
    }

    /// Higher wins when an entity has several modifications.
    pub fn precedence(self) -> u8 {
        match self {
            Mark::Renamed => 1,
            Mark::Moved => 2,
            Mark::Created | Mark::LinkCreated => 3,
            Mark::Deleted | Mark::LinkCut => 4,
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.texture())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModificationMark {
    pub entity_id: EntityId,
    pub mark: Mark,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_wire_format() {
        let op = ChangeOp::CreateClass {
            parent_package_id: "base-shop/org.shop".into(),
            name: "Invoice".into(),
        };
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"CreateClass","parentPackageId":"base-shop/org.shop","name":"Invoice"}"#
        );
        assert_eq!(serde_json::from_str::<ChangeOp>(&json).unwrap(), op);
        assert!(serde_json::from_str::<ChangeOp>(r#"{"kind":"Explode"}"#).is_err());
    }

    #[test]
    fn mark_textures() {
        assert_eq!(serde_json::to_string(&Mark::Deleted).unwrap(), "\"x-cross\"");
        assert!(Mark::Deleted.precedence() > Mark::Created.precedence());
        assert!(Mark::Created.precedence() > Mark::Moved.precedence());
        assert!(Mark::Moved.precedence() > Mark::Renamed.precedence());
    }
}
