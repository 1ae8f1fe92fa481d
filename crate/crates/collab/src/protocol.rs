//! Wire messages. One JSON object per websocket text frame, tagged by
//! `type`.

use std::collections::BTreeMap;

use cityplan_core::restructure::{ChangelogEntry, EntryId, ModificationMark};
use cityplan_core::{ChangeOp, EntityId, Landscape};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "snake_case",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum ClientMessage {
    Join { room: String, name: String },
    Op { op: ChangeOp },
    Undo { entry_id: EntryId },
    Select { entity_id: Option<EntityId> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UserInfo {
    pub user_id: String,
    pub name: String,
    pub color_hex: String,
}

/// A changelog entry as sent to clients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WireEntry {
    pub id: EntryId,
    pub op: ChangeOp,
    pub author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<EntryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_entity_id: Option<EntityId>,
    pub summary: String,
}

impl WireEntry {
    pub fn new(entry: &ChangelogEntry, summary: String) -> Self {
        Self {
            id: entry.id,
            op: entry.op.clone(),
            author: entry.author.clone(),
            group_id: entry.group_id,
            created_entity_id: entry.created_entity_id.clone(),
            summary,
        }
    }

    pub fn to_entry(&self) -> ChangelogEntry {
        ChangelogEntry {
            id: self.id,
            op: self.op.clone(),
            author: self.author.clone(),
            group_id: self.group_id,
            created_entity_id: self.created_entity_id.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySummary {
    pub id: EntryId,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Snapshot {
    pub landscape: Landscape,
    pub entries: Vec<WireEntry>,
    pub marks: Vec<ModificationMark>,
    pub selections: BTreeMap<String, Option<EntityId>>,
    pub users: Vec<UserInfo>,
    pub next_entry_id: EntryId,
    pub next_entity_ordinal: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "snake_case",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum ServerEvent {
    Welcome {
        room_id: String,
        user_id: String,
        color_hex: String,
        seq: u64,
        snapshot: Snapshot,
    },
    UserJoined {
        user: UserInfo,
    },
    UserLeft {
        user_id: String,
    },
    Applied {
        seq: u64,
        author: String,
        added_entries: Vec<WireEntry>,
        removed_entry_ids: Vec<EntryId>,
        marks: Vec<ModificationMark>,
        /// Current summary of every entry in id order; earlier summaries can
        /// change when entries before them are removed.
        summaries: Vec<EntrySummary>,
        next_entry_id: EntryId,
        next_entity_ordinal: u64,
    },
    Rejected {
        reason: String,
        message: String,
    },
    Selection {
        user_id: String,
        entity_id: Option<EntityId>,
    },
    Error {
        reason: String,
        message: String,
    },
}

impl ServerEvent {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}
