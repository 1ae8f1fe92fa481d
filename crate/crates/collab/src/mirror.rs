//! Client-side state rebuilt from a welcome snapshot and the ordered
//! events that follow it.

use std::collections::BTreeMap;

use cityplan_core::restructure::{ChangelogEntry, EntryId, PlanState};
use cityplan_core::{ChangeError, EntityId};
use thiserror::Error;

use crate::protocol::{ServerEvent, UserInfo};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MirrorError {
    #[error("expected a welcome event")]
    NoWelcome,
    #[error("event sequence gap: expected {expected}, got {got}")]
    Gap { expected: u64, got: u64 },
    #[error("server entries do not replay: {0}")]
    Diverged(ChangeError),
}

#[derive(Clone, Debug)]
pub struct ClientMirror {
    pub room_id: String,
    pub user_id: String,
    pub color_hex: String,
    pub seq: u64,
    pub plan: PlanState,
    pub summaries: BTreeMap<EntryId, String>,
    pub users: BTreeMap<String, UserInfo>,
    pub selections: BTreeMap<String, Option<EntityId>>,
}

impl ClientMirror {
    pub fn from_welcome(event: &ServerEvent) -> Result<Self, MirrorError> {
        let ServerEvent::Welcome {
            room_id,
            user_id,
            color_hex,
            seq,
            snapshot,
        } = event
        else {
            return Err(MirrorError::NoWelcome);
        };
        let entries: Vec<ChangelogEntry> = snapshot.entries.iter().map(|e| e.to_entry()).collect();
        let plan = PlanState::from_entries(
            snapshot.landscape.clone(),
            entries,
            snapshot.next_entry_id,
            snapshot.next_entity_ordinal,
        )
        .map_err(MirrorError::Diverged)?;
        Ok(Self {
            room_id: room_id.clone(),
            user_id: user_id.clone(),
            color_hex: color_hex.clone(),
            seq: *seq,
            plan,
            summaries: snapshot.entries.iter().map(|e| (e.id, e.summary.clone())).collect(),
            users: snapshot.users.iter().map(|u| (u.user_id.clone(), u.clone())).collect(),
            selections: snapshot.selections.clone(),
        })
    }

    pub fn apply(&mut self, event: &ServerEvent) -> Result<(), MirrorError> {
        match event {
            ServerEvent::Welcome { .. } | ServerEvent::Rejected { .. } | ServerEvent::Error { .. } => {}
            ServerEvent::UserJoined { user } => {
                self.users.insert(user.user_id.clone(), user.clone());
                self.selections.insert(user.user_id.clone(), None);
            }
            ServerEvent::UserLeft { user_id } => {
                self.users.remove(user_id);
                self.selections.remove(user_id);
            }
            ServerEvent::Selection { user_id, entity_id } => {
                self.selections.insert(user_id.clone(), entity_id.clone());
            }
            ServerEvent::Applied {
                seq,
                added_entries,
                removed_entry_ids,
                summaries,
                next_entry_id,
                next_entity_ordinal,
                ..
            } => {
                if *seq != self.seq + 1 {
                    return Err(MirrorError::Gap {
                        expected: self.seq + 1,
                        got: *seq,
                    });
                }
                let mut entries: BTreeMap<EntryId, ChangelogEntry> = self
                    .plan
                    .entries()
                    .iter()
                    .filter(|e| !removed_entry_ids.contains(&e.id))
                    .map(|e| (e.id, e.clone()))
                    .collect();
                for added in added_entries {
                    entries.insert(added.id, added.to_entry());
                }
                self.plan = PlanState::from_entries(
                    self.plan.base().clone(),
                    entries.into_values().collect(),
                    *next_entry_id,
                    *next_entity_ordinal,
                )
                .map_err(MirrorError::Diverged)?;
                self.summaries = summaries.iter().map(|s| (s.id, s.summary.clone())).collect();
                self.seq = *seq;
            }
        }
        Ok(())
    }
}
