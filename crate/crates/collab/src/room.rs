//! One planning session. All state transitions are synchronous; the caller
//! serializes access and delivers the returned events in order.

use std::collections::BTreeMap;

use cityplan_core::restructure::{entry_summary, ChangeOutcome, EntryId, PlanState};
use cityplan_core::{ChangeError, EntityId, Landscape};

use crate::error::CollabError;
use crate::protocol::{ClientMessage, EntrySummary, ServerEvent, Snapshot, UserInfo, WireEntry};

pub const PALETTE: [&str; 8] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recipient {
    All,
    Only(String),
    AllExcept(String),
}

impl Recipient {
    pub fn includes(&self, user: &str) -> bool {
        match self {
            Recipient::All => true,
            Recipient::Only(u) => u == user,
            Recipient::AllExcept(u) => u != user,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outbound {
    pub to: Recipient,
    pub event: ServerEvent,
}

fn to_all(event: ServerEvent) -> Outbound {
    Outbound {
        to: Recipient::All,
        event,
    }
}

fn to_user(user: &str, event: ServerEvent) -> Outbound {
    Outbound {
        to: Recipient::Only(user.to_owned()),
        event,
    }
}

#[derive(Clone, Debug)]
pub struct Room {
    id: String,
    plan: PlanState,
    users: BTreeMap<String, UserInfo>,
    selections: BTreeMap<String, Option<EntityId>>,
    join_count: u64,
    event_seq: u64,
}

impl Room {
    pub fn new(id: impl Into<String>, base: Landscape) -> Result<Self, CollabError> {
        let plan = PlanState::new(base).map_err(|e| match e {
            ChangeError::InvalidModel(report) => CollabError::InvalidModel(report),
            other => CollabError::MalformedMessage(other.to_string()),
        })?;
        Ok(Self {
            id: id.into(),
            plan,
            users: BTreeMap::new(),
            selections: BTreeMap::new(),
            join_count: 0,
            event_seq: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn plan(&self) -> &PlanState {
        &self.plan
    }

    pub fn event_seq(&self) -> u64 {
        self.event_seq
    }

    pub fn users(&self) -> impl Iterator<Item = &UserInfo> {
        self.users.values()
    }

    pub fn is_member(&self, user_id: &str) -> bool {
        self.users.contains_key(user_id)
    }

    pub fn selections(&self) -> &BTreeMap<String, Option<EntityId>> {
        &self.selections
    }

    pub fn wire_entries(&self) -> Vec<WireEntry> {
        self.plan
            .entries()
            .iter()
            .map(|e| WireEntry::new(e, self.summary(e.id)))
            .collect()
    }

    fn summary(&self, id: EntryId) -> String {
        let entry = self.plan.entry(id).expect("entry in plan");
        entry_summary(entry, self.plan.model()).expect("applied entries have summaries")
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            landscape: self.plan.base().clone(),
            entries: self.wire_entries(),
            marks: self.plan.modification_marks(),
            selections: self.selections.clone(),
            users: self.users.values().cloned().collect(),
            next_entry_id: self.plan.next_entry_id(),
            next_entity_ordinal: self.plan.next_entity_ordinal(),
        }
    }

    /// Admits a user. The first event goes to the new member only.
    pub fn join(&mut self, name: &str) -> Result<(String, Vec<Outbound>), CollabError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(CollabError::MalformedMessage("display name is empty".into()));
        }
        self.join_count += 1;
        let user_id = format!("u{}", self.join_count);
        let color = PALETTE[((self.join_count - 1) % PALETTE.len() as u64) as usize];
        let user = UserInfo {
            user_id: user_id.clone(),
            name: name.to_owned(),
            color_hex: color.to_owned(),
        };
        self.users.insert(user_id.clone(), user.clone());
        self.selections.insert(user_id.clone(), None);
        let welcome = ServerEvent::Welcome {
            room_id: self.id.clone(),
            user_id: user_id.clone(),
            color_hex: color.to_owned(),
            seq: self.event_seq,
            snapshot: self.snapshot(),
        };
        let events = vec![
            to_user(&user_id, welcome),
            Outbound {
                to: Recipient::AllExcept(user_id.clone()),
                event: ServerEvent::UserJoined { user },
            },
        ];
        Ok((user_id, events))
    }

    pub fn leave(&mut self, user_id: &str) -> Vec<Outbound> {
        if self.users.remove(user_id).is_none() {
            return vec![];
        }
        self.selections.remove(user_id);
        vec![to_all(ServerEvent::UserLeft {
            user_id: user_id.to_owned(),
        })]
    }

    /// Parses and handles one text frame from a member.
    pub fn handle_text(&mut self, user_id: &str, text: &str) -> Vec<Outbound> {
        let result = serde_json::from_str::<ClientMessage>(text)
            .map_err(|e| CollabError::MalformedMessage(e.to_string()))
            .and_then(|message| self.handle_message(user_id, message));
        match result {
            Ok(events) => events,
            Err(error) => vec![to_user(
                user_id,
                ServerEvent::Error {
                    reason: error.kind().into(),
                    message: error.to_string(),
                },
            )],
        }
    }

    pub fn handle_message(&mut self, user_id: &str, message: ClientMessage) -> Result<Vec<Outbound>, CollabError> {
        if !self.is_member(user_id) {
            return Err(CollabError::NotMember(user_id.to_owned()));
        }
        let author = self.users[user_id].name.clone();
        match message {
            ClientMessage::Join { .. } => Err(CollabError::MalformedMessage("already joined".into())),
            ClientMessage::Op { op } => {
                let result = self.plan.apply_change(op, &author);
                Ok(self.after_change(user_id, &author, result))
            }
            ClientMessage::Undo { entry_id } => {
                let result = self.plan.undo_entry(entry_id);
                Ok(self.after_change(user_id, &author, result))
            }
            ClientMessage::Select { entity_id } => {
                if let Some(id) = &entity_id {
                    if !self.plan.model().contains(id) {
                        return Ok(vec![to_user(
                            user_id,
                            ServerEvent::Rejected {
                                reason: "UnknownEntity".into(),
                                message: format!("unknown entity `{id}`"),
                            },
                        )]);
                    }
                }
                self.selections.insert(user_id.to_owned(), entity_id.clone());
                Ok(vec![to_all(ServerEvent::Selection {
                    user_id: user_id.to_owned(),
                    entity_id,
                })])
            }
        }
    }

    fn after_change(
        &mut self,
        user_id: &str,
        author: &str,
        result: Result<ChangeOutcome, ChangeError>,
    ) -> Vec<Outbound> {
        let outcome = match result {
            Ok(outcome) => outcome,
            Err(error) => {
                return vec![to_user(
                    user_id,
                    ServerEvent::Rejected {
                        reason: error.kind().into(),
                        message: error.to_string(),
                    },
                )]
            }
        };
        self.event_seq += 1;
        let added_entries = outcome
            .added
            .iter()
            .map(|e| WireEntry::new(e, self.summary(e.id)))
            .collect();
        let summaries = self
            .plan
            .entries()
            .iter()
            .map(|e| EntrySummary {
                id: e.id,
                summary: self.summary(e.id),
            })
            .collect();
        let mut events = vec![to_all(ServerEvent::Applied {
            seq: self.event_seq,
            author: author.to_owned(),
            added_entries,
            removed_entry_ids: outcome.removed,
            marks: self.plan.modification_marks(),
            summaries,
            next_entry_id: self.plan.next_entry_id(),
            next_entity_ordinal: self.plan.next_entity_ordinal(),
        })];
        // Selections of entities that no longer exist are cleared.
        let stale: Vec<String> = self
            .selections
            .iter()
            .filter(|(_, sel)| sel.as_ref().is_some_and(|id| !self.plan.model().contains(id)))
            .map(|(user, _)| user.clone())
            .collect();
        for user in stale {
            self.selections.insert(user.clone(), None);
            events.push(to_all(ServerEvent::Selection {
                user_id: user,
                entity_id: None,
            }));
        }
        events
    }
}
