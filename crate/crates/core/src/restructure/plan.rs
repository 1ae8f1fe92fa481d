//! The changelog itself. The model is always the fold of the base landscape
//! over the entries; every transition below produces a candidate ledger and
//! only commits it once it replays to the expected model.

use std::collections::BTreeSet;

use super::effective::EffectiveModel;
use super::error::ChangeError;
use super::op::{ChangeOp, ChangelogEntry, EntryId, ModificationMark};
use crate::model::{EntityId, Landscape};

/// Entries added and removed by one transition. An entry mutated in place
/// shows up in both lists under the same id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChangeOutcome {
    pub added: Vec<ChangelogEntry>,
    pub removed: Vec<EntryId>,
}

impl ChangeOutcome {
    pub fn affected_entry_ids(&self) -> BTreeSet<EntryId> {
        self.added
            .iter()
            .map(|e| e.id)
            .chain(self.removed.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanState {
    base: Landscape,
    base_model: EffectiveModel,
    entries: Vec<ChangelogEntry>,
    next_entry_id: EntryId,
    next_entity_ordinal: u64,
    model: EffectiveModel,
}

/// Folds `entries` over `base`.
pub fn replay(base: &Landscape, entries: &[ChangelogEntry]) -> Result<EffectiveModel, ChangeError> {
    let base_model = EffectiveModel::from_landscape(base)?;
    replay_from(&base_model, entries)
}

fn replay_from(
    base_model: &EffectiveModel,
    entries: &[ChangelogEntry],
) -> Result<EffectiveModel, ChangeError> {
    let mut model = base_model.clone();
    let mut last = 0;
    for entry in entries {
        let corrupt = |reason: String| ChangeError::CorruptLedger {
            entry: Some(entry.id),
            reason,
        };
        if entry.id <= last {
            return Err(corrupt(format!("entry id {} does not increase", entry.id)));
        }
        last = entry.id;
        let context = model
            .apply_op(&entry.op, entry.created_entity_id.as_ref())
            .map_err(|e| match e {
                ChangeError::CorruptLedger { reason, .. } => corrupt(reason),
                other => corrupt(other.to_string()),
            })?;
        model.record_context(entry.id, context);
    }
    Ok(model)
}

/// Entry ids in `seed` plus, transitively, every entry that references an
/// entity whose creating entry is removed.
fn cascade(entries: &[ChangelogEntry], seed: BTreeSet<EntryId>) -> BTreeSet<EntryId> {
    let mut removed = seed;
    loop {
        let gone: BTreeSet<&EntityId> = entries
            .iter()
            .filter(|e| removed.contains(&e.id))
            .filter_map(|e| e.created_entity_id.as_ref())
            .collect();
        let more: Vec<EntryId> = entries
            .iter()
            .filter(|e| !removed.contains(&e.id))
            .filter(|e| e.op.references().iter().any(|r| gone.contains(r)))
            .map(|e| e.id)
            .collect();
        if more.is_empty() {
            return removed;
        }
        removed.extend(more);
    }
}

fn group_of(entries: &[ChangelogEntry], id: EntryId) -> BTreeSet<EntryId> {
    let mut out = BTreeSet::from([id]);
    let group = entries.iter().find(|e| e.id == id).and_then(|e| e.group_id);
    if let Some(group) = group {
        out.extend(entries.iter().filter(|e| e.group_id == Some(group)).map(|e| e.id));
    }
    out
}

struct Candidate {
    entries: Vec<ChangelogEntry>,
    outcome: ChangeOutcome,
    next_entry_id: EntryId,
}

impl PlanState {
    pub fn new(base: Landscape) -> Result<Self, ChangeError> {
        let base_model = EffectiveModel::from_landscape(&base)?;
        Ok(Self {
            model: base_model.clone(),
            base_model,
            base,
            entries: Vec::new(),
            next_entry_id: 1,
            next_entity_ordinal: 1,
        })
    }

    /// Rebuilds a state from a recorded ledger, e.g. on a client that got a
    /// snapshot. Counters continue after the highest ids seen.
    pub fn from_entries(
        base: Landscape,
        entries: Vec<ChangelogEntry>,
        next_entry_id: EntryId,
        next_entity_ordinal: u64,
    ) -> Result<Self, ChangeError> {
        let base_model = EffectiveModel::from_landscape(&base)?;
        let model = replay_from(&base_model, &entries)?;
        Ok(Self {
            base,
            base_model,
            entries,
            next_entry_id,
            next_entity_ordinal,
            model,
        })
    }

    pub fn base(&self) -> &Landscape {
        &self.base
    }

    pub fn entries(&self) -> &[ChangelogEntry] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> Option<&ChangelogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn model(&self) -> &EffectiveModel {
        &self.model
    }

    pub fn next_entry_id(&self) -> EntryId {
        self.next_entry_id
    }

    pub fn next_entity_ordinal(&self) -> u64 {
        self.next_entity_ordinal
    }

    pub fn modification_marks(&self) -> Vec<ModificationMark> {
        self.model.marks()
    }

    fn creation_entry(&self, entity: &EntityId) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.created_entity_id.as_ref() == Some(entity))
    }

    fn append(&self, entries: Vec<(ChangeOp, Option<EntityId>)>, author: &str, grouped: bool) -> Candidate {
        let mut next = self.next_entry_id;
        let trigger = next + entries.len() as u64 - 1;
        let added: Vec<ChangelogEntry> = entries
            .into_iter()
            .map(|(op, created)| {
                let entry = ChangelogEntry {
                    id: next,
                    op,
                    author: author.to_owned(),
                    group_id: grouped.then_some(trigger),
                    created_entity_id: created,
                };
                next += 1;
                entry
            })
            .collect();
        let mut all = self.entries.clone();
        all.extend(added.iter().cloned());
        Candidate {
            entries: all,
            outcome: ChangeOutcome {
                added,
                removed: vec![],
            },
            next_entry_id: next,
        }
    }

    /// Replaces the op of the entry at `index`, keeping its id and position.
    fn mutate(&self, index: usize, op: ChangeOp) -> Candidate {
        let mut entries = self.entries.clone();
        entries[index].op = op;
        let entry = entries[index].clone();
        Candidate {
            entries,
            outcome: ChangeOutcome {
                removed: vec![entry.id],
                added: vec![entry],
            },
            next_entry_id: self.next_entry_id,
        }
    }

    fn remove_cascading(&self, seed: BTreeSet<EntryId>) -> Candidate {
        let removed = cascade(&self.entries, seed);
        Candidate {
            entries: self
                .entries
                .iter()
                .filter(|e| !removed.contains(&e.id))
                .cloned()
                .collect(),
            outcome: ChangeOutcome {
                added: vec![],
                removed: removed.into_iter().collect(),
            },
            next_entry_id: self.next_entry_id,
        }
    }

    /// For the latest ungrouped entry matching `same`: one candidate that
    /// only drops it (a change reverted to the original) and one that drops
    /// it and appends `op`.
    fn replace_latest(
        &self,
        op: &ChangeOp,
        author: &str,
        same: impl Fn(&ChangeOp) -> bool,
    ) -> Vec<Candidate> {
        let Some(prior) = self
            .entries
            .iter()
            .rev()
            .find(|e| e.group_id.is_none() && same(&e.op))
            .map(|e| e.id)
        else {
            return vec![];
        };
        let dropped = Candidate {
            entries: self.entries.iter().filter(|e| e.id != prior).cloned().collect(),
            outcome: ChangeOutcome {
                added: vec![],
                removed: vec![prior],
            },
            next_entry_id: self.next_entry_id,
        };
        let mut replaced = self.append(vec![(op.clone(), None)], author, false);
        replaced.entries.retain(|e| e.id != prior);
        replaced.outcome.removed.push(prior);
        vec![dropped, replaced]
    }

    /// Candidate ledgers for `op`, most coalesced first. The last one is
    /// always a plain append.
    fn candidates(&self, op: &ChangeOp, author: &str, created_id: Option<EntityId>) -> Vec<Candidate> {
        let mut out = Vec::new();
        match op {
            ChangeOp::RenameEntity {
                entity_id,
                new_name,
            } => {
                if let Some(index) = self.creation_entry(entity_id) {
                    let mut create = self.entries[index].op.clone();
                    match &mut create {
                        ChangeOp::CreateApplication { name, .. }
                        | ChangeOp::CreatePackage { name, .. }
                        | ChangeOp::CreateClass { name, .. } => *name = new_name.clone(),
                        _ => {}
                    }
                    out.push(self.mutate(index, create));
                }
                out.extend(self.replace_latest(op, author, |prior| {
                    matches!(prior, ChangeOp::RenameEntity { entity_id: e, .. } if e == entity_id)
                }));
            }
            ChangeOp::MoveEntity {
                entity_id,
                new_parent_id,
            } => {
                if let Some(index) = self.creation_entry(entity_id) {
                    let mut create = self.entries[index].op.clone();
                    match &mut create {
                        ChangeOp::CreatePackage { parent_id, .. } => *parent_id = new_parent_id.clone(),
                        ChangeOp::CreateClass {
                            parent_package_id, ..
                        } => *parent_package_id = new_parent_id.clone(),
                        _ => {}
                    }
                    out.push(self.mutate(index, create));
                }
                out.extend(self.replace_latest(op, author, |prior| {
                    matches!(prior, ChangeOp::MoveEntity { entity_id: e, .. } if e == entity_id)
                }));
            }
            ChangeOp::DeleteEntity { entity_id } => {
                if let Some(index) = self.creation_entry(entity_id) {
                    out.push(self.remove_cascading(BTreeSet::from([self.entries[index].id])));
                } else {
                    let mut entries: Vec<(ChangeOp, Option<EntityId>)> = self
                        .model
                        .live_incident_links(entity_id)
                        .into_iter()
                        .map(|link_id| (ChangeOp::CutCommunication { link_id }, None))
                        .collect();
                    let grouped = !entries.is_empty();
                    entries.push((op.clone(), None));
                    out.push(self.append(entries, author, grouped));
                    return out;
                }
            }
            ChangeOp::CutCommunication { link_id } => {
                if let Some(index) = self.creation_entry(link_id) {
                    out.push(self.remove_cascading(BTreeSet::from([self.entries[index].id])));
                }
            }
            _ => {}
        }
        out.push(self.append(vec![(op.clone(), created_id)], author, false));
        out
    }

    /// Validates and records `op`, coalescing it into the ledger where
    /// possible. On error the state is unchanged.
    pub fn apply_change(&mut self, op: ChangeOp, author: &str) -> Result<ChangeOutcome, ChangeError> {
        let created_id = op
            .creates_entity()
            .then(|| EntityId::new(format!("new-{}", self.next_entity_ordinal)));
        let mut direct = self.model.clone();
        direct.apply_op(&op, created_id.as_ref())?;

        for candidate in self.candidates(&op, author, created_id.clone()) {
            let Ok(model) = replay_from(&self.base_model, &candidate.entries) else {
                continue;
            };
            if !model.same_structure(&direct) {
                continue;
            }
            self.entries = candidate.entries;
            self.model = model;
            self.next_entry_id = candidate.next_entry_id;
            if created_id.is_some() {
                self.next_entity_ordinal += 1;
            }
            return Ok(candidate.outcome);
        }
        Err(ChangeError::CorruptLedger {
            entry: None,
            reason: format!("no consistent ledger for {}", op.name()),
        })
    }

    /// Removes an entry, its group, and everything depending on entities it
    /// created. Entries that no longer apply afterwards are dropped as well.
    pub fn undo_entry(&mut self, entry_id: EntryId) -> Result<ChangeOutcome, ChangeError> {
        if self.entry(entry_id).is_none() {
            return Err(ChangeError::UnknownEntry(entry_id));
        }
        let mut removed = cascade(&self.entries, group_of(&self.entries, entry_id));
        loop {
            let remaining: Vec<ChangelogEntry> = self
                .entries
                .iter()
                .filter(|e| !removed.contains(&e.id))
                .cloned()
                .collect();
            match replay_from(&self.base_model, &remaining) {
                Ok(model) => {
                    self.entries = remaining;
                    self.model = model;
                    return Ok(ChangeOutcome {
                        added: vec![],
                        removed: removed.into_iter().collect(),
                    });
                }
                Err(ChangeError::CorruptLedger {
                    entry: Some(bad), ..
                }) => {
                    removed.extend(group_of(&self.entries, bad));
                    removed = cascade(&self.entries, removed);
                }
                Err(other) => return Err(other),
            }
        }
    }
}
