//! One-line English summaries of changelog entries and the changelog
//! export document.

use serde::{Deserialize, Serialize};

use super::effective::EffectiveModel;
use super::error::ChangeError;
use super::op::{ChangeOp, ChangelogEntry, EntryId};
use super::plan::PlanState;
use crate::model::{EntityId, EntityKind};

/// Renders the summary of an entry that was applied while building `model`.
pub fn entry_summary(entry: &ChangelogEntry, model: &EffectiveModel) -> Result<String, ChangeError> {
    let unknown = || {
        let id = entry
            .op
            .subject()
            .or(entry.created_entity_id.as_ref())
            .cloned()
            .unwrap_or_else(|| EntityId::new(format!("entry-{}", entry.id)));
        ChangeError::UnknownEntity(id)
    };
    let ctx = model.context(entry.id).ok_or_else(unknown)?;
    let kind = ctx.kind.map(EntityKind::label).unwrap_or("entity");
    Ok(match &entry.op {
        ChangeOp::CreateApplication { name, .. } => format!("Created application `{name}`"),
        ChangeOp::CreatePackage { name, .. } => {
            format!("Created package `{name}` in `{}`", ctx.parent_fqn)
        }
        ChangeOp::CreateClass { name, .. } => {
            format!("Created class `{name}` in `{}`", ctx.parent_fqn)
        }
        ChangeOp::RenameEntity { new_name, .. } => {
            format!("Renamed {kind} `{}` to `{new_name}`", ctx.name)
        }
        ChangeOp::MoveEntity { .. } => format!(
            "Moved {kind} `{}` from `{}` to `{}`",
            ctx.name, ctx.parent_fqn, ctx.new_parent_fqn
        ),
        ChangeOp::DeleteEntity { .. } => match ctx.kind {
            Some(EntityKind::Class) => format!("Deleted class `{}`", ctx.fqn),
            _ => format!("Deleted {kind} `{}` and its contents", ctx.fqn),
        },
        ChangeOp::CreateCommunication { .. } => format!("Created communication `{}`", ctx.link),
        ChangeOp::CutCommunication { .. } => format!("Cut communication `{}`", ctx.link),
    })
}

/// An entry as shown in the sidebar and consumed by issue export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExportedEntry {
    pub id: EntryId,
    pub author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<EntryId>,
    pub summary: String,
    pub op: ChangeOp,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportDoc {
    version: u32,
    entries: Vec<ExportedEntry>,
}

impl PlanState {
    pub fn changelog_export(&self) -> Result<Vec<ExportedEntry>, ChangeError> {
        self.entries()
            .iter()
            .map(|e| {
                Ok(ExportedEntry {
                    id: e.id,
                    author: e.author.clone(),
                    group_id: e.group_id,
                    summary: entry_summary(e, self.model())?,
                    op: e.op.clone(),
                })
            })
            .collect()
    }
}

/// Changelog export v1 document, pretty printed with a trailing newline.
pub fn write_changelog_export(entries: &[ExportedEntry]) -> String {
    let doc = ExportDoc {
        version: 1,
        entries: entries.to_vec(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("changelog serializes");
    out.push('\n');
    out
}

pub fn read_changelog_export(document: &[u8]) -> Result<Vec<ExportedEntry>, serde_json::Error> {
    let doc: ExportDoc = serde_json::from_slice(document)?;
    if doc.version != 1 {
        return Err(serde::de::Error::custom(format!(
            "unsupported changelog version {}",
            doc.version
        )));
    }
    Ok(doc.entries)
}
