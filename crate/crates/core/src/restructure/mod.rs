//! The change engine: validated modifications, a coalescing changelog,
//! modification textures and cascading undo.
//!
//! Coalescing keeps the changelog a net plan rather than an event log:
//!
//! * renaming or moving a created entity rewrites its create entry;
//! * a second rename or move of an original entity replaces the first;
//! * deleting a created entity removes its create entry and everything that
//!   depends on it, so the entity disappears;
//! * deleting an original entity records one cut per live incident link,
//!   grouped with the delete, and keeps the entity as a marked ruin;
//! * cutting a created link removes its create entry.
//!
//! Every coalesced ledger is replayed before it is committed. When the
//! rewritten ledger would not replay to the same model (a later entry relied
//! on the old state), the op is appended as a plain entry instead.

mod effective;
mod error;
mod op;
mod plan;
mod summary;

pub use effective::{EffectiveModel, EntryContext, LinkState, Node, NodeKind, OrderKey};
pub use error::ChangeError;
pub use op::{ChangeOp, ChangelogEntry, EntryId, Mark, ModificationMark};
pub use plan::{replay, ChangeOutcome, PlanState};
pub use summary::{entry_summary, read_changelog_export, write_changelog_export, ExportedEntry};

/// Textures derived from the ledger, one per entity.
pub fn modification_marks(state: &PlanState) -> Vec<ModificationMark> {
    state.modification_marks()
}
