//! Issue drafts and their Markdown rendering.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use cityplan_core::restructure::{EntryId, ExportedEntry};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::IssueError;

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Screenshot {
    pub file_name: String,
    /// Image bytes, base64 in documents.
    #[serde(serialize_with = "to_base64", deserialize_with = "from_base64")]
    pub data: Vec<u8>,
}

impl std::fmt::Debug for Screenshot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Screenshot")
            .field("file_name", &self.file_name)
            .field("bytes", &self.data.len())
            .finish()
    }
}

fn to_base64<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&STANDARD.encode(bytes))
}

fn from_base64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let text = String::deserialize(d)?;
    STANDARD.decode(text.as_bytes()).map_err(serde::de::Error::custom)
}

/// Issue draft v1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IssueDraft {
    pub title: String,
    pub selected_entry_ids: Vec<EntryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(default)]
    pub screenshots: Vec<Screenshot>,
    #[serde(default)]
    pub mentions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RenderedIssue {
    pub title: String,
    pub body: String,
}

impl RenderedIssue {
    /// `<title>\n\n<body>`, the dry-run file contents.
    pub fn to_document(&self) -> String {
        format!("{}\n\n{}", self.title, self.body)
    }
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

pub fn is_valid_username(name: &str) -> bool {
    !name.is_empty() && name.chars().all(is_token_char)
}

/// Reference line for a screenshot before it is uploaded; publishing
/// replaces it with the markdown GitLab returns.
pub fn image_placeholder(file_name: &str) -> String {
    format!("![{file_name}]({file_name})")
}

impl IssueDraft {
    pub fn validate(&self, changelog: &[ExportedEntry]) -> Result<(), IssueError> {
        let title = self.title.trim();
        if title.is_empty() {
            return Err(IssueError::InvalidDraft("title is empty".into()));
        }
        if title.contains(['\n', '\r']) {
            return Err(IssueError::InvalidDraft("title spans several lines".into()));
        }
        if self.selected_entry_ids.is_empty() {
            return Err(IssueError::EmptySelection);
        }
        for id in &self.selected_entry_ids {
            if !changelog.iter().any(|e| e.id == *id) {
                return Err(IssueError::UnknownEntry(*id));
            }
        }
        for mention in &self.mentions {
            if !is_valid_username(mention) {
                return Err(IssueError::InvalidMention(mention.clone()));
            }
        }
        let mut names = Vec::new();
        for shot in &self.screenshots {
            if !is_valid_username(&shot.file_name) {
                return Err(IssueError::InvalidDraft(format!(
                    "screenshot name `{}` must match [a-zA-Z0-9_.-]+",
                    shot.file_name
                )));
            }
            if names.contains(&&shot.file_name) {
                return Err(IssueError::InvalidDraft(format!(
                    "duplicate screenshot name `{}`",
                    shot.file_name
                )));
            }
            if shot.data.is_empty() {
                return Err(IssueError::InvalidDraft(format!("screenshot `{}` is empty", shot.file_name)));
            }
            names.push(&shot.file_name);
        }
        Ok(())
    }
}

/// Renders the draft against a changelog export. Entries appear in id
/// order whatever the selection order; repeated ids and mentions collapse.
pub fn render_markdown(draft: &IssueDraft, changelog: &[ExportedEntry]) -> Result<RenderedIssue, IssueError> {
    draft.validate(changelog)?;
    let by_id: BTreeMap<EntryId, &ExportedEntry> = changelog.iter().map(|e| (e.id, e)).collect();
    let selected: std::collections::BTreeSet<EntryId> = draft.selected_entry_ids.iter().copied().collect();

    let mut sections = Vec::new();
    let bullets: Vec<String> = selected
        .iter()
        .map(|id| format!("- {}", by_id[id].summary))
        .collect();
    sections.push(format!("## Planned changes\n\n{}", bullets.join("\n")));

    if let Some(comment) = draft.comment.as_deref().map(str::trim).filter(|c| !c.is_empty()) {
        sections.push(format!("## Notes\n\n{}", comment.replace("\r\n", "\n")));
    }
    if !draft.screenshots.is_empty() {
        let lines: Vec<String> = draft
            .screenshots
            .iter()
            .map(|s| image_placeholder(&s.file_name))
            .collect();
        sections.push(lines.join("\n"));
    }
    let mut mentions: Vec<&str> = Vec::new();
    for m in &draft.mentions {
        if !mentions.contains(&m.as_str()) {
            mentions.push(m);
        }
    }
    if !mentions.is_empty() {
        let tags: Vec<String> = mentions.iter().map(|m| format!("@{m}")).collect();
        sections.push(format!("/cc {}", tags.join(" ")));
    }
    Ok(RenderedIssue {
        title: draft.title.trim().to_owned(),
        body: sections.join("\n\n"),
    })
}

/// Renders the draft and writes it to `out` without touching the network.
pub fn dry_run(draft: &IssueDraft, changelog: &[ExportedEntry], out: &Path) -> Result<RenderedIssue, IssueError> {
    let issue = render_markdown(draft, changelog)?;
    std::fs::write(out, issue.to_document())
        .map_err(|e| IssueError::IoError(format!("{}: {e}", out.display())))?;
    Ok(issue)
}
