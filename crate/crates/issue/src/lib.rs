//! Turn selected changelog entries into a GitLab issue.

pub mod draft;
pub mod error;
pub mod gitlab;

pub use draft::{dry_run, render_markdown, IssueDraft, RenderedIssue, Screenshot};
pub use error::IssueError;
pub use gitlab::{GitLabTarget, HttpTransport, IssueRef, MockTransport, ProjectRef, Publisher, Token, Transport};
