//! The `cityplan` command line. Exit codes: 0 on success, 1 on domain
//! errors (printed as `error:<Kind>: message`), 2 on usage errors.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cityplan_collab::server::publisher_from_env;
use cityplan_collab::{AppState, Registry};
use cityplan_core::ingest::{aggregate_traces, annotate_metrics, parse_structure, parse_traces, serialize_structure};
use cityplan_core::layout::{layout_landscape, write_layout_file};
use cityplan_core::restructure::{read_changelog_export, write_changelog_export, EntryId};
use cityplan_core::{ChangeOp, Landscape, LayoutConfig, PlanState};
use cityplan_issue::{
    dry_run, render_markdown, GitLabTarget, HttpTransport, IssueDraft, ProjectRef, Publisher, Screenshot,
};
use clap::{CommandFactory, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "cityplan", version, about = "Plan software architecture changes on a software city")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a structure file, aggregate traces into links, write a landscape.
    Ingest {
        #[arg(long)]
        structure: PathBuf,
        /// Trace export; without it the structure file's own links are kept.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lay out a landscape and write a layout file.
    Layout {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the room server with one room on the given landscape.
    Serve {
        #[arg(long)]
        landscape: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Render selected changelog entries as an issue, to a file or to GitLab.
    ExportIssue {
        #[arg(long)]
        changelog: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        select: Vec<EntryId>,
        #[arg(long)]
        title: String,
        #[arg(long)]
        comment: Option<String>,
        #[arg(long = "mention")]
        mentions: Vec<String>,
        #[arg(long = "screenshot")]
        screenshots: Vec<PathBuf>,
        /// Write `<title>\n\n<body>` here instead of publishing.
        #[arg(long)]
        dry_run: Option<PathBuf>,
        #[arg(long, env = "GITLAB_URL")]
        gitlab_url: Option<String>,
        #[arg(long, env = "GITLAB_PROJECT")]
        project: Option<String>,
    },
    /// Apply an op script to a landscape and print the changelog export.
    Replay {
        #[arg(long)]
        landscape: PathBuf,
        #[arg(long)]
        ops: PathBuf,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

macro_rules! domain_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.kind(), e.to_string())
            }
        }
    )*};
}

domain_error!(
    cityplan_core::ingest::IngestError,
    cityplan_core::layout::LayoutError,
    cityplan_core::ChangeError,
    cityplan_issue::IssueError,
    cityplan_collab::CollabError
);

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::new("IoError", format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::new("IoError", format!("{}: {e}", path.display())))
}

fn decode<'a, T: Deserialize<'a>>(path: &Path, bytes: &'a [u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| {
        let kind = match e.classify() {
            serde_json::error::Category::Data => "SchemaViolation",
            _ => "MalformedDocument",
        };
        CliError::new(kind, format!("{}: {e}", path.display()))
    })
}

fn load_landscape(path: &Path) -> Result<Landscape, CliError> {
    Ok(parse_structure(&read(path)?)?)
}

/// Op script v1.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpScript {
    pub version: u32,
    #[serde(default)]
    pub author: Option<String>,
    pub ops: Vec<ChangeOp>,
}

pub const DEFAULT_AUTHOR: &str = "cli";

pub fn replay_script(base: Landscape, script: &OpScript) -> Result<PlanState, CliError> {
    if script.version != 1 {
        return Err(CliError::new(
            "SchemaViolation",
            format!("unsupported op script version {}", script.version),
        ));
    }
    let author = script.author.as_deref().unwrap_or(DEFAULT_AUTHOR);
    let mut plan = PlanState::new(base)?;
    for (i, op) in script.ops.iter().enumerate() {
        plan.apply_change(op.clone(), author)
            .map_err(|e| CliError::new(e.kind(), format!("op {}: {e}", i + 1)))?;
    }
    Ok(plan)
}

fn screenshot(path: &Path) -> Result<Screenshot, CliError> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::new("InvalidDraft", format!("{}: no file name", path.display())))?;
    Ok(Screenshot {
        file_name: file_name.to_owned(),
        data: read(path)?,
    })
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut emit = |line: &str| {
        let _ = writeln!(stdout, "{line}");
    };
    match command {
        Command::Ingest { structure, traces, out } => {
            let mut landscape = load_landscape(&structure)?;
            if let Some(traces) = traces {
                let traces = parse_traces(&read(&traces)?)?;
                let aggregation = aggregate_traces(&traces, &landscape);
                let s = aggregation.skipped;
                log::info!(
                    "{} links; skipped {} unresolved, {} orphaned, {} invalid spans, {} self calls",
                    aggregation.links.len(),
                    s.unresolved,
                    s.orphaned,
                    s.invalid,
                    s.self_calls
                );
                landscape = annotate_metrics(&landscape, aggregation.links)?;
            }
            write(&out, &serialize_structure(&landscape))?;
            emit(&out.display().to_string());
        }
        Command::Layout { input, out } => {
            let landscape = load_landscape(&input)?;
            let layout = layout_landscape(&landscape, &LayoutConfig::default())?;
            write(&out, &write_layout_file(&layout))?;
            emit(&out.display().to_string());
        }
        Command::Replay { landscape, ops } => {
            let base = load_landscape(&landscape)?;
            let script: OpScript = decode(&ops, &read(&ops)?)?;
            let plan = replay_script(base, &script)?;
            let text = write_changelog_export(&plan.changelog_export()?);
            let _ = stdout.write_all(text.as_bytes());
        }
        Command::ExportIssue {
            changelog,
            select,
            title,
            comment,
            mentions,
            screenshots,
            dry_run: out,
            gitlab_url,
            project,
        } => {
            let bytes = read(&changelog)?;
            let entries = read_changelog_export(&bytes).map_err(|e| {
                let kind = match e.classify() {
                    serde_json::error::Category::Data => "SchemaViolation",
                    _ => "MalformedDocument",
                };
                CliError::new(kind, format!("{}: {e}", changelog.display()))
            })?;
            let draft = IssueDraft {
                title,
                selected_entry_ids: select,
                comment,
                screenshots: screenshots.iter().map(|p| screenshot(p)).collect::<Result<_, _>>()?,
                mentions,
            };
            if let Some(out) = out {
                dry_run(&draft, &entries, &out)?;
                emit(&out.display().to_string());
                return Ok(());
            }
            let (Some(url), Some(project)) = (gitlab_url, project) else {
                return Err(CliError::new(
                    "MissingTarget",
                    "publishing needs --gitlab-url and --project (or GITLAB_URL and GITLAB_PROJECT); use --dry-run to write a file",
                ));
            };
            let rendered = render_markdown(&draft, &entries)?;
            let target = GitLabTarget::from_env(&url, ProjectRef::parse(&project))?;
            let issue = Publisher::new(target, HttpTransport::new()?).publish(&rendered, &draft.screenshots)?;
            emit(&issue.url);
        }
        Command::Serve { landscape, port, host } => {
            let base = load_landscape(&landscape)?;
            let mut state = AppState::new(Arc::new(Registry::new()));
            if let Some(publish) = publisher_from_env()? {
                state = state.with_publisher(publish);
            }
            let room = state.registry.create_room(base)?;
            emit(&room);
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::new("IoError", e.to_string()))?;
            runtime
                .block_on(cityplan_collab::serve(SocketAddr::new(host, port), state))
                .map_err(|e| CliError::new("IoError", e.to_string()))?;
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            let _ = write!(stderr, "\n{}", Cli::command().render_help());
            return 2;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.message.replace('\n', " ");
            let _ = writeln!(stderr, "error:{}: {}", e.kind, message);
            1
        }
    }
}
