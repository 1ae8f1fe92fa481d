//! Reading structure documents and trace exports, and turning spans into
//! class-level communication links.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    join_fqn, validate_landscape, Application, Class, CommunicationLink, EntityId, EntityKind,
    Landscape, Method, Package, ValidationReport,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("{0}")]
    MalformedDocument(String),
    #[error("{0}")]
    SchemaViolation(String),
    #[error("{0}")]
    InvalidModel(ValidationReport),
    #[error("link `{link}` endpoint `{endpoint}` does not resolve to a class")]
    DanglingLink { link: EntityId, endpoint: EntityId },
}

impl IngestError {
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::MalformedDocument(_) => "MalformedDocument",
            IngestError::SchemaViolation(_) => "SchemaViolation",
            IngestError::InvalidModel(_) => "InvalidModel",
            IngestError::DanglingLink { .. } => "DanglingLink",
        }
    }
}

fn decode<'a, T: Deserialize<'a>>(document: &'a [u8]) -> Result<T, IngestError> {
    serde_json::from_slice(document).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => IngestError::SchemaViolation(e.to_string()),
        _ => IngestError::MalformedDocument(e.to_string()),
    })
}

fn check_version(version: u32) -> Result<(), IngestError> {
    if version == FORMAT_VERSION {
        Ok(())
    } else {
        Err(IngestError::SchemaViolation(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )))
    }
}

// structure-file v1

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct StructureDoc {
    version: u32,
    applications: Vec<ApplicationDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    links: Vec<LinkDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct ApplicationDoc {
    name: String,
    language: String,
    packages: Vec<PackageDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct PackageDoc {
    name: String,
    #[serde(default)]
    sub_packages: Vec<PackageDoc>,
    #[serde(default)]
    classes: Vec<ClassDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct ClassDoc {
    name: String,
    #[serde(default)]
    methods: Vec<MethodDoc>,
    #[serde(default, skip_serializing_if = "is_zero")]
    total_calls: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct MethodDoc {
    name: String,
    hash: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct LinkDoc {
    source: String,
    target: String,
    method_name: String,
    call_count: u64,
}

fn is_zero(n: &u64) -> bool {
    *n == 0
}

/// Id minted for a base entity with the given fully-qualified name.
pub fn base_id(fqn: &str) -> EntityId {
    EntityId::new(format!("base-{fqn}"))
}

/// Id minted for a base link between two class fqns.
pub fn base_link_id(source_fqn: &str, target_fqn: &str, method: &str) -> EntityId {
    EntityId::new(format!("base-link:{source_fqn}->{target_fqn}#{method}"))
}

/// Parses a structure-file v1 document. Sibling order is preserved and ids
/// are minted from fully-qualified names.
pub fn parse_structure(document: &[u8]) -> Result<Landscape, IngestError> {
    let doc: StructureDoc = decode(document)?;
    check_version(doc.version)?;
    let applications = doc
        .applications
        .into_iter()
        .map(|app| {
            let names = vec![app.name.clone()];
            Application {
                id: base_id(&join_fqn(&names)),
                root_packages: app
                    .packages
                    .into_iter()
                    .map(|p| package_from_doc(p, &names))
                    .collect(),
                name: app.name,
                language: app.language,
            }
        })
        .collect();
    let links = doc
        .links
        .into_iter()
        .map(|l| CommunicationLink {
            id: base_link_id(&l.source, &l.target, &l.method_name),
            source_class_id: base_id(&l.source),
            target_class_id: base_id(&l.target),
            method_name: l.method_name,
            call_count: l.call_count,
        })
        .collect();
    let landscape = Landscape {
        applications,
        links,
    };
    let report = validate_landscape(&landscape);
    if report.is_valid() {
        Ok(landscape)
    } else {
        Err(IngestError::InvalidModel(report))
    }
}

fn package_from_doc(doc: PackageDoc, parent_names: &[String]) -> Package {
    let mut names = parent_names.to_vec();
    names.push(doc.name.clone());
    Package {
        id: base_id(&join_fqn(&names)),
        name: doc.name,
        classes: doc
            .classes
            .into_iter()
            .map(|c| {
                let mut class_names = names.clone();
                class_names.push(c.name.clone());
                Class {
                    id: base_id(&join_fqn(&class_names)),
                    name: c.name,
                    methods: c
                        .methods
                        .into_iter()
                        .map(|m| Method {
                            name: m.name,
                            hash: m.hash,
                        })
                        .collect(),
                    total_calls: c.total_calls,
                }
            })
            .collect(),
        sub_packages: doc
            .sub_packages
            .into_iter()
            .map(|p| package_from_doc(p, &names))
            .collect(),
    }
}

/// Writes a landscape as a structure-file v1 document (pretty printed, with
/// a trailing newline). Parsing the output yields the same landscape when
/// its ids were minted by [`parse_structure`].
pub fn serialize_structure(landscape: &Landscape) -> String {
    let index = landscape.index();
    let fqn = |id: &EntityId| {
        index
            .resolve(id)
            .map(|r| r.fqn.clone())
            .unwrap_or_else(|_| id.as_str().trim_start_matches("base-").to_owned())
    };
    let doc = StructureDoc {
        version: FORMAT_VERSION,
        applications: landscape
            .applications
            .iter()
            .map(|app| ApplicationDoc {
                name: app.name.clone(),
                language: app.language.clone(),
                packages: app.root_packages.iter().map(package_to_doc).collect(),
            })
            .collect(),
        links: landscape
            .links
            .iter()
            .map(|l| LinkDoc {
                source: fqn(&l.source_class_id),
                target: fqn(&l.target_class_id),
                method_name: l.method_name.clone(),
                call_count: l.call_count,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("structure document serializes");
    out.push('\n');
    out
}

fn package_to_doc(package: &Package) -> PackageDoc {
    PackageDoc {
        name: package.name.clone(),
        sub_packages: package.sub_packages.iter().map(package_to_doc).collect(),
        classes: package
            .classes
            .iter()
            .map(|c| ClassDoc {
                name: c.name.clone(),
                methods: c
                    .methods
                    .iter()
                    .map(|m| MethodDoc {
                        name: m.name.clone(),
                        hash: m.hash.clone(),
                    })
                    .collect(),
                total_calls: c.total_calls,
            })
            .collect(),
    }
}

// trace-file v1

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Span {
    pub trace_id: String,
    pub span_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_span_id: Option<String>,
    pub method_hash: String,
    pub start_nanos: i64,
    pub end_nanos: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceSet {
    pub spans: Vec<Span>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    version: u32,
    spans: Vec<Span>,
}

pub fn parse_traces(document: &[u8]) -> Result<TraceSet, IngestError> {
    let doc: TraceDoc = decode(document)?;
    check_version(doc.version)?;
    Ok(TraceSet { spans: doc.spans })
}

pub fn serialize_traces(traces: &TraceSet) -> String {
    let doc = TraceDoc {
        version: FORMAT_VERSION,
        spans: traces.spans.clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("trace document serializes");
    out.push('\n');
    out
}

/// Spans and span pairs that did not contribute to any link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SkipCounts {
    /// Spans whose method hash matches no method in the landscape.
    pub unresolved: usize,
    /// Spans whose parent is not part of the same trace.
    pub orphaned: usize,
    /// Spans with a duplicated span id or a negative duration.
    pub invalid: usize,
    /// Parent/child pairs within one class.
    pub self_calls: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aggregation {
    pub links: Vec<CommunicationLink>,
    pub skipped: SkipCounts,
}

/// Counts caller→callee span pairs per (source class, target class, callee
/// method). The result is sorted by source fqn, target fqn and method name,
/// so it does not depend on span order.
pub fn aggregate_traces(traces: &TraceSet, landscape: &Landscape) -> Aggregation {
    let index = landscape.index();
    let mut owner: HashMap<&str, (&EntityId, &str)> = HashMap::new();
    for class in landscape.classes() {
        for method in &class.methods {
            owner.insert(method.hash.as_str(), (&class.id, method.name.as_str()));
        }
    }

    let mut skipped = SkipCounts::default();
    let mut by_trace: BTreeMap<&str, HashMap<&str, Vec<&Span>>> = BTreeMap::new();
    for span in &traces.spans {
        by_trace
            .entry(span.trace_id.as_str())
            .or_default()
            .entry(span.span_id.as_str())
            .or_default()
            .push(span);
    }

    let mut counts: HashMap<(&EntityId, &EntityId, &str), u64> = HashMap::new();
    for spans in by_trace.values() {
        // A duplicated span id makes every span carrying it ambiguous.
        let mut valid: HashMap<&str, &Span> = HashMap::new();
        for (id, group) in spans {
            if group.len() == 1 && group[0].end_nanos >= group[0].start_nanos {
                valid.insert(id, group[0]);
            } else {
                skipped.invalid += group.len();
            }
        }
        for span in valid.values() {
            let child = owner.get(span.method_hash.as_str());
            if child.is_none() {
                skipped.unresolved += 1;
            }
            let Some(parent_id) = span.parent_span_id.as_deref() else {
                continue;
            };
            let Some(parent) = valid.get(parent_id) else {
                skipped.orphaned += 1;
                continue;
            };
            let (Some(&(child_class, method)), Some(&(parent_class, _))) =
                (child, owner.get(parent.method_hash.as_str()))
            else {
                continue;
            };
            if child_class == parent_class {
                skipped.self_calls += 1;
                continue;
            }
            *counts.entry((parent_class, child_class, method)).or_default() += 1;
        }
    }

    let fqn = |id: &EntityId| {
        index
            .resolve(id)
            .map(|r| r.fqn.clone())
            .expect("method owners come from the landscape")
    };
    let mut keyed: Vec<((String, String, String), CommunicationLink)> = counts
        .into_iter()
        .map(|((source, target, method), call_count)| {
            let (sf, tf) = (fqn(source), fqn(target));
            let link = CommunicationLink {
                id: base_link_id(&sf, &tf, method),
                source_class_id: source.clone(),
                target_class_id: target.clone(),
                method_name: method.to_owned(),
                call_count,
            };
            ((sf, tf, method.to_owned()), link)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Aggregation {
        links: keyed.into_iter().map(|(_, l)| l).collect(),
        skipped,
    }
}

/// Replaces the landscape's links and recomputes every class's
/// `total_calls` as the sum of incident call counts.
pub fn annotate_metrics(
    landscape: &Landscape,
    links: Vec<CommunicationLink>,
) -> Result<Landscape, IngestError> {
    let index = landscape.index();
    let mut totals: HashMap<EntityId, u64> = HashMap::new();
    for link in &links {
        for endpoint in [&link.source_class_id, &link.target_class_id] {
            match index.resolve(endpoint) {
                Ok(r) if r.kind == EntityKind::Class => {}
                _ => {
                    return Err(IngestError::DanglingLink {
                        link: link.id.clone(),
                        endpoint: endpoint.clone(),
                    })
                }
            }
            *totals.entry(endpoint.clone()).or_default() += link.call_count;
        }
    }
    let mut out = landscape.clone();
    for class in out.classes_mut() {
        class.total_calls = totals.get(&class.id).copied().unwrap_or(0);
    }
    out.links = links;
    Ok(out)
}
