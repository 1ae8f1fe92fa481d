//! The landscape: applications, package trees, classes and the aggregated
//! communication between classes.
//!
//! Values here are plain immutable data. Nodes carry simple names only; a
//! fully-qualified name is derived by joining the ancestor chain, so renames
//! never have to cascade through stored names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Prefix reserved for entities minted by the restructure engine.
pub const CREATED_ID_PREFIX: &str = "new-";

/// Opaque, stable identifier of an application, package, class or link.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_created(&self) -> bool {
        self.0.starts_with(CREATED_ID_PREFIX)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(value: &str) -> Self {
        Self(value.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(value: String) -> Self {
        Self(value)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Landscape {
    pub applications: Vec<Application>,
    #[serde(default)]
    pub links: Vec<CommunicationLink>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Application {
    pub id: EntityId,
    pub name: String,
    pub language: String,
    pub root_packages: Vec<Package>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Package {
    pub id: EntityId,
    pub name: String,
    pub sub_packages: Vec<Package>,
    pub classes: Vec<Class>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Class {
    pub id: EntityId,
    pub name: String,
    pub methods: Vec<Method>,
    /// Sum of call counts over all links incident to this class.
    pub total_calls: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Method {
    pub name: String,
    /// Matches trace spans to this method.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommunicationLink {
    pub id: EntityId,
    pub source_class_id: EntityId,
    pub target_class_id: EntityId,
    pub method_name: String,
    pub call_count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Application,
    Package,
    Class,
    Link,
}

impl EntityKind {
    pub fn label(self) -> &'static str {
        match self {
            EntityKind::Application => "application",
            EntityKind::Package => "package",
            EntityKind::Class => "class",
            EntityKind::Link => "link",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A resolved entity: its kind and the chain of ancestors leading to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityRef {
    pub kind: EntityKind,
    /// Ids from the application root down to and including the entity.
    /// For links this holds only the link id.
    pub path: Vec<EntityId>,
    pub fqn: String,
}

/// Joins an application name and the names below it into a
/// fully-qualified name: `shop/org.shop.Cart`.
pub fn join_fqn<S: AsRef<str>>(names: &[S]) -> String {
    match names.split_first() {
        None => String::new(),
        Some((app, [])) => app.as_ref().to_owned(),
        Some((app, rest)) => {
            let tail: Vec<&str> = rest.iter().map(AsRef::as_ref).collect();
            format!("{}/{}", app.as_ref(), tail.join("."))
        }
    }
}

/// Display label of a link given the two endpoint labels.
pub fn link_label(source: &str, target: &str, method: &str) -> String {
    format!("{source} → {target} ({method})")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    EmptyId,
    DuplicateId,
    ReservedIdPrefix,
    EmptyName,
    InvalidName,
    DuplicateApplicationName,
    DuplicateSiblingName,
    DuplicateMethodName,
    DuplicateMethodHash,
    DanglingLinkSource,
    DanglingLinkTarget,
    SelfLink,
    ZeroCallCount,
}

impl ViolationKind {
    pub fn reason(self) -> &'static str {
        match self {
            ViolationKind::EmptyId => "empty id",
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::ReservedIdPrefix => "reserved id prefix",
            ViolationKind::EmptyName => "empty name",
            ViolationKind::InvalidName => "invalid name",
            ViolationKind::DuplicateApplicationName => "duplicate application name",
            ViolationKind::DuplicateSiblingName => "duplicate sibling name",
            ViolationKind::DuplicateMethodName => "duplicate method name",
            ViolationKind::DuplicateMethodHash => "duplicate method hash",
            ViolationKind::DanglingLinkSource => "dangling link source",
            ViolationKind::DanglingLinkTarget => "dangling link target",
            ViolationKind::SelfLink => "self link",
            ViolationKind::ZeroCallCount => "zero call count",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub entity: EntityId,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at `{}`", self.kind.reason(), self.entity)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Validation for a base landscape: everything [`validate_landscape`]
/// checks, plus no id may use the prefix reserved for created entities.
pub fn validate_base_landscape(landscape: &Landscape) -> ValidationReport {
    let mut report = validate_landscape(landscape);
    let index = landscape.index();
    for id in index.ids().filter(|id| id.is_created()) {
        report.violations.push(Violation {
            entity: id.clone(),
            kind: ViolationKind::ReservedIdPrefix,
            detail: String::new(),
        });
    }
    report
}

/// Package and class names are simple names: no separators.
pub fn is_simple_name(name: &str) -> bool {
    !name.trim().is_empty() && !name.contains(['.', '/'])
}

/// Application names must not contain the fqn separator.
pub fn is_application_name(name: &str) -> bool {
    !name.trim().is_empty() && !name.contains('/')
}

/// Checks every structural invariant and returns all violations found.
pub fn validate_landscape(landscape: &Landscape) -> ValidationReport {
    let mut v = Validator::default();
    let mut app_names = BTreeSet::new();
    for app in &landscape.applications {
        v.check_id(&app.id);
        if !is_application_name(&app.name) {
            v.push(&app.id, bad_name_kind(&app.name), &app.name);
        }
        if !app_names.insert(app.name.as_str()) {
            v.push(&app.id, ViolationKind::DuplicateApplicationName, &app.name);
        }
        v.check_siblings(&app.id, &app.root_packages, &[]);
        for package in &app.root_packages {
            v.walk_package(package);
        }
    }
    for link in &landscape.links {
        v.check_id(&link.id);
        if !v.classes.contains(&link.source_class_id) {
            v.push(&link.id, ViolationKind::DanglingLinkSource, link.source_class_id.as_str());
        }
        if !v.classes.contains(&link.target_class_id) {
            v.push(&link.id, ViolationKind::DanglingLinkTarget, link.target_class_id.as_str());
        }
        if link.source_class_id == link.target_class_id {
            v.push(&link.id, ViolationKind::SelfLink, "");
        }
        if link.call_count == 0 {
            v.push(&link.id, ViolationKind::ZeroCallCount, "");
        }
    }
    ValidationReport { violations: v.violations }
}

fn bad_name_kind(name: &str) -> ViolationKind {
    if name.trim().is_empty() {
        ViolationKind::EmptyName
    } else {
        ViolationKind::InvalidName
    }
}

#[derive(Default)]
struct Validator<'a> {
    ids: BTreeSet<&'a EntityId>,
    classes: BTreeSet<&'a EntityId>,
    hashes: BTreeSet<&'a str>,
    violations: Vec<Violation>,
}

impl<'a> Validator<'a> {
    fn push(&mut self, entity: &EntityId, kind: ViolationKind, detail: &str) {
        self.violations.push(Violation {
            entity: entity.clone(),
            kind,
            detail: detail.to_owned(),
        });
    }

    fn check_id(&mut self, id: &'a EntityId) {
        if id.as_str().is_empty() {
            self.push(id, ViolationKind::EmptyId, "");
        }
        if !self.ids.insert(id) {
            self.push(id, ViolationKind::DuplicateId, "");
        }
    }

    fn check_siblings(&mut self, parent: &EntityId, packages: &[Package], classes: &[Class]) {
        let mut seen = BTreeSet::new();
        let names = packages
            .iter()
            .map(|p| p.name.as_str())
            .chain(classes.iter().map(|c| c.name.as_str()));
        for name in names {
            if !seen.insert(name) {
                self.push(parent, ViolationKind::DuplicateSiblingName, name);
            }
        }
    }

    fn walk_package(&mut self, package: &'a Package) {
        self.check_id(&package.id);
        if !is_simple_name(&package.name) {
            self.push(&package.id, bad_name_kind(&package.name), &package.name);
        }
        self.check_siblings(&package.id, &package.sub_packages, &package.classes);
        for class in &package.classes {
            self.check_id(&class.id);
            self.classes.insert(&class.id);
            if !is_simple_name(&class.name) {
                self.push(&class.id, bad_name_kind(&class.name), &class.name);
            }
            let mut method_names = BTreeSet::new();
            for method in &class.methods {
                if !method_names.insert(method.name.as_str()) {
                    self.push(&class.id, ViolationKind::DuplicateMethodName, &method.name);
                }
                if !self.hashes.insert(method.hash.as_str()) {
                    self.push(&class.id, ViolationKind::DuplicateMethodHash, &method.hash);
                }
            }
        }
        for sub in &package.sub_packages {
            self.walk_package(sub);
        }
    }
}

/// Lookup table from id to resolved entity, built by one traversal.
#[derive(Clone, Debug, Default)]
pub struct LandscapeIndex {
    entries: BTreeMap<EntityId, EntityRef>,
}

impl LandscapeIndex {
    pub fn build(landscape: &Landscape) -> Self {
        let mut entries = BTreeMap::new();
        for app in &landscape.applications {
            let path = vec![app.id.clone()];
            let names = vec![app.name.as_str()];
            entries.insert(
                app.id.clone(),
                EntityRef {
                    kind: EntityKind::Application,
                    path: path.clone(),
                    fqn: join_fqn(&names),
                },
            );
            for package in &app.root_packages {
                index_package(package, &path, &names, &mut entries);
            }
        }
        for link in &landscape.links {
            let label = |id: &EntityId| {
                entries
                    .get(id)
                    .map(|r: &EntityRef| r.fqn.clone())
                    .unwrap_or_else(|| id.to_string())
            };
            let fqn = link_label(
                &label(&link.source_class_id),
                &label(&link.target_class_id),
                &link.method_name,
            );
            entries.insert(
                link.id.clone(),
                EntityRef {
                    kind: EntityKind::Link,
                    path: vec![link.id.clone()],
                    fqn,
                },
            );
        }
        Self { entries }
    }

    pub fn resolve(&self, id: &EntityId) -> Result<&EntityRef, ModelError> {
        self.entries
            .get(id)
            .ok_or_else(|| ModelError::UnknownEntity(id.clone()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &EntityId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn index_package(
    package: &Package,
    parent_path: &[EntityId],
    parent_names: &[&str],
    out: &mut BTreeMap<EntityId, EntityRef>,
) {
    let mut path = parent_path.to_vec();
    path.push(package.id.clone());
    let mut names = parent_names.to_vec();
    names.push(&package.name);
    out.insert(
        package.id.clone(),
        EntityRef {
            kind: EntityKind::Package,
            path: path.clone(),
            fqn: join_fqn(&names),
        },
    );
    for class in &package.classes {
        let mut class_path = path.clone();
        class_path.push(class.id.clone());
        let mut class_names = names.clone();
        class_names.push(&class.name);
        out.insert(
            class.id.clone(),
            EntityRef {
                kind: EntityKind::Class,
                path: class_path,
                fqn: join_fqn(&class_names),
            },
        );
    }
    for sub in &package.sub_packages {
        index_package(sub, &path, &names, out);
    }
}

/// Resolves a single id. Builds a throwaway index; use [`LandscapeIndex`]
/// for repeated lookups.
pub fn resolve(landscape: &Landscape, id: &EntityId) -> Result<EntityRef, ModelError> {
    LandscapeIndex::build(landscape).resolve(id).cloned()
}

impl Landscape {
    pub fn index(&self) -> LandscapeIndex {
        LandscapeIndex::build(self)
    }

    /// All classes in document order.
    pub fn classes(&self) -> Vec<&Class> {
        fn collect<'a>(package: &'a Package, out: &mut Vec<&'a Class>) {
            out.extend(package.classes.iter());
            for sub in &package.sub_packages {
                collect(sub, out);
            }
        }
        let mut out = Vec::new();
        for app in &self.applications {
            for package in &app.root_packages {
                collect(package, &mut out);
            }
        }
        out
    }

    pub fn classes_mut(&mut self) -> Vec<&mut Class> {
        fn collect<'a>(package: &'a mut Package, out: &mut Vec<&'a mut Class>) {
            let Package {
                sub_packages,
                classes,
                ..
            } = package;
            out.extend(classes.iter_mut());
            for sub in sub_packages {
                collect(sub, out);
            }
        }
        let mut out = Vec::new();
        for app in &mut self.applications {
            for package in &mut app.root_packages {
                collect(package, &mut out);
            }
        }
        out
    }
}
