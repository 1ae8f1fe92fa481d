//! The landscape as seen through a changelog: base entities with renames and
//! moves applied, created entities added, deleted ones still present but
//! flagged.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::error::ChangeError;
use super::op::{ChangeOp, EntryId, Mark, ModificationMark};
use crate::model::{
    is_application_name, is_simple_name, join_fqn, link_label, validate_base_landscape,
    Application, Class, CommunicationLink, EntityId, EntityKind, Landscape, Method, Package,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum NodeKind {
    Application { language: String },
    Package,
    Class { methods: Vec<Method>, total_calls: u64 },
}

impl NodeKind {
    pub fn entity_kind(&self) -> EntityKind {
        match self {
            NodeKind::Application { .. } => EntityKind::Application,
            NodeKind::Package => EntityKind::Package,
            NodeKind::Class { .. } => EntityKind::Class,
        }
    }
}

/// Sort key that keeps siblings in a stable order no matter how the
/// changelog was coalesced: base entities in document order, then created
/// entities by ordinal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct OrderKey(u8, u64);

impl OrderKey {
    fn base(index: usize) -> Self {
        Self(0, index as u64)
    }

    fn created(id: &EntityId) -> Self {
        let ordinal = id
            .as_str()
            .strip_prefix(crate::model::CREATED_ID_PREFIX)
            .and_then(|n| n.parse().ok())
            .unwrap_or(u64::MAX);
        Self(1, ordinal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub parent: Option<EntityId>,
    pub created: bool,
    pub deleted: bool,
    #[serde(skip)]
    order: OrderKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkState {
    pub source: EntityId,
    pub target: EntityId,
    pub method_name: String,
    pub call_count: u64,
    pub created: bool,
    pub cut: bool,
    #[serde(skip)]
    order: OrderKey,
}

/// Pre-image facts about an entry, captured when it was applied; used to
/// render changelog summaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntryContext {
    pub kind: Option<EntityKind>,
    pub name: String,
    pub fqn: String,
    /// Parent of a created entity, or the old parent of a moved one.
    pub parent_fqn: String,
    /// New parent of a moved entity.
    pub new_parent_fqn: String,
    /// `Source → Target (method)` for communication entries.
    pub link: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EffectiveModel {
    nodes: BTreeMap<EntityId, Node>,
    children: BTreeMap<EntityId, BTreeSet<EntityId>>,
    apps: BTreeSet<EntityId>,
    links: BTreeMap<EntityId, LinkState>,
    marks: BTreeMap<EntityId, Mark>,
    contexts: BTreeMap<EntryId, EntryContext>,
}

#[derive(Serialize)]
struct Canonical<'a> {
    nodes: &'a BTreeMap<EntityId, Node>,
    links: &'a BTreeMap<EntityId, LinkState>,
    marks: &'a BTreeMap<EntityId, Mark>,
}

impl EffectiveModel {
    /// Builds the model of an unmodified base landscape.
    pub fn from_landscape(base: &Landscape) -> Result<Self, ChangeError> {
        let report = validate_base_landscape(base);
        if !report.is_valid() {
            return Err(ChangeError::InvalidModel(report));
        }
        let mut model = Self::default();
        let mut counter = 0usize;
        for app in &base.applications {
            model.insert_node(
                app.id.clone(),
                Node {
                    name: app.name.clone(),
                    kind: NodeKind::Application {
                        language: app.language.clone(),
                    },
                    parent: None,
                    created: false,
                    deleted: false,
                    order: OrderKey::base(counter),
                },
            );
            counter += 1;
            for package in &app.root_packages {
                model.insert_base_package(package, &app.id, &mut counter);
            }
        }
        for (i, link) in base.links.iter().enumerate() {
            model.links.insert(
                link.id.clone(),
                LinkState {
                    source: link.source_class_id.clone(),
                    target: link.target_class_id.clone(),
                    method_name: link.method_name.clone(),
                    call_count: link.call_count,
                    created: false,
                    cut: false,
                    order: OrderKey::base(i),
                },
            );
        }
        Ok(model)
    }

    fn insert_base_package(&mut self, package: &Package, parent: &EntityId, counter: &mut usize) {
        self.insert_node(
            package.id.clone(),
            Node {
                name: package.name.clone(),
                kind: NodeKind::Package,
                parent: Some(parent.clone()),
                created: false,
                deleted: false,
                order: OrderKey::base(*counter),
            },
        );
        *counter += 1;
        for sub in &package.sub_packages {
            self.insert_base_package(sub, &package.id, counter);
        }
        for class in &package.classes {
            self.insert_node(
                class.id.clone(),
                Node {
                    name: class.name.clone(),
                    kind: NodeKind::Class {
                        methods: class.methods.clone(),
                        total_calls: class.total_calls,
                    },
                    parent: Some(package.id.clone()),
                    created: false,
                    deleted: false,
                    order: OrderKey::base(*counter),
                },
            );
            *counter += 1;
        }
    }

    fn insert_node(&mut self, id: EntityId, node: Node) {
        match &node.parent {
            Some(parent) => {
                self.children
                    .entry(parent.clone())
                    .or_default()
                    .insert(id.clone());
            }
            None => {
                self.apps.insert(id.clone());
            }
        }
        self.nodes.insert(id, node);
    }

    fn remove_node(&mut self, id: &EntityId) {
        if let Some(node) = self.nodes.remove(id) {
            match &node.parent {
                Some(parent) => {
                    if let Some(set) = self.children.get_mut(parent) {
                        set.remove(id);
                    }
                }
                None => {
                    self.apps.remove(id);
                }
            }
        }
        self.children.remove(id);
        self.marks.remove(id);
    }

    pub fn node(&self, id: &EntityId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn link(&self, id: &EntityId) -> Option<&LinkState> {
        self.links.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&EntityId, &Node)> {
        self.nodes.iter()
    }

    pub fn links(&self) -> impl Iterator<Item = (&EntityId, &LinkState)> {
        self.links.iter()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.nodes.contains_key(id) || self.links.contains_key(id)
    }

    pub fn kind_of(&self, id: &EntityId) -> Option<EntityKind> {
        if let Some(node) = self.nodes.get(id) {
            Some(node.kind.entity_kind())
        } else if self.links.contains_key(id) {
            Some(EntityKind::Link)
        } else {
            None
        }
    }

    /// Deleted node or cut link.
    pub fn is_deleted(&self, id: &EntityId) -> bool {
        self.nodes.get(id).is_some_and(|n| n.deleted) || self.links.get(id).is_some_and(|l| l.cut)
    }

    pub fn marks(&self) -> Vec<ModificationMark> {
        self.marks
            .iter()
            .map(|(id, mark)| ModificationMark {
                entity_id: id.clone(),
                mark: *mark,
            })
            .collect()
    }

    pub fn mark_of(&self, id: &EntityId) -> Option<Mark> {
        self.marks.get(id).copied()
    }

    pub fn context(&self, entry: EntryId) -> Option<&EntryContext> {
        self.contexts.get(&entry)
    }

    pub(crate) fn record_context(&mut self, entry: EntryId, context: EntryContext) {
        self.contexts.insert(entry, context);
    }

    /// Nodes and links, ignoring marks and summary contexts.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.links == other.links
    }

    /// Deterministic JSON of nodes, links and marks.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&Canonical {
            nodes: &self.nodes,
            links: &self.links,
            marks: &self.marks,
        })
        .expect("model serializes")
    }

    pub fn fqn(&self, id: &EntityId) -> String {
        let mut names = Vec::new();
        let mut cursor = self.nodes.get(id).map(|n| (id, n));
        while let Some((_, node)) = cursor {
            names.push(node.name.as_str());
            cursor = node
                .parent
                .as_ref()
                .and_then(|p| self.nodes.get(p).map(|n| (p, n)));
        }
        names.reverse();
        join_fqn(&names)
    }

    fn name_of(&self, id: &EntityId) -> &str {
        self.nodes.get(id).map(|n| n.name.as_str()).unwrap_or("?")
    }

    /// Label with simple class names, as shown in the changelog.
    pub fn link_display(&self, id: &EntityId) -> String {
        match self.links.get(id) {
            Some(l) => link_label(self.name_of(&l.source), self.name_of(&l.target), &l.method_name),
            None => id.to_string(),
        }
    }

    /// Label with fully-qualified class names.
    pub fn link_fqn(&self, id: &EntityId) -> String {
        match self.links.get(id) {
            Some(l) => link_label(&self.fqn(&l.source), &self.fqn(&l.target), &l.method_name),
            None => id.to_string(),
        }
    }

    /// The node and all its descendants, parent before children.
    pub fn subtree(&self, id: &EntityId) -> Vec<EntityId> {
        let mut out = vec![id.clone()];
        let mut i = 0;
        while i < out.len() {
            if let Some(kids) = self.children.get(&out[i]) {
                out.extend(kids.iter().cloned());
            }
            i += 1;
        }
        out
    }

    /// Live links with an endpoint inside the subtree of `id`, ordered by
    /// fully-qualified label.
    pub fn live_incident_links(&self, id: &EntityId) -> Vec<EntityId> {
        let members: BTreeSet<EntityId> = self.subtree(id).into_iter().collect();
        let mut links: Vec<(String, EntityId)> = self
            .links
            .iter()
            .filter(|(_, l)| !l.cut && (members.contains(&l.source) || members.contains(&l.target)))
            .map(|(lid, _)| (self.link_fqn(lid), lid.clone()))
            .collect();
        links.sort();
        links.into_iter().map(|(_, id)| id).collect()
    }

    fn name_taken(&self, parent: Option<&EntityId>, name: &str, except: Option<&EntityId>) -> bool {
        let empty = BTreeSet::new();
        let siblings = match parent {
            Some(p) => self.children.get(p).unwrap_or(&empty),
            None => &self.apps,
        };
        siblings
            .iter()
            .filter(|id| Some(*id) != except)
            .any(|id| self.nodes[id].name == name)
    }

    fn is_ancestor_or_self(&self, ancestor: &EntityId, id: &EntityId) -> bool {
        let mut cursor = Some(id);
        while let Some(current) = cursor {
            if current == ancestor {
                return true;
            }
            cursor = self.nodes.get(current).and_then(|n| n.parent.as_ref());
        }
        false
    }

    /// Resolves a node that an op may act on.
    fn live_node(&self, id: &EntityId, allowed: &[EntityKind], op: &str) -> Result<&Node, ChangeError> {
        if self.is_deleted(id) {
            return Err(ChangeError::EntityDeleted(id.clone()));
        }
        match self.kind_of(id) {
            None => Err(ChangeError::UnknownEntity(id.clone())),
            Some(kind) if !allowed.contains(&kind) => Err(ChangeError::InvalidTarget(format!(
                "{op} does not apply to {kind} `{id}`"
            ))),
            Some(_) => Ok(&self.nodes[id]),
        }
    }

    fn set_mark(&mut self, id: &EntityId, mark: Mark) {
        let slot = self.marks.entry(id.clone()).or_insert(mark);
        if mark.precedence() > slot.precedence() {
            *slot = mark;
        }
    }

    /// Validates `op` against the current state and applies it.
    /// `created_id` must be given exactly for ops that create an entity.
    /// On error the model is left unchanged.
    pub fn apply_op(
        &mut self,
        op: &ChangeOp,
        created_id: Option<&EntityId>,
    ) -> Result<EntryContext, ChangeError> {
        if op.creates_entity() != created_id.is_some() {
            return Err(ChangeError::CorruptLedger {
                entry: None,
                reason: format!("{} carries an unexpected created entity id", op.name()),
            });
        }
        if let Some(id) = created_id {
            if self.contains(id) {
                return Err(ChangeError::CorruptLedger {
                    entry: None,
                    reason: format!("created id `{id}` already exists"),
                });
            }
        }
        use EntityKind::{Application as App, Class as Cls, Package as Pkg};
        match op {
            ChangeOp::CreateApplication { name, language } => {
                if !is_application_name(name) {
                    return Err(ChangeError::InvalidName(name.clone()));
                }
                if language.trim().is_empty() {
                    return Err(ChangeError::InvalidName(language.clone()));
                }
                if self.name_taken(None, name, None) {
                    return Err(ChangeError::DuplicateName(name.clone()));
                }
                let id = created_id.expect("checked above").clone();
                self.insert_created(&id, name, NodeKind::Application { language: language.clone() }, None);
                Ok(EntryContext {
                    kind: Some(App),
                    name: name.clone(),
                    fqn: name.clone(),
                    ..Default::default()
                })
            }
            ChangeOp::CreatePackage { parent_id, name } => {
                self.create_in(parent_id, name, &[App, Pkg], NodeKind::Package, created_id, op)
            }
            ChangeOp::CreateClass {
                parent_package_id,
                name,
            } => self.create_in(
                parent_package_id,
                name,
                &[Pkg],
                NodeKind::Class {
                    methods: vec![],
                    total_calls: 0,
                },
                created_id,
                op,
            ),
            ChangeOp::RenameEntity {
                entity_id,
                new_name,
            } => {
                let node = self.live_node(entity_id, &[App, Pkg, Cls], op.name())?;
                let kind = node.kind.entity_kind();
                let valid = match kind {
                    App => is_application_name(new_name),
                    _ => is_simple_name(new_name),
                };
                if !valid {
                    return Err(ChangeError::InvalidName(new_name.clone()));
                }
                if node.name == *new_name {
                    return Err(ChangeError::InvalidTarget(format!(
                        "`{entity_id}` is already named `{new_name}`"
                    )));
                }
                if self.name_taken(node.parent.as_ref(), new_name, Some(entity_id)) {
                    return Err(ChangeError::DuplicateName(new_name.clone()));
                }
                let ctx = EntryContext {
                    kind: Some(kind),
                    name: node.name.clone(),
                    fqn: self.fqn(entity_id),
                    ..Default::default()
                };
                self.nodes.get_mut(entity_id).expect("resolved").name = new_name.clone();
                self.set_mark(entity_id, Mark::Renamed);
                Ok(ctx)
            }
            ChangeOp::MoveEntity {
                entity_id,
                new_parent_id,
            } => {
                let node = self.live_node(entity_id, &[Pkg, Cls], op.name())?;
                let kind = node.kind.entity_kind();
                let allowed_parents: &[EntityKind] = if kind == Cls { &[Pkg] } else { &[App, Pkg] };
                self.live_node(new_parent_id, allowed_parents, "MoveEntity target")?;
                if self.is_ancestor_or_self(entity_id, new_parent_id) {
                    return Err(ChangeError::CyclicMove {
                        entity: entity_id.clone(),
                        target: new_parent_id.clone(),
                    });
                }
                let node = &self.nodes[entity_id];
                let old_parent = node.parent.clone().expect("packages and classes have parents");
                if old_parent == *new_parent_id {
                    return Err(ChangeError::InvalidTarget(format!(
                        "`{entity_id}` is already in `{new_parent_id}`"
                    )));
                }
                if self.name_taken(Some(new_parent_id), &node.name, Some(entity_id)) {
                    return Err(ChangeError::DuplicateName(node.name.clone()));
                }
                let ctx = EntryContext {
                    kind: Some(kind),
                    name: node.name.clone(),
                    fqn: self.fqn(entity_id),
                    parent_fqn: self.fqn(&old_parent),
                    new_parent_fqn: self.fqn(new_parent_id),
                    link: String::new(),
                };
                if let Some(set) = self.children.get_mut(&old_parent) {
                    set.remove(entity_id);
                }
                self.children
                    .entry(new_parent_id.clone())
                    .or_default()
                    .insert(entity_id.clone());
                self.nodes.get_mut(entity_id).expect("resolved").parent = Some(new_parent_id.clone());
                self.set_mark(entity_id, Mark::Moved);
                Ok(ctx)
            }
            ChangeOp::DeleteEntity { entity_id } => {
                let node = self.live_node(entity_id, &[App, Pkg, Cls], op.name())?;
                let ctx = EntryContext {
                    kind: Some(node.kind.entity_kind()),
                    name: node.name.clone(),
                    fqn: self.fqn(entity_id),
                    ..Default::default()
                };
                let members = self.subtree(entity_id);
                let incident = self.live_incident_links(entity_id);
                if node.created {
                    if let Some(original) = members.iter().find(|m| !self.nodes[*m].created) {
                        return Err(ChangeError::InvalidTarget(format!(
                            "created `{entity_id}` still contains original entity `{original}`; move it out first"
                        )));
                    }
                    let members: BTreeSet<EntityId> = members.into_iter().collect();
                    let doomed: Vec<EntityId> = self
                        .links
                        .iter()
                        .filter(|(_, l)| members.contains(&l.source) || members.contains(&l.target))
                        .map(|(id, _)| id.clone())
                        .collect();
                    for link in doomed {
                        self.links.remove(&link);
                        self.marks.remove(&link);
                    }
                    for member in members.iter().rev() {
                        self.remove_node(member);
                    }
                } else {
                    for link in incident {
                        self.cut_link(&link);
                    }
                    for member in members {
                        self.nodes.get_mut(&member).expect("subtree member").deleted = true;
                        self.set_mark(&member, Mark::Deleted);
                    }
                }
                Ok(ctx)
            }
            ChangeOp::CreateCommunication {
                source_class_id,
                target_class_id,
                method_name,
            } => {
                self.live_node(source_class_id, &[Cls], op.name())?;
                self.live_node(target_class_id, &[Cls], op.name())?;
                if source_class_id == target_class_id {
                    return Err(ChangeError::SelfCommunication(source_class_id.clone()));
                }
                if method_name.trim().is_empty() {
                    return Err(ChangeError::InvalidName(method_name.clone()));
                }
                let duplicate = self.links.values().any(|l| {
                    !l.cut
                        && l.source == *source_class_id
                        && l.target == *target_class_id
                        && l.method_name == *method_name
                });
                if duplicate {
                    return Err(ChangeError::DuplicateName(method_name.clone()));
                }
                let id = created_id.expect("checked above").clone();
                self.links.insert(
                    id.clone(),
                    LinkState {
                        source: source_class_id.clone(),
                        target: target_class_id.clone(),
                        method_name: method_name.clone(),
                        call_count: 1,
                        created: true,
                        cut: false,
                        order: OrderKey::created(&id),
                    },
                );
                self.set_mark(&id, Mark::LinkCreated);
                Ok(EntryContext {
                    kind: Some(EntityKind::Link),
                    link: self.link_display(&id),
                    fqn: self.link_fqn(&id),
                    ..Default::default()
                })
            }
            ChangeOp::CutCommunication { link_id } => {
                if self.is_deleted(link_id) {
                    return Err(ChangeError::EntityDeleted(link_id.clone()));
                }
                match self.kind_of(link_id) {
                    None => return Err(ChangeError::UnknownEntity(link_id.clone())),
                    Some(EntityKind::Link) => {}
                    Some(kind) => {
                        return Err(ChangeError::InvalidTarget(format!(
                            "CutCommunication does not apply to {kind} `{link_id}`"
                        )))
                    }
                }
                let ctx = EntryContext {
                    kind: Some(EntityKind::Link),
                    link: self.link_display(link_id),
                    fqn: self.link_fqn(link_id),
                    ..Default::default()
                };
                self.cut_link(link_id);
                Ok(ctx)
            }
        }
    }

    fn cut_link(&mut self, id: &EntityId) {
        let created = self.links[id].created;
        if created {
            self.links.remove(id);
            self.marks.remove(id);
        } else {
            self.links.get_mut(id).expect("live link").cut = true;
            self.set_mark(id, Mark::LinkCut);
        }
    }

    fn insert_created(&mut self, id: &EntityId, name: &str, kind: NodeKind, parent: Option<EntityId>) {
        self.insert_node(
            id.clone(),
            Node {
                name: name.to_owned(),
                kind,
                parent,
                created: true,
                deleted: false,
                order: OrderKey::created(id),
            },
        );
        self.set_mark(id, Mark::Created);
    }

    fn create_in(
        &mut self,
        parent: &EntityId,
        name: &str,
        allowed: &[EntityKind],
        kind: NodeKind,
        created_id: Option<&EntityId>,
        op: &ChangeOp,
    ) -> Result<EntryContext, ChangeError> {
        self.live_node(parent, allowed, op.name())?;
        if !is_simple_name(name) {
            return Err(ChangeError::InvalidName(name.to_owned()));
        }
        if self.name_taken(Some(parent), name, None) {
            return Err(ChangeError::DuplicateName(name.to_owned()));
        }
        let entity_kind = kind.entity_kind();
        let id = created_id.expect("create ops carry an id").clone();
        self.insert_created(&id, name, kind, Some(parent.clone()));
        Ok(EntryContext {
            kind: Some(entity_kind),
            name: name.to_owned(),
            fqn: self.fqn(&id),
            parent_fqn: self.fqn(parent),
            ..Default::default()
        })
    }

    /// Projects the model onto a plain landscape (deleted entities included,
    /// cut links included) for layout.
    pub fn to_landscape(&self) -> Landscape {
        let applications = self
            .sorted(&self.apps)
            .into_iter()
            .map(|id| {
                let node = &self.nodes[id];
                let language = match &node.kind {
                    NodeKind::Application { language } => language.clone(),
                    _ => unreachable!("roots are applications"),
                };
                Application {
                    id: id.clone(),
                    name: node.name.clone(),
                    language,
                    root_packages: self.packages_under(id),
                }
            })
            .collect();
        let mut links: Vec<(&EntityId, &LinkState)> = self.links.iter().collect();
        links.sort_by_key(|(_, l)| l.order);
        Landscape {
            applications,
            links: links
                .into_iter()
                .map(|(id, l)| CommunicationLink {
                    id: id.clone(),
                    source_class_id: l.source.clone(),
                    target_class_id: l.target.clone(),
                    method_name: l.method_name.clone(),
                    call_count: l.call_count,
                })
                .collect(),
        }
    }

    fn sorted<'a>(&self, ids: &'a BTreeSet<EntityId>) -> Vec<&'a EntityId> {
        let mut v: Vec<&EntityId> = ids.iter().collect();
        v.sort_by_key(|id| self.nodes[*id].order);
        v
    }

    fn packages_under(&self, parent: &EntityId) -> Vec<Package> {
        let Some(kids) = self.children.get(parent) else {
            return vec![];
        };
        self.sorted(kids)
            .into_iter()
            .filter(|id| matches!(self.nodes[*id].kind, NodeKind::Package))
            .map(|id| {
                let classes = self
                    .children
                    .get(id)
                    .map(|k| {
                        self.sorted(k)
                            .into_iter()
                            .filter_map(|cid| match &self.nodes[cid].kind {
                                NodeKind::Class {
                                    methods,
                                    total_calls,
                                } => Some(Class {
                                    id: cid.clone(),
                                    name: self.nodes[cid].name.clone(),
                                    methods: methods.clone(),
                                    total_calls: *total_calls,
                                }),
                                _ => None,
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                Package {
                    id: id.clone(),
                    name: self.nodes[id].name.clone(),
                    sub_packages: self.packages_under(id),
                    classes,
                }
            })
            .collect()
    }
}
