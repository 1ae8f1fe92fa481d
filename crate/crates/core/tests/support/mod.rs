//! A deliberately naive re-implementation of the change semantics: flat
//! vectors, linear scans, no indexes, no coalescing. Test suites compare the
//! engine against it.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cityplan_core::model::Landscape;
use cityplan_core::restructure::{ChangeOp, ChangelogEntry, EffectiveModel, NodeKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveNode {
    pub id: String,
    pub name: String,
    pub kind: &'static str,
    pub parent: Option<String>,
    pub created: bool,
    pub deleted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveLink {
    pub id: String,
    pub source: String,
    pub target: String,
    pub method: String,
    pub created: bool,
    pub cut: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Naive {
    pub nodes: Vec<NaiveNode>,
    pub links: Vec<NaiveLink>,
    pub marks: BTreeMap<String, &'static str>,
    pub minted: u64,
}

fn rank(mark: &str) -> u8 {
    match mark {
        "x-cross" | "stripe" => 4,
        "plus" | "plus-dashed" => 3,
        "arrow" => 2,
        "pencil" => 1,
        _ => 0,
    }
}

fn simple(name: &str) -> bool {
    !name.trim().is_empty() && !name.contains('.') && !name.contains('/')
}

fn app_name(name: &str) -> bool {
    !name.trim().is_empty() && !name.contains('/')
}

impl Naive {
    pub fn new(base: &Landscape) -> Self {
        let mut naive = Naive::default();
        for app in &base.applications {
            naive.push(app.id.as_str(), &app.name, "application", None, false);
            let mut stack: Vec<(&cityplan_core::model::Package, String)> = app
                .root_packages
                .iter()
                .map(|p| (p, app.id.as_str().to_owned()))
                .collect();
            while let Some((package, parent)) = stack.pop() {
                naive.push(package.id.as_str(), &package.name, "package", Some(parent), false);
                for class in &package.classes {
                    naive.push(
                        class.id.as_str(),
                        &class.name,
                        "class",
                        Some(package.id.as_str().to_owned()),
                        false,
                    );
                }
                for sub in &package.sub_packages {
                    stack.push((sub, package.id.as_str().to_owned()));
                }
            }
        }
        for link in &base.links {
            naive.links.push(NaiveLink {
                id: link.id.as_str().to_owned(),
                source: link.source_class_id.as_str().to_owned(),
                target: link.target_class_id.as_str().to_owned(),
                method: link.method_name.clone(),
                created: false,
                cut: false,
            });
        }
        naive
    }

    fn push(&mut self, id: &str, name: &str, kind: &'static str, parent: Option<String>, created: bool) {
        self.nodes.push(NaiveNode {
            id: id.to_owned(),
            name: name.to_owned(),
            kind,
            parent,
            created,
            deleted: false,
        });
    }

    fn find(&self, id: &str) -> Option<&NaiveNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn mark(&mut self, id: &str, mark: &'static str) {
        let current = self.marks.get(id).copied().unwrap_or("");
        if rank(mark) > rank(current) {
            self.marks.insert(id.to_owned(), mark);
        }
    }

    /// Node must exist, be live and have one of `kinds`.
    fn check(&self, id: &str, kinds: &[&str]) -> Result<NaiveNode, &'static str> {
        if let Some(link) = self.links.iter().find(|l| l.id == id) {
            return Err(if link.cut { "EntityDeleted" } else { "InvalidTarget" });
        }
        let node = self.find(id).ok_or("UnknownEntity")?;
        if node.deleted {
            return Err("EntityDeleted");
        }
        if !kinds.contains(&node.kind) {
            return Err("InvalidTarget");
        }
        Ok(node.clone())
    }

    fn sibling_has(&self, parent: Option<&str>, name: &str, except: Option<&str>) -> bool {
        self.nodes.iter().any(|n| {
            n.parent.as_deref() == parent && n.name == name && Some(n.id.as_str()) != except
        })
    }

    fn descendants(&self, id: &str) -> Vec<String> {
        let mut out = vec![id.to_owned()];
        let mut changed = true;
        while changed {
            changed = false;
            for n in &self.nodes {
                if let Some(p) = &n.parent {
                    if out.contains(p) && !out.contains(&n.id) {
                        out.push(n.id.clone());
                        changed = true;
                    }
                }
            }
        }
        out
    }

    fn drop_link(&mut self, id: &str) {
        let link = self.links.iter_mut().find(|l| l.id == id).expect("link");
        if link.created {
            self.links.retain(|l| l.id != id);
            self.marks.remove(id);
        } else {
            link.cut = true;
            self.mark(id, "stripe");
        }
    }

    /// Applies one op. `created` is the id to give a new entity; when absent
    /// the oracle mints `new-<n>` itself.
    pub fn apply(&mut self, op: &ChangeOp, created: Option<&str>) -> Result<(), &'static str> {
        let mut next = self.clone();
        next.apply_in_place(op, created)?;
        *self = next;
        Ok(())
    }

    fn mint(&mut self, created: Option<&str>) -> String {
        self.minted += 1;
        created.map(str::to_owned).unwrap_or_else(|| format!("new-{}", self.minted))
    }

    fn apply_in_place(&mut self, op: &ChangeOp, created: Option<&str>) -> Result<(), &'static str> {
        match op {
            ChangeOp::CreateApplication { name, language } => {
                if !app_name(name) || language.trim().is_empty() {
                    return Err("InvalidName");
                }
                if self.sibling_has(None, name, None) {
                    return Err("DuplicateName");
                }
                let id = self.mint(created);
                self.push(&id, name, "application", None, true);
                self.mark(&id, "plus");
            }
            ChangeOp::CreatePackage { parent_id, name } => {
                self.check(parent_id.as_str(), &["application", "package"])?;
                self.create_child(parent_id.as_str(), name, "package", created)?;
            }
            ChangeOp::CreateClass {
                parent_package_id,
                name,
            } => {
                self.check(parent_package_id.as_str(), &["package"])?;
                self.create_child(parent_package_id.as_str(), name, "class", created)?;
            }
            ChangeOp::RenameEntity { entity_id, new_name } => {
                let node = self.check(entity_id.as_str(), &["application", "package", "class"])?;
                let ok = if node.kind == "application" { app_name(new_name) } else { simple(new_name) };
                if !ok {
                    return Err("InvalidName");
                }
                if node.name == *new_name {
                    return Err("InvalidTarget");
                }
                if self.sibling_has(node.parent.as_deref(), new_name, Some(&node.id)) {
                    return Err("DuplicateName");
                }
                let n = self.nodes.iter_mut().find(|n| n.id == node.id).expect("node");
                n.name = new_name.clone();
                self.mark(&node.id, "pencil");
            }
            ChangeOp::MoveEntity {
                entity_id,
                new_parent_id,
            } => {
                let node = self.check(entity_id.as_str(), &["package", "class"])?;
                let parents: &[&str] = if node.kind == "class" { &["package"] } else { &["application", "package"] };
                self.check(new_parent_id.as_str(), parents)?;
                if self.descendants(&node.id).iter().any(|d| d == new_parent_id.as_str()) {
                    return Err("CyclicMove");
                }
                if node.parent.as_deref() == Some(new_parent_id.as_str()) {
                    return Err("InvalidTarget");
                }
                if self.sibling_has(Some(new_parent_id.as_str()), &node.name, Some(&node.id)) {
                    return Err("DuplicateName");
                }
                let n = self.nodes.iter_mut().find(|n| n.id == node.id).expect("node");
                n.parent = Some(new_parent_id.as_str().to_owned());
                self.mark(&node.id, "arrow");
            }
            ChangeOp::DeleteEntity { entity_id } => {
                let node = self.check(entity_id.as_str(), &["application", "package", "class"])?;
                let members = self.descendants(&node.id);
                let touching: Vec<String> = self
                    .links
                    .iter()
                    .filter(|l| members.contains(&l.source) || members.contains(&l.target))
                    .filter(|l| !l.cut)
                    .map(|l| l.id.clone())
                    .collect();
                if node.created {
                    if members.iter().any(|m| !self.find(m).expect("member").created) {
                        return Err("InvalidTarget");
                    }
                    for l in touching {
                        self.links.retain(|x| x.id != l);
                        self.marks.remove(&l);
                    }
                    self.nodes.retain(|n| !members.contains(&n.id));
                    for m in &members {
                        self.marks.remove(m);
                    }
                } else {
                    for l in touching {
                        self.drop_link(&l);
                    }
                    for m in &members {
                        self.nodes.iter_mut().find(|n| n.id == *m).expect("member").deleted = true;
                        self.mark(m, "x-cross");
                    }
                }
            }
            ChangeOp::CreateCommunication {
                source_class_id,
                target_class_id,
                method_name,
            } => {
                self.check(source_class_id.as_str(), &["class"])?;
                self.check(target_class_id.as_str(), &["class"])?;
                if source_class_id == target_class_id {
                    return Err("SelfCommunication");
                }
                if method_name.trim().is_empty() {
                    return Err("InvalidName");
                }
                let (s, t) = (source_class_id.as_str(), target_class_id.as_str());
                if self
                    .links
                    .iter()
                    .any(|l| !l.cut && l.source == s && l.target == t && l.method == *method_name)
                {
                    return Err("DuplicateName");
                }
                let id = self.mint(created);
                self.links.push(NaiveLink {
                    id: id.clone(),
                    source: s.to_owned(),
                    target: t.to_owned(),
                    method: method_name.clone(),
                    created: true,
                    cut: false,
                });
                self.mark(&id, "plus-dashed");
            }
            ChangeOp::CutCommunication { link_id } => {
                let Some(link) = self.links.iter().find(|l| l.id == link_id.as_str()) else {
                    return Err(if self.find(link_id.as_str()).map(|n| n.deleted) == Some(true) {
                        "EntityDeleted"
                    } else if self.find(link_id.as_str()).is_some() {
                        "InvalidTarget"
                    } else {
                        "UnknownEntity"
                    });
                };
                if link.cut {
                    return Err("EntityDeleted");
                }
                self.drop_link(link_id.as_str());
            }
        }
        Ok(())
    }

    fn create_child(
        &mut self,
        parent: &str,
        name: &str,
        kind: &'static str,
        created: Option<&str>,
    ) -> Result<(), &'static str> {
        if !simple(name) {
            return Err("InvalidName");
        }
        if self.sibling_has(Some(parent), name, None) {
            return Err("DuplicateName");
        }
        let id = self.mint(created);
        self.push(&id, name, kind, Some(parent.to_owned()), true);
        self.mark(&id, "plus");
        Ok(())
    }

    /// Folds a ledger over `base`.
    pub fn fold(base: &Landscape, entries: &[ChangelogEntry]) -> Result<Self, String> {
        let mut naive = Naive::new(base);
        for entry in entries {
            naive
                .apply(&entry.op, entry.created_entity_id.as_ref().map(|id| id.as_str()))
                .map_err(|e| format!("entry {}: {e}", entry.id))?;
        }
        Ok(naive)
    }

    /// Sorted structural dump (no marks).
    pub fn dump(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .nodes
            .iter()
            .map(|n| {
                format!(
                    "node {} {} {} {} {} {}",
                    n.id,
                    n.name,
                    n.kind,
                    n.parent.as_deref().unwrap_or("-"),
                    n.created,
                    n.deleted
                )
            })
            .chain(self.links.iter().map(|l| {
                format!("link {} {} {} {} {} {}", l.id, l.source, l.target, l.method, l.created, l.cut)
            }))
            .collect();
        out.sort();
        out
    }

    pub fn mark_dump(&self) -> Vec<String> {
        self.marks.iter().map(|(id, m)| format!("{id} {m}")).collect()
    }
}

/// The same dump shape taken from an engine model.
pub fn engine_dump(model: &EffectiveModel) -> Vec<String> {
    let mut out: Vec<String> = model
        .nodes()
        .map(|(id, n)| {
            let kind = match n.kind {
                NodeKind::Application { .. } => "application",
                NodeKind::Package => "package",
                NodeKind::Class { .. } => "class",
            };
            format!(
                "node {} {} {} {} {} {}",
                id,
                n.name,
                kind,
                n.parent.as_ref().map(|p| p.as_str()).unwrap_or("-"),
                n.created,
                n.deleted
            )
        })
        .chain(model.links().map(|(id, l)| {
            format!(
                "link {} {} {} {} {} {}",
                id, l.source, l.target, l.method_name, l.created, l.cut
            )
        }))
        .collect();
    out.sort();
    out
}

pub fn engine_mark_dump(model: &EffectiveModel) -> Vec<String> {
    model
        .marks()
        .iter()
        .map(|m| format!("{} {}", m.entity_id, m.mark.texture()))
        .collect()
}
