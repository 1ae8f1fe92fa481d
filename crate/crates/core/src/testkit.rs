//! Fixtures and random generators shared by test suites.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ingest::{annotate_metrics, parse_structure};
use crate::model::{CommunicationLink, EntityId, EntityKind, Landscape};
use crate::restructure::{ChangeOp, EffectiveModel};

/// `shop` (org.shop with Cart, Order and a util subpackage) and `pay`.
/// Cart has exactly one incident link (Cart → Order).
pub const SHOP_STRUCTURE: &str = r#"{
  "version": 1,
  "applications": [
    { "name": "shop", "language": "java", "packages": [
      { "name": "org", "subPackages": [
        { "name": "shop", "subPackages": [
          { "name": "util", "classes": [ { "name": "Helper", "methods": [ { "name": "format", "hash": "h-format" } ] } ] }
        ], "classes": [
          { "name": "Cart", "methods": [ { "name": "checkout", "hash": "h-checkout" }, { "name": "add", "hash": "h-add" } ] },
          { "name": "Order", "methods": [ { "name": "create", "hash": "h-create" } ] }
        ] }
      ] }
    ] },
    { "name": "pay", "language": "go", "packages": [
      { "name": "pay", "classes": [ { "name": "Ledger", "methods": [ { "name": "charge", "hash": "h-charge" } ] } ] }
    ] }
  ]
}"#;

pub const CART: &str = "base-shop/org.shop.Cart";
pub const ORDER: &str = "base-shop/org.shop.Order";
pub const HELPER: &str = "base-shop/org.shop.util.Helper";
pub const LEDGER: &str = "base-pay/pay.Ledger";
pub const SHOP_APP: &str = "base-shop";
pub const ORG: &str = "base-shop/org";
pub const ORG_SHOP: &str = "base-shop/org.shop";
pub const UTIL: &str = "base-shop/org.shop.util";
pub const PAY_PKG: &str = "base-pay/pay";
pub const CART_ORDER_LINK: &str = "link-cart-order";
pub const ORDER_LEDGER_LINK: &str = "link-order-ledger";

pub fn id(s: &str) -> EntityId {
    EntityId::from(s)
}

pub fn shop_landscape() -> Landscape {
    let base = parse_structure(SHOP_STRUCTURE.as_bytes()).expect("shop fixture parses");
    let links = vec![
        CommunicationLink {
            id: id(CART_ORDER_LINK),
            source_class_id: id(CART),
            target_class_id: id(ORDER),
            method_name: "create".into(),
            call_count: 3,
        },
        CommunicationLink {
            id: id(ORDER_LEDGER_LINK),
            source_class_id: id(ORDER),
            target_class_id: id(LEDGER),
            method_name: "charge".into(),
            call_count: 2,
        },
    ];
    annotate_metrics(&base, links).expect("shop links resolve")
}

/// Repository-level `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn petclinic_landscape() -> Landscape {
    let bytes = std::fs::read(fixtures_dir().join("mini.json")).expect("fixtures/mini.json");
    parse_structure(&bytes).expect("petclinic fixture parses")
}

const NAMES: &[&str] = &["A", "B", "C", "Cart", "Order", "util", "Billing", "core"];
const METHODS: &[&str] = &["call", "create", "notify"];

fn pick<'a, R: Rng>(rng: &mut R, ids: &'a [EntityId]) -> Option<&'a EntityId> {
    ids.choose(rng)
}

/// A random op over the entities currently in `model`. Roughly half of the
/// generated ops are invalid (wrong kinds, deleted targets, name clashes,
/// cycles), which exercises rejection paths as well.
pub fn random_op<R: Rng>(rng: &mut R, model: &EffectiveModel) -> ChangeOp {
    let of_kind = |kinds: &[EntityKind]| -> Vec<EntityId> {
        model
            .nodes()
            .filter(|(_, n)| kinds.contains(&n.kind.entity_kind()))
            .map(|(id, _)| id.clone())
            .collect()
    };
    let apps = of_kind(&[EntityKind::Application]);
    let packages = of_kind(&[EntityKind::Package]);
    let containers = of_kind(&[EntityKind::Application, EntityKind::Package]);
    let classes = of_kind(&[EntityKind::Class]);
    let movable = of_kind(&[EntityKind::Package, EntityKind::Class]);
    let all = of_kind(&[EntityKind::Application, EntityKind::Package, EntityKind::Class]);
    let links: Vec<EntityId> = model.links().map(|(id, _)| id.clone()).collect();
    let name = |rng: &mut R| NAMES.choose(rng).expect("names").to_string();
    let fallback = || EntityId::from("missing");

    loop {
        let op = match rng.gen_range(0..20) {
            0 => ChangeOp::CreateApplication {
                name: name(rng).to_lowercase(),
                language: "java".into(),
            },
            1..=3 => ChangeOp::CreatePackage {
                parent_id: pick(rng, &containers).cloned().unwrap_or_else(fallback),
                name: name(rng).to_lowercase(),
            },
            4..=6 => ChangeOp::CreateClass {
                parent_package_id: pick(rng, &packages).cloned().unwrap_or_else(fallback),
                name: name(rng),
            },
            7..=8 => ChangeOp::RenameEntity {
                entity_id: pick(rng, &all).cloned().unwrap_or_else(fallback),
                new_name: name(rng),
            },
            9..=11 => ChangeOp::MoveEntity {
                entity_id: pick(rng, &movable).cloned().unwrap_or_else(fallback),
                new_parent_id: pick(rng, &containers).cloned().unwrap_or_else(fallback),
            },
            12..=14 => ChangeOp::DeleteEntity {
                entity_id: pick(rng, &all).cloned().unwrap_or_else(fallback),
            },
            15..=17 => ChangeOp::CreateCommunication {
                source_class_id: pick(rng, &classes).cloned().unwrap_or_else(fallback),
                target_class_id: pick(rng, &classes).cloned().unwrap_or_else(fallback),
                method_name: METHODS.choose(rng).expect("methods").to_string(),
            },
            _ => ChangeOp::CutCommunication {
                link_id: pick(rng, &links).cloned().unwrap_or_else(fallback),
            },
        };
        if apps.is_empty() && !matches!(op, ChangeOp::CreateApplication { .. }) && rng.gen_bool(0.5) {
            continue;
        }
        return op;
    }
}

/// A random valid landscape with ids minted from fqns (as parsing would).
/// At most `max_classes` classes; package nesting at most `max_depth`.
pub fn random_landscape<R: Rng>(rng: &mut R, max_classes: usize, max_depth: usize) -> Landscape {
    use crate::ingest::{base_id, base_link_id};
    use crate::model::{join_fqn, Application, Class, Method, Package};

    struct Gen<'r, R> {
        rng: &'r mut R,
        classes_left: usize,
        max_depth: usize,
        hash_counter: usize,
        classes: Vec<(EntityId, String)>,
    }

    impl<R: Rng> Gen<'_, R> {
        fn package(&mut self, names: &[String], depth: usize) -> Package {
            let fqn = join_fqn(names);
            let mut package = Package {
                id: base_id(&fqn),
                name: names.last().expect("package name").clone(),
                sub_packages: vec![],
                classes: vec![],
            };
            let class_count = self.rng.gen_range(0..=4).min(self.classes_left);
            self.classes_left -= class_count;
            for i in 0..class_count {
                let mut class_names = names.to_vec();
                let name = format!("C{i}");
                class_names.push(name.clone());
                let fqn = join_fqn(&class_names);
                let methods = (0..self.rng.gen_range(0..6))
                    .map(|m| {
                        self.hash_counter += 1;
                        Method {
                            name: format!("m{m}"),
                            hash: format!("h{}", self.hash_counter),
                        }
                    })
                    .collect();
                let id = base_id(&fqn);
                self.classes.push((id.clone(), fqn));
                package.classes.push(Class {
                    id,
                    name,
                    methods,
                    total_calls: 0,
                });
            }
            if depth < self.max_depth {
                let subs = self.rng.gen_range(0..=3);
                for i in 0..subs {
                    if self.classes_left == 0 && self.rng.gen_bool(0.7) {
                        break;
                    }
                    let mut sub_names = names.to_vec();
                    sub_names.push(format!("p{i}"));
                    let sub = self.package(&sub_names, depth + 1);
                    package.sub_packages.push(sub);
                }
            }
            package
        }
    }

    let mut gen = Gen {
        rng,
        classes_left: max_classes,
        max_depth: max_depth.max(1),
        hash_counter: 0,
        classes: vec![],
    };
    let app_count = gen.rng.gen_range(0..=3);
    let mut applications = Vec::new();
    for a in 0..app_count {
        let name = format!("app{a}");
        let roots = gen.rng.gen_range(0..=3);
        let root_packages = (0..roots)
            .map(|r| gen.package(&[name.clone(), format!("r{r}")], 1))
            .collect();
        applications.push(Application {
            id: base_id(&name),
            name,
            language: "java".into(),
            root_packages,
        });
    }
    let mut links = Vec::new();
    if gen.classes.len() >= 2 {
        for i in 0..gen.rng.gen_range(0..8) {
            let (s, sf) = gen.classes.choose(gen.rng).expect("classes").clone();
            let (t, tf) = gen.classes.choose(gen.rng).expect("classes").clone();
            if s == t {
                continue;
            }
            let method = format!("call{i}");
            links.push(CommunicationLink {
                id: base_link_id(&sf, &tf, &method),
                source_class_id: s,
                target_class_id: t,
                method_name: method,
                call_count: gen.rng.gen_range(1..50),
            });
        }
    }
    let landscape = Landscape {
        applications,
        links: vec![],
    };
    annotate_metrics(&landscape, links).expect("generated links resolve")
}
