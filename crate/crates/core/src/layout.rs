//! Deterministic 3D city layout.
//!
//! Applications are flat slabs placed side by side along x, packages are
//! slabs stacked on their parent, and classes are buildings standing on the
//! top face of their package. Children of every slab are arranged with a
//! shelf packer whose order is fixed by sorting, so input sibling order never
//! changes the result.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{validate_landscape, Application, Class, EntityId, Landscape, Package, ValidationReport};
use crate::scalar::{fixed4, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayoutConfig<F> {
    /// Gap between siblings.
    pub margin: F,
    /// Border between a slab's edge and its children.
    pub padding: F,
    pub slab_height: F,
    pub app_gap: F,
    pub min_side: F,
}

impl<F: Scalar> Default for LayoutConfig<F> {
    fn default() -> Self {
        Self {
            margin: F::lit(0.5),
            padding: F::lit(1.0),
            slab_height: F::lit(0.5),
            app_gap: F::lit(5.0),
            min_side: F::lit(1.0),
        }
    }
}

impl<F: Scalar> LayoutConfig<F> {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let fields = [
            ("margin", self.margin),
            ("padding", self.padding),
            ("slabHeight", self.slab_height),
            ("appGap", self.app_gap),
            ("minSide", self.min_side),
        ];
        for (name, value) in fields {
            if !(value > F::zero() && value.is_finite()) {
                return Err(LayoutError::InvalidConfig(name));
            }
        }
        Ok(())
    }
}

/// Axis-aligned box; `(x, y, z)` is the min corner and y points up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Box3D<F> {
    pub x: F,
    pub y: F,
    pub z: F,
    pub width: F,
    pub height: F,
    pub depth: F,
}

impl<F: Scalar> Box3D<F> {
    pub fn max_x(&self) -> F {
        self.x + self.width
    }

    pub fn max_y(&self) -> F {
        self.y + self.height
    }

    pub fn max_z(&self) -> F {
        self.z + self.depth
    }

    pub fn top_center(&self) -> [F; 3] {
        let two = F::lit(2.0);
        [self.x + self.width / two, self.max_y(), self.z + self.depth / two]
    }

    pub fn footprint_area(&self) -> F {
        self.width * self.depth
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CityLayout<F> {
    pub boxes: BTreeMap<EntityId, Box3D<F>>,
    pub link_endpoints: BTreeMap<EntityId, ([F; 3], [F; 3])>,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("layout config `{0}` must be strictly positive")]
    InvalidConfig(&'static str),
    #[error("{0}")]
    InvalidModel(ValidationReport),
    #[error("{0}")]
    MalformedDocument(String),
}

impl LayoutError {
    pub fn kind(&self) -> &'static str {
        match self {
            LayoutError::InvalidConfig(_) => "InvalidConfig",
            LayoutError::InvalidModel(_) => "InvalidModel",
            LayoutError::MalformedDocument(_) => "MalformedDocument",
        }
    }
}

/// Building footprint side and height for a class: methods widen it,
/// calls make it taller.
pub fn building_dimensions<F: Scalar>(class: &Class, config: &LayoutConfig<F>) -> (F, F) {
    let one = F::one();
    let side = (one + F::from_count(class.methods.len()))
        .sqrt()
        .max(config.min_side);
    let height = one + (one + F::from_u64_lossy(class.total_calls)).log2();
    (side, height)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packing<F> {
    /// Min-corner offset of each child relative to the inner region.
    pub placements: BTreeMap<EntityId, (F, F)>,
    pub inner_width: F,
    pub inner_depth: F,
}

/// Shelf packing of `(id, width, depth)` footprints.
///
/// Children are taken by footprint area descending (ties by id) and laid
/// left to right on shelves no wider than `ceil(sqrt(Σ (w+m)(d+m)))`;
/// a child that does not fit starts a new shelf below the previous one.
pub fn pack_children<F: Scalar>(
    children: &[(EntityId, F, F)],
    config: &LayoutConfig<F>,
) -> Packing<F> {
    if children.is_empty() {
        return Packing {
            placements: BTreeMap::new(),
            inner_width: config.min_side,
            inner_depth: config.min_side,
        };
    }
    let m = config.margin;
    let mut order: Vec<&(EntityId, F, F)> = children.iter().collect();
    order.sort_by(|a, b| {
        let (area_a, area_b) = (a.1 * a.2, b.1 * b.2);
        area_b
            .partial_cmp(&area_a)
            .expect("finite footprints")
            .then_with(|| a.0.cmp(&b.0))
    });
    let total = children
        .iter()
        .fold(F::zero(), |acc, (_, w, d)| acc + (*w + m) * (*d + m));
    let target_width = total.sqrt().ceil();

    let mut placements = BTreeMap::new();
    let (mut cursor_x, mut shelf_z, mut shelf_depth) = (F::zero(), F::zero(), F::zero());
    let mut shelf_used = false;
    let mut inner_width = F::zero();
    for (id, w, d) in order {
        let gap = if shelf_used { m } else { F::zero() };
        if shelf_used && cursor_x + gap + *w > target_width {
            shelf_z = shelf_z + shelf_depth + m;
            cursor_x = F::zero();
            shelf_depth = F::zero();
            shelf_used = false;
        }
        let gap = if shelf_used { m } else { F::zero() };
        let x = cursor_x + gap;
        placements.insert(id.clone(), (x, shelf_z));
        cursor_x = x + *w;
        shelf_depth = shelf_depth.max(*d);
        shelf_used = true;
        inner_width = inner_width.max(cursor_x);
    }
    Packing {
        placements,
        inner_width,
        inner_depth: shelf_z + shelf_depth,
    }
}

enum Measured<'a, F> {
    Slab {
        id: &'a EntityId,
        width: F,
        depth: F,
        packing: Packing<F>,
        children: Vec<Measured<'a, F>>,
    },
    Building {
        id: &'a EntityId,
        side: F,
        height: F,
    },
}

impl<F: Scalar> Measured<'_, F> {
    fn id(&self) -> &EntityId {
        match self {
            Measured::Slab { id, .. } | Measured::Building { id, .. } => id,
        }
    }

    fn footprint(&self) -> (F, F) {
        match self {
            Measured::Slab { width, depth, .. } => (*width, *depth),
            Measured::Building { side, .. } => (*side, *side),
        }
    }
}

fn measure_slab<'a, F: Scalar>(
    id: &'a EntityId,
    packages: &'a [Package],
    classes: &'a [Class],
    config: &LayoutConfig<F>,
) -> Measured<'a, F> {
    let mut children: Vec<Measured<'a, F>> = packages
        .iter()
        .map(|p| measure_slab(&p.id, &p.sub_packages, &p.classes, config))
        .collect();
    children.extend(classes.iter().map(|c| {
        let (side, height) = building_dimensions(c, config);
        Measured::Building {
            id: &c.id,
            side,
            height,
        }
    }));
    let footprints: Vec<(EntityId, F, F)> = children
        .iter()
        .map(|c| {
            let (w, d) = c.footprint();
            (c.id().clone(), w, d)
        })
        .collect();
    let packing = pack_children(&footprints, config);
    let two_p = config.padding + config.padding;
    Measured::Slab {
        id,
        width: packing.inner_width + two_p,
        depth: packing.inner_depth + two_p,
        packing,
        children,
    }
}

fn place<F: Scalar>(
    node: &Measured<'_, F>,
    x: F,
    z: F,
    level: usize,
    config: &LayoutConfig<F>,
    boxes: &mut BTreeMap<EntityId, Box3D<F>>,
) {
    match node {
        Measured::Building { id, side, height } => {
            boxes.insert(
                (*id).clone(),
                Box3D {
                    x,
                    y: config.slab_height * F::from_count(level),
                    z,
                    width: *side,
                    height: *height,
                    depth: *side,
                },
            );
        }
        Measured::Slab {
            id,
            width,
            depth,
            packing,
            children,
        } => {
            boxes.insert(
                (*id).clone(),
                Box3D {
                    x,
                    y: config.slab_height * F::from_count(level),
                    z,
                    width: *width,
                    height: config.slab_height,
                    depth: *depth,
                },
            );
            for child in children {
                let (px, pz) = packing.placements[child.id()];
                place(
                    child,
                    x + config.padding + px,
                    z + config.padding + pz,
                    level + 1,
                    config,
                    boxes,
                );
            }
        }
    }
}

/// Lays out a whole landscape.
pub fn layout_landscape<F: Scalar>(
    landscape: &Landscape,
    config: &LayoutConfig<F>,
) -> Result<CityLayout<F>, LayoutError> {
    config.validate()?;
    let report = validate_landscape(landscape);
    if !report.is_valid() {
        return Err(LayoutError::InvalidModel(report));
    }

    let mut apps: Vec<&Application> = landscape.applications.iter().collect();
    apps.sort_by(|a, b| a.name.cmp(&b.name));
    let mut boxes = BTreeMap::new();
    let mut cursor_x = F::zero();
    for (i, app) in apps.into_iter().enumerate() {
        let measured = measure_slab(&app.id, &app.root_packages, &[], config);
        if i > 0 {
            cursor_x = cursor_x + config.app_gap;
        }
        place(&measured, cursor_x, F::zero(), 0, config, &mut boxes);
        cursor_x = cursor_x + measured.footprint().0;
    }

    let link_endpoints = landscape
        .links
        .iter()
        .filter_map(|link| {
            let from = boxes.get(&link.source_class_id)?.top_center();
            let to = boxes.get(&link.target_class_id)?.top_center();
            Some((link.id.clone(), (from, to)))
        })
        .collect();
    let hash = layout_hash(&boxes);
    Ok(CityLayout {
        boxes,
        link_endpoints,
        hash,
    })
}

/// One line per box, sorted by id, numbers at four decimals.
pub fn canonical_boxes<F: Scalar>(boxes: &BTreeMap<EntityId, Box3D<F>>) -> String {
    let mut out = String::new();
    for (id, b) in boxes {
        let _ = writeln!(
            out,
            "{}:{},{},{},{},{},{}",
            id,
            fixed4(b.x),
            fixed4(b.y),
            fixed4(b.z),
            fixed4(b.width),
            fixed4(b.height),
            fixed4(b.depth)
        );
    }
    out
}

/// SHA-256 (hex) of [`canonical_boxes`].
pub fn layout_hash<F: Scalar>(boxes: &BTreeMap<EntityId, Box3D<F>>) -> String {
    let digest = Sha256::digest(canonical_boxes(boxes).as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn point<F: Scalar>(p: &[F; 3]) -> String {
    format!("[{}, {}, {}]", fixed4(p[0]), fixed4(p[1]), fixed4(p[2]))
}

/// Renders a layout-file v1 document with every number fixed to four
/// decimal places.
pub fn write_layout_file<F: Scalar>(layout: &CityLayout<F>) -> String {
    let mut out = String::from("{\n  \"version\": 1,\n");
    let _ = writeln!(out, "  \"hash\": {},", json_string(&layout.hash));
    out.push_str("  \"boxes\": {");
    for (i, (id, b)) in layout.boxes.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {}: {{ \"x\": {}, \"y\": {}, \"z\": {}, \"width\": {}, \"height\": {}, \"depth\": {} }}",
            json_string(id.as_str()),
            fixed4(b.x),
            fixed4(b.y),
            fixed4(b.z),
            fixed4(b.width),
            fixed4(b.height),
            fixed4(b.depth)
        );
    }
    out.push_str(if layout.boxes.is_empty() { "},\n" } else { "\n  },\n" });
    out.push_str("  \"links\": {");
    for (i, (id, (from, to))) in layout.link_endpoints.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {}: {{ \"from\": {}, \"to\": {} }}",
            json_string(id.as_str()),
            point(from),
            point(to)
        );
    }
    out.push_str(if layout.link_endpoints.is_empty() { "}\n" } else { "\n  }\n" });
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    version: u32,
    hash: String,
    boxes: BTreeMap<String, BoxDoc>,
    links: BTreeMap<String, LinkDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    x: f64,
    y: f64,
    z: f64,
    width: f64,
    height: f64,
    depth: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    from: [f64; 3],
    to: [f64; 3],
}

/// Reads a layout-file v1 document back. Values carry the file's
/// four-decimal precision.
pub fn read_layout_file(document: &[u8]) -> Result<CityLayout<f64>, LayoutError> {
    let doc: LayoutDoc = serde_json::from_slice(document)
        .map_err(|e| LayoutError::MalformedDocument(e.to_string()))?;
    if doc.version != 1 {
        return Err(LayoutError::MalformedDocument(format!(
            "unsupported version {}",
            doc.version
        )));
    }
    Ok(CityLayout {
        boxes: doc
            .boxes
            .into_iter()
            .map(|(id, b)| {
                (
                    EntityId::new(id),
                    Box3D {
                        x: b.x,
                        y: b.y,
                        z: b.z,
                        width: b.width,
                        height: b.height,
                        depth: b.depth,
                    },
                )
            })
            .collect(),
        link_endpoints: doc
            .links
            .into_iter()
            .map(|(id, l)| (EntityId::new(id), (l.from, l.to)))
            .collect(),
        hash: doc.hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Method, Package};

    fn class(methods: usize, calls: u64) -> Class {
        Class {
            id: "c".into(),
            name: "C".into(),
            methods: (0..methods)
                .map(|i| Method {
                    name: format!("m{i}"),
                    hash: format!("h{i}"),
                })
                .collect(),
            total_calls: calls,
        }
    }

    #[test]
    fn building_dimension_examples() {
        let cfg = LayoutConfig::<f64>::default();
        assert_eq!(building_dimensions(&class(0, 0), &cfg), (1.0, 1.0));
        assert_eq!(building_dimensions(&class(3, 1), &cfg), (2.0, 2.0));
        assert_eq!(building_dimensions(&class(8, 7), &cfg), (3.0, 4.0));
        let cfg32 = LayoutConfig::<f32>::default();
        assert_eq!(building_dimensions(&class(8, 7), &cfg32), (3.0, 4.0));
    }

    fn unit(ids: &[&str]) -> Vec<(EntityId, f64, f64)> {
        ids.iter().map(|id| (EntityId::from(*id), 1.0, 1.0)).collect()
    }

    #[test]
    fn packing_examples() {
        let cfg = LayoutConfig::<f64>::default();
        let one = pack_children(&unit(&["a"]), &cfg);
        assert_eq!(one.placements[&"a".into()], (0.0, 0.0));
        assert_eq!((one.inner_width, one.inner_depth), (1.0, 1.0));

        let two = pack_children(&unit(&["a", "b"]), &cfg);
        assert_eq!(two.placements[&"a".into()], (0.0, 0.0));
        assert_eq!(two.placements[&"b".into()], (1.5, 0.0));
        assert_eq!((two.inner_width, two.inner_depth), (2.5, 1.0));

        let three = pack_children(&unit(&["a", "b", "c"]), &cfg);
        assert_eq!(three.placements[&"a".into()], (0.0, 0.0));
        assert_eq!(three.placements[&"b".into()], (1.5, 0.0));
        assert_eq!(three.placements[&"c".into()], (0.0, 1.5));
        assert_eq!((three.inner_width, three.inner_depth), (2.5, 2.5));

        let empty = pack_children::<f64>(&[], &cfg);
        assert_eq!((empty.inner_width, empty.inner_depth), (1.0, 1.0));
    }

    #[test]
    fn larger_children_are_placed_first() {
        let cfg = LayoutConfig::<f64>::default();
        let children = vec![
            (EntityId::from("small"), 1.0, 1.0),
            (EntityId::from("big"), 3.0, 3.0),
        ];
        let p = pack_children(&children, &cfg);
        assert_eq!(p.placements[&"big".into()], (0.0, 0.0));
        // targetWidth = ceil(sqrt(3.5² + 1.5²)) = 4, so the small one wraps.
        assert_eq!(p.placements[&"small".into()], (0.0, 3.5));
    }

    fn single_class_landscape() -> Landscape {
        Landscape {
            applications: vec![Application {
                id: "app".into(),
                name: "shop".into(),
                language: "java".into(),
                root_packages: vec![Package {
                    id: "pkg".into(),
                    name: "org".into(),
                    sub_packages: vec![],
                    classes: vec![Class {
                        id: "cls".into(),
                        name: "Cart".into(),
                        methods: vec![],
                        total_calls: 0,
                    }],
                }],
            }],
            links: vec![],
        }
    }

    #[test]
    fn building_stands_on_two_slabs() {
        let layout = layout_landscape(&single_class_landscape(), &LayoutConfig::<f64>::default())
            .unwrap();
        let b = layout.boxes[&"cls".into()];
        assert_eq!(b.y, 1.0);
        assert_eq!((b.width, b.depth, b.height), (1.0, 1.0, 1.0));
        let pkg = layout.boxes[&"pkg".into()];
        assert_eq!((pkg.y, pkg.height), (0.5, 0.5));
        assert_eq!((pkg.width, pkg.depth), (3.0, 3.0));
        let app = layout.boxes[&"app".into()];
        assert_eq!((app.x, app.y, app.width), (0.0, 0.0, 5.0));
        assert_eq!((b.x, b.z), (2.0, 2.0));
    }

    #[test]
    fn empty_landscape_has_stable_hash() {
        let a = layout_landscape(&Landscape::default(), &LayoutConfig::<f64>::default()).unwrap();
        assert!(a.boxes.is_empty());
        // sha256 of the empty string
        assert_eq!(
            a.hash,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn applications_are_ordered_by_name_with_gap() {
        let mut l = single_class_landscape();
        let mut a = l.applications[0].clone();
        a.id = "app-a".into();
        a.name = "a".into();
        a.root_packages[0].id = "pkg-a".into();
        a.root_packages[0].classes[0].id = "cls-a".into();
        l.applications[0].name = "b".into();
        l.applications.push(a);
        let layout = layout_landscape(&l, &LayoutConfig::<f64>::default()).unwrap();
        let (a, b) = (layout.boxes[&"app-a".into()], layout.boxes[&"app".into()]);
        assert_eq!(a.max_x() + 5.0, b.x);
    }

    #[test]
    fn invalid_config_and_model_are_rejected() {
        let cfg = LayoutConfig::<f64> {
            padding: 0.0,
            ..Default::default()
        };
        assert_eq!(
            layout_landscape(&Landscape::default(), &cfg).unwrap_err(),
            LayoutError::InvalidConfig("padding")
        );
        let mut l = single_class_landscape();
        l.applications[0].root_packages[0].classes.push(Class {
            id: "dup".into(),
            name: "Cart".into(),
            methods: vec![],
            total_calls: 0,
        });
        assert_eq!(
            layout_landscape(&l, &LayoutConfig::<f64>::default())
                .unwrap_err()
                .kind(),
            "InvalidModel"
        );
    }

    #[test]
    fn layout_file_reads_back() {
        let mut l = single_class_landscape();
        l.applications[0].root_packages[0].classes.push(Class {
            id: "cls2".into(),
            name: "Order".into(),
            methods: vec![],
            total_calls: 0,
        });
        l.links.push(crate::model::CommunicationLink {
            id: "link".into(),
            source_class_id: "cls".into(),
            target_class_id: "cls2".into(),
            method_name: "create".into(),
            call_count: 1,
        });
        let layout = layout_landscape(&l, &LayoutConfig::<f64>::default()).unwrap();
        let text = write_layout_file(&layout);
        assert!(text.contains("\"width\": 1.0000"));
        let back = read_layout_file(text.as_bytes()).unwrap();
        assert_eq!(back, layout);
        let empty = layout_landscape(&Landscape::default(), &LayoutConfig::<f64>::default())
            .unwrap();
        let back = read_layout_file(write_layout_file(&empty).as_bytes()).unwrap();
        assert_eq!(back, empty);
    }
}
