mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use migrata::{serialize_resource, write_resource_set};
use migrata_core::fragment::{object_fragment, resolve_fragment};
use migrata_core::gmf::graph_plan;
use migrata_core::{
    check_conformance, diff, migrate, DiffOptions, Metamodel, ObjectId, ResourceSet, Value,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct FigTree {
    class: usize,
    children: Vec<FigTree>,
}

#[derive(Debug, Clone)]
struct Element {
    kind: usize,
    figure: Option<usize>,
}

#[derive(Debug, Clone)]
struct Spec {
    galleries: Vec<Vec<FigTree>>,
    elements: Vec<Element>,
    split: bool,
    names: bool,
}

const FIGURE_CLASSES: [&str; 6] = [
    "Rectangle",
    "Ellipse",
    "RoundedRectangle",
    "Label",
    "PolylineConnection",
    "CustomFigure",
];
const ELEMENT_FEATURES: [&str; 4] = ["nodes", "connections", "compartments", "labels"];

fn fig_tree() -> impl Strategy<Value = FigTree> {
    let leaf = (0..FIGURE_CLASSES.len()).prop_map(|class| FigTree {
        class,
        children: vec![],
    });
    leaf.prop_recursive(4, 24, 3, |inner| {
        (
            (0..FIGURE_CLASSES.len()),
            prop::collection::vec(inner, 0..3),
        )
            .prop_map(|(class, children)| FigTree { class, children })
    })
}

fn spec() -> impl Strategy<Value = Spec> {
    (
        prop::collection::vec(prop::collection::vec(fig_tree(), 0..4), 0..3),
        prop::collection::vec(
            (
                (0..ELEMENT_FEATURES.len()),
                prop::option::weighted(0.8, 0..64usize),
            )
                .prop_map(|(kind, figure)| Element { kind, figure }),
            0..8,
        ),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(galleries, elements, split, names)| Spec {
            galleries,
            elements,
            split,
            names,
        })
}

fn build_tree(rs: &mut ResourceSet, t: &FigTree, all: &mut Vec<ObjectId>, names: bool) -> ObjectId {
    let id = rs.instantiate(FIGURE_CLASSES[t.class]).unwrap();
    if names {
        rs.set(id, "name", format!("f{}", all.len()).into())
            .unwrap();
    }
    all.push(id);
    let kids: Vec<ObjectId> = t
        .children
        .iter()
        .map(|c| build_tree(rs, c, all, names))
        .collect();
    if !kids.is_empty() {
        rs.set(id, "children", kids.into()).unwrap();
    }
    id
}

fn build(spec: &Spec, mm: &Arc<Metamodel>) -> ResourceSet {
    let mut rs = ResourceSet::new(mm.clone());
    let main = rs.add_resource("main.gmfgraph").unwrap();
    let side = if spec.split {
        Some(rs.add_resource("figures.gmfgraph").unwrap())
    } else {
        None
    };
    let canvas = rs.instantiate("Canvas").unwrap();
    rs.add_root(main, canvas).unwrap();
    let mut figures = Vec::new();
    for (i, g) in spec.galleries.iter().enumerate() {
        let gallery = rs.instantiate("FigureGallery").unwrap();
        if spec.names {
            rs.set(gallery, "name", format!("g{i}").into()).unwrap();
        }
        let tops: Vec<ObjectId> = g
            .iter()
            .map(|t| build_tree(&mut rs, t, &mut figures, spec.names))
            .collect();
        if !tops.is_empty() {
            rs.set(gallery, "figures", tops.into()).unwrap();
        }
        match side {
            Some(r) => rs.add_root(r, gallery).unwrap(),
            None => rs.push(canvas, "figures", gallery.into()).unwrap(),
        }
    }
    for e in &spec.elements {
        let class = ["Node", "Connection", "Compartment", "DiagramLabel"][e.kind];
        let el = rs.instantiate(class).unwrap();
        if let (Some(i), false) = (e.figure, figures.is_empty()) {
            rs.set(el, "figure", figures[i % figures.len()].into())
                .unwrap();
        }
        rs.push(canvas, ELEMENT_FEATURES[e.kind], el.into())
            .unwrap();
    }
    rs
}

fn roundtrip(rs: &ResourceSet, mm: &Arc<Metamodel>) -> ResourceSet {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_resource_set(rs, dir.path()).unwrap();
    read(&paths, mm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn containment_is_a_forest(spec in spec()) {
        let rs = build(&spec, &graph_v1());
        let mut seen = BTreeSet::new();
        for r in rs.resource_ids() {
            for o in rs.resource_objects(r) {
                prop_assert!(seen.insert(o), "object reachable twice");
                if let Some((owner, feature)) = rs.object(o).unwrap().owner() {
                    prop_assert!(rs.slot(owner, feature).unwrap().refs().any(|c| c == o));
                    prop_assert!(!rs.is_ancestor(o, owner));
                }
            }
        }
    }

    #[test]
    fn opposites_stay_symmetric(spec in spec()) {
        let rs = build(&spec, &graph_v1());
        for o in rs.all_objects() {
            if let Some(f) = rs.slot(o, "figure").and_then(Value::as_ref_id) {
                prop_assert!(rs.slot(f, "referencingElements").unwrap().refs().any(|e| e == o));
            }
            if let Some(refs) = rs.slot(o, "referencingElements") {
                for e in refs.refs() {
                    prop_assert_eq!(rs.slot(e, "figure").and_then(Value::as_ref_id), Some(o));
                }
            }
        }
    }

    #[test]
    fn fragments_are_a_bijection(spec in spec()) {
        let rs = build(&spec, &graph_v1());
        for r in rs.resource_ids() {
            let mut frags = BTreeSet::new();
            for o in rs.resource_objects(r) {
                let frag = object_fragment(&rs, o).unwrap();
                prop_assert_eq!(resolve_fragment(&rs, r, frag.as_str()), Some(o));
                prop_assert!(frags.insert(frag));
            }
        }
    }

    #[test]
    fn xmi_round_trip_is_equivalent_and_stable(spec in spec()) {
        let mm = graph_v1();
        let rs = build(&spec, &mm);
        let back = roundtrip(&rs, &mm);
        let report = diff(&rs, &back, &DiffOptions::default());
        prop_assert!(report.is_empty(), "{}", report.to_text());
        for r in rs.resource_ids() {
            prop_assert_eq!(serialize_resource(&rs, r).unwrap(), serialize_resource(&back, r).unwrap());
        }
    }

    #[test]
    fn diff_is_reflexive_and_symmetric(a in spec(), b in spec()) {
        let mm = graph_v1();
        let (x, y) = (build(&a, &mm), build(&b, &mm));
        let opts = DiffOptions::default();
        prop_assert!(diff(&x, &x, &opts).is_empty());
        prop_assert_eq!(diff(&x, &y, &opts).is_empty(), diff(&y, &x, &opts).is_empty());
    }

    #[test]
    fn graph_migration_conforms(spec in spec()) {
        let (v1, v2) = (graph_v1(), graph_v2());
        let rs = build(&spec, &v1);
        let plan = graph_plan(&v1, &v2).unwrap();
        let (out, _) = migrate(&rs, v2.clone(), &plan).unwrap();
        prop_assert!(check_conformance(&out, &v2).is_empty());
        prop_assert_eq!(out.resources().len(), rs.resources().len());
        let tops: usize = spec.galleries.iter().map(Vec::len).sum();
        let descriptors = out.all_objects().into_iter().filter(|o| out.class_of(*o) == Some("FigureDescriptor")).count();
        prop_assert_eq!(descriptors, tops);
        // the migrated set survives XMI as well
        let back = roundtrip(&out, &v2);
        prop_assert!(diff(&out, &back, &DiffOptions::default()).is_empty());
    }

    #[test]
    fn subtyping_is_reflexive_and_transitive(a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        for mm in [graph_v1(), graph_v2(), metamodel("gmfmap_2_1.ecore")] {
            let classes = mm.classes();
            let pick = |i: usize| classes[i % classes.len()].name.as_str();
            let (x, y, z) = (pick(a), pick(b), pick(c));
            prop_assert!(mm.is_subtype(x, x));
            if mm.is_subtype(x, y) && mm.is_subtype(y, z) {
                prop_assert!(mm.is_subtype(x, z));
            }
            if x != y && mm.is_subtype(x, y) {
                prop_assert!(!mm.is_subtype(y, x), "subtyping is antisymmetric");
            }
        }
    }
}
