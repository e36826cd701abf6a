mod common;

use std::fs;
use std::sync::Arc;

use common::*;
use migrata::{
    detect_version, read_resource_set, read_resource_set_with, serialize_resource,
    write_resource_set, ReadOptions, XmiError,
};
use migrata_core::fragment::object_uri;
use migrata_core::{diff, DiffOptions, ExternalRef, Metamodel, ResourceSet, Value};

const V1_HEAD: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<gmfgraph:Canvas xmi:version="2.0" xmlns:xmi="http://www.omg.org/XMI" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xmlns:gmfgraph="http://www.eclipse.org/gmf/2005/GraphicalDefinition""#;

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn roundtrip(rs: &ResourceSet, mm: &Arc<Metamodel>) -> ResourceSet {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_resource_set(rs, dir.path()).unwrap();
    read(&paths, mm)
}

#[test]
fn statemachine_has_one_canvas_root() {
    let rs = read(&[model("graph/1.0/statemachine.gmfgraph")], &graph_v1());
    assert_eq!(rs.resources().len(), 1);
    let roots = rs.resource(rs.resource_ids().next().unwrap()).roots();
    assert_eq!(roots.len(), 1);
    assert_eq!(rs.class_of(roots[0]), Some("Canvas"));
}

#[test]
fn cross_file_href_resolves_to_object() {
    let rs = read(
        &[
            model("graph/two_file/a.gmfgraph"),
            model("graph/two_file/b.gmfgraph"),
        ],
        &graph_v1(),
    );
    let b = rs.resource_by_uri("b.gmfgraph").unwrap();
    let canvas = rs.resource(b).roots()[0];
    let node = rs.slot(canvas, "nodes").unwrap().refs().next().unwrap();
    let fig = rs
        .slot(node, "figure")
        .unwrap()
        .as_ref_id()
        .expect("resolved to an object");
    assert_eq!(object_uri(&rs, fig).unwrap(), "a.gmfgraph#/0/@figures.0");
    // the opposite side was filled in as well
    assert!(rs
        .slot(fig, "referencingElements")
        .unwrap()
        .refs()
        .any(|r| r == node));
}

#[test]
fn href_outside_the_set_stays_external() {
    let rs = read(&[model("graph/two_file/b.gmfgraph")], &graph_v1());
    let canvas = rs.resource(rs.resource_ids().next().unwrap()).roots()[0];
    let node = rs.slot(canvas, "nodes").unwrap().refs().next().unwrap();
    assert_eq!(
        rs.slot(node, "figure"),
        Some(&Value::External(ExternalRef::new(
            "a.gmfgraph",
            "/0/@figures.0"
        )))
    );
}

#[test]
fn unknown_namespace() {
    let err =
        read_resource_set(&[model("graph/1.0/statemachine.gmfgraph")], &graph_v2()).unwrap_err();
    assert!(
        matches!(&err, XmiError::UnknownNamespace { ns_uri, .. } if ns_uri.contains("2005")),
        "{err}"
    );
}

#[test]
fn mixed_namespaces_are_rejected() {
    let both = vec![graph_v1(), graph_v2()];
    let err = read_resource_set(
        &[
            model("graph/1.0/statemachine.gmfgraph"),
            model("graph/expected_2.1/statemachine.gmfgraph"),
        ],
        &both,
    )
    .unwrap_err();
    assert!(
        matches!(
            err,
            XmiError::NamespaceMismatch { .. } | XmiError::DuplicateResource(_)
        ),
        "{err}"
    );
    let err = read_resource_set(
        &[
            model("graph/1.0/single_figure.gmfgraph"),
            model("graph/expected_2.1/statemachine.gmfgraph"),
        ],
        &both,
    )
    .unwrap_err();
    assert!(matches!(err, XmiError::NamespaceMismatch { .. }), "{err}");
}

#[test]
fn bad_fragment_is_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "m.gmfgraph",
        &format!("{V1_HEAD}>\n  <nodes figure=\"/9\"/>\n</gmfgraph:Canvas>\n"),
    );
    let err = read_resource_set(&[p], &graph_v1()).unwrap_err();
    assert!(
        matches!(&err, XmiError::UnresolvedReference { uri, .. } if uri == "/9"),
        "{err}"
    );

    let a = write_tmp(&dir, "a.gmfgraph", &format!("{V1_HEAD}/>\n"));
    let b = write_tmp(
        &dir,
        "b.gmfgraph",
        &format!("{V1_HEAD}>\n  <nodes>\n    <figure href=\"a.gmfgraph#/9\"/>\n  </nodes>\n</gmfgraph:Canvas>\n"),
    );
    let err = read_resource_set(&[a, b], &graph_v1()).unwrap_err();
    assert!(
        matches!(&err, XmiError::UnresolvedReference { uri, .. } if uri == "a.gmfgraph#/9"),
        "{err}"
    );
}

#[test]
fn unknown_feature_fails_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "m.gmfgraph",
        &format!("{V1_HEAD} name=\"c\" colour=\"red\">\n  <legacy/>\n</gmfgraph:Canvas>\n"),
    );
    let err = read_resource_set(&[&p], &graph_v1()).unwrap_err();
    assert!(
        matches!(&err, XmiError::FeatureMismatch { class, feature, .. } if class == "Canvas" && feature == "colour"),
        "{err}"
    );
    let out = read_resource_set_with(&[&p], &graph_v1(), &ReadOptions { lenient: true }).unwrap();
    assert_eq!(out.warnings.len(), 2);
    let canvas = out
        .set
        .resource(out.set.resource_ids().next().unwrap())
        .roots()[0];
    assert_eq!(
        out.set.slot(canvas, "name").and_then(Value::as_str),
        Some("c")
    );
}

#[test]
fn forward_references_and_tolerant_fragments() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "m.gmfgraph",
        &format!(
            "{V1_HEAD}>
  <nodes name=\"a\" figure=\"//@figures.0/@figures.0\"/>
  <nodes name=\"b\" figure=\"fig1\"/>
  <labels name=\"c\" figure=\"#/0/@figures.0/@figures.0/@children.0\"/>
  <figures>
    <figures xsi:type=\"gmfgraph:Rectangle\" name=\"R\">
      <children xsi:type=\"gmfgraph:Label\" name=\"L\"/>
    </figures>
    <figures xsi:type=\"gmfgraph:Ellipse\" xmi:id=\"fig1\" name=\"E\"/>
  </figures>
</gmfgraph:Canvas>
"
        ),
    );
    let rs = read(&[p], &graph_v1());
    let canvas = rs.resource(rs.resource_ids().next().unwrap()).roots()[0];
    let nodes: Vec<_> = rs.slot(canvas, "nodes").unwrap().refs().collect();
    let name_of = |id| {
        rs.slot(id, "name")
            .and_then(Value::as_str)
            .unwrap()
            .to_string()
    };
    let target = |id| rs.slot(id, "figure").unwrap().as_ref_id().unwrap();
    assert_eq!(name_of(target(nodes[0])), "R");
    assert_eq!(name_of(target(nodes[1])), "E");
    let label = rs.slot(canvas, "labels").unwrap().refs().next().unwrap();
    assert_eq!(name_of(target(label)), "L");
    assert_eq!(rs.object(target(nodes[1])).unwrap().xmi_id(), Some("fig1"));
}

#[test]
fn malformed_xml_and_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "m.gmfgraph",
        &format!("{V1_HEAD}>\n  <nodes>\n</gmfgraph:Canvas>\n"),
    );
    assert!(matches!(
        read_resource_set(&[p], &graph_v1()),
        Err(XmiError::Parse { .. })
    ));
    let p = write_tmp(
        &dir,
        "n.gmfgraph",
        &format!("{V1_HEAD}>\n  <compartments collapsible=\"maybe\"/>\n</gmfgraph:Canvas>\n"),
    );
    assert!(matches!(
        read_resource_set(&[p], &graph_v1()),
        Err(XmiError::InvalidValue { .. })
    ));
    let p = write_tmp(
        &dir,
        "o.gmfgraph",
        &format!("{V1_HEAD}>\n  <nodes resizeConstraint=\"UP\"/>\n</gmfgraph:Canvas>\n"),
    );
    assert!(matches!(
        read_resource_set(&[p], &graph_v1()),
        Err(XmiError::Model { .. })
    ));
    let p = write_tmp(
        &dir,
        "p.gmfgraph",
        &format!("{V1_HEAD}>\n  <figures>\n    <figures xsi:type=\"gmfgraph:Blob\"/>\n  </figures>\n</gmfgraph:Canvas>\n"),
    );
    assert!(matches!(
        read_resource_set(&[p], &graph_v1()),
        Err(XmiError::UnknownClass { .. })
    ));
}

#[test]
fn duplicate_file_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("x")).unwrap();
    let a = write_tmp(&dir, "m.gmfgraph", &format!("{V1_HEAD}/>\n"));
    let b = write_tmp(&dir, "x/m.gmfgraph", &format!("{V1_HEAD}/>\n"));
    assert!(matches!(
        read_resource_set(&[a, b], &graph_v1()),
        Err(XmiError::DuplicateResource(_))
    ));
}

fn all_fixture_sets() -> Vec<(String, Vec<std::path::PathBuf>, Arc<Metamodel>)> {
    let mut out: Vec<_> = graph_fixtures()
        .into_iter()
        .map(|(n, p)| (n.to_string(), p, graph_v1()))
        .collect();
    out.push((
        "expected_2.1".into(),
        vec![model("graph/expected_2.1/statemachine.gmfgraph")],
        graph_v2(),
    ));
    for (dir, mm) in [
        ("1.0", "gmfmap_1_0.ecore"),
        ("2.0", "gmfmap_2_0.ecore"),
        ("2.1", "gmfmap_2_1.ecore"),
    ] {
        out.push((
            format!("map {dir}"),
            vec![model(&format!("map/{dir}/toy.gmfmap"))],
            metamodel(mm),
        ));
    }
    out
}

#[test]
fn round_trip_is_diff_equivalent() {
    for (name, paths, mm) in all_fixture_sets() {
        let first = read(&paths, &mm);
        let second = roundtrip(&first, &mm);
        let report = diff(&first, &second, &DiffOptions::default());
        assert!(report.is_empty(), "{name}:\n{}", report.to_text());
        let strict = DiffOptions {
            ignore_xmi_ids: false,
            ..DiffOptions::default()
        };
        assert!(diff(&first, &second, &strict).is_empty(), "{name} ids");
    }
}

#[test]
fn writer_is_byte_stable() {
    for (name, paths, mm) in all_fixture_sets() {
        let rs = read(&paths, &mm);
        for r in rs.resource_ids() {
            let once = serialize_resource(&rs, r).unwrap();
            let again = serialize_resource(&read(&paths, &mm), r).unwrap();
            assert_eq!(once, again, "{name}");
            // writing what was read back gives the same bytes too
            let reread = roundtrip(&rs, &mm);
            assert_eq!(once, serialize_resource(&reread, r).unwrap(), "{name}");
        }
    }
}

#[test]
fn canonical_fixtures_are_reproduced_exactly() {
    for (rel, mm) in [
        ("graph/expected_2.1/statemachine.gmfgraph", graph_v2()),
        ("map/1.0/toy.gmfmap", metamodel("gmfmap_1_0.ecore")),
        ("map/2.0/toy.gmfmap", metamodel("gmfmap_2_0.ecore")),
        ("map/2.1/toy.gmfmap", metamodel("gmfmap_2_1.ecore")),
    ] {
        let rs = read(&[model(rel)], &mm);
        let text = serialize_resource(&rs, rs.resource_ids().next().unwrap()).unwrap();
        assert_eq!(text, fs::read_to_string(model(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn partitioning_is_preserved_on_write() {
    let rs = read(
        &[
            model("graph/two_file/a.gmfgraph"),
            model("graph/two_file/b.gmfgraph"),
        ],
        &graph_v1(),
    );
    let dir = tempfile::tempdir().unwrap();
    let paths = write_resource_set(&rs, dir.path()).unwrap();
    let names: Vec<_> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_str().unwrap())
        .collect();
    assert_eq!(names, ["a.gmfgraph", "b.gmfgraph"]);
    let b = fs::read_to_string(dir.path().join("b.gmfgraph")).unwrap();
    assert!(
        b.contains("<figure href=\"a.gmfgraph#/0/@figures.0\"/>"),
        "{b}"
    );
    let back = read(&paths, &graph_v1());
    for (r1, r2) in rs.resource_ids().zip(back.resource_ids()) {
        let classes = |s: &ResourceSet, r| -> Vec<String> {
            s.resource(r)
                .roots()
                .iter()
                .map(|o| s.class_of(*o).unwrap().to_string())
                .collect()
        };
        assert_eq!(classes(&rs, r1), classes(&back, r2));
    }
}

#[test]
fn multi_root_and_empty_documents_use_the_wrapper() {
    let rs = read(&[model("graph/1.0/deep_nesting.gmfgraph")], &graph_v1());
    let r = rs.resource_ids().next().unwrap();
    assert_eq!(rs.resource(r).roots().len(), 2);
    let text = serialize_resource(&rs, r).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("<xmi:XMI "));
    assert!(text.contains("\n  <gmfgraph:FigureGallery name=\"Spare\">"));

    let rs = read(&[model("graph/1.0/empty.gmfgraph")], &graph_v1());
    let r = rs.resource_ids().next().unwrap();
    assert!(rs.resource(r).roots().is_empty());
    assert_eq!(
        serialize_resource(&rs, r).unwrap(),
        fs::read_to_string(model("graph/1.0/empty.gmfgraph")).unwrap()
    );
}

#[test]
fn xsi_type_only_where_class_differs_from_feature_type() {
    let rs = read(&[model("graph/1.0/single_figure.gmfgraph")], &graph_v1());
    let text = serialize_resource(&rs, rs.resource_ids().next().unwrap()).unwrap();
    assert!(text.contains("<figures name=\"Default\">"), "{text}");
    assert!(
        text.contains("<figures xsi:type=\"gmfgraph:Rectangle\" name=\"BoxFigure\" referencingElements=\"/0/@nodes.0\" lineWidth=\"2\"/>"),
        "{text}"
    );
}

#[test]
fn dangling_reference_is_reported() {
    let mm = graph_v1();
    let mut rs = ResourceSet::new(mm.clone());
    let r = rs.add_resource("m.gmfgraph").unwrap();
    let canvas = rs.instantiate("Canvas").unwrap();
    rs.add_root(r, canvas).unwrap();
    let node = rs.instantiate("Node").unwrap();
    rs.push(canvas, "nodes", node.into()).unwrap();
    let loose = rs.instantiate("Rectangle").unwrap();
    rs.set(node, "figure", loose.into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = write_resource_set(&rs, dir.path()).unwrap_err();
    assert!(
        matches!(&err, XmiError::DanglingReference { feature, .. } if feature == "figure"),
        "{err}"
    );
    assert_eq!(
        fs::read_dir(dir.path()).unwrap().count(),
        0,
        "nothing written"
    );
}

#[test]
fn awkward_strings_survive() {
    let mm = graph_v1();
    let mut rs = ResourceSet::new(mm.clone());
    let r = rs.add_resource("m.gmfgraph").unwrap();
    let canvas = rs.instantiate("Canvas").unwrap();
    rs.add_root(r, canvas).unwrap();
    let text = "tab\there \"quoted\" <b> & 'apos'\nnext line\r\n  ";
    rs.set(canvas, "name", text.into()).unwrap();
    rs.set_xmi_id(canvas, Some("_id&1".into())).unwrap();
    let back = roundtrip(&rs, &mm);
    let c = back.resource(back.resource_ids().next().unwrap()).roots()[0];
    assert_eq!(back.slot(c, "name").and_then(Value::as_str), Some(text));
    assert_eq!(back.object(c).unwrap().xmi_id(), Some("_id&1"));
}

#[test]
fn external_references_survive_byte_identically() {
    let mm = metamodel("gmfmap_1_0.ecore");
    let rs = read(&[model("map/1.0/toy.gmfmap")], &mm);
    let back = roundtrip(&rs, &mm);
    let externals = |s: &ResourceSet| -> Vec<String> {
        let mut v = Vec::new();
        for o in s.all_objects() {
            for (_, val) in s.object(o).unwrap().slots() {
                for item in val.items() {
                    if let Value::External(e) = item {
                        v.push(e.to_string());
                    }
                }
            }
        }
        v
    };
    let before = externals(&rs);
    assert!(before.contains(&"statemachine.ecore#//State".to_string()));
    assert_eq!(before, externals(&back));
}

#[test]
fn detect_version_reads_the_root_namespace() {
    let cfg = migrata::config::load_registry(&model("map/registry.conf")).unwrap();
    for label in ["1.0", "2.0", "2.1"] {
        let v = detect_version(&model(&format!("map/{label}/toy.gmfmap")), &cfg).unwrap();
        assert_eq!(v.label, label);
    }
    let err = detect_version(&model("graph/1.0/statemachine.gmfgraph"), &cfg).unwrap_err();
    assert!(matches!(err, XmiError::UnknownNamespace { .. }));
    let graph = migrata::config::load_registry(&model("graph/registry.conf")).unwrap();
    assert_eq!(
        detect_version(&model("graph/1.0/empty.gmfgraph"), &graph)
            .unwrap()
            .label,
        "1.0"
    );
    assert_eq!(
        detect_version(&model("graph/1.0/deep_nesting.gmfgraph"), &graph)
            .unwrap()
            .label,
        "1.0"
    );
}
