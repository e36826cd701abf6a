#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use migrata::{load_metamodel, read_resource_set};
use migrata_core::{Metamodel, ResourceSet};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn metamodel(name: &str) -> Arc<Metamodel> {
    Arc::new(
        load_metamodel(&fixtures().join("metamodels").join(name)).expect("fixture metamodel loads"),
    )
}

pub fn graph_v1() -> Arc<Metamodel> {
    metamodel("gmfgraph_1_0.ecore")
}

pub fn graph_v2() -> Arc<Metamodel> {
    metamodel("gmfgraph_2_1.ecore")
}

pub fn model(rel: &str) -> PathBuf {
    fixtures().join("models").join(rel)
}

/// Graph 1.0 fixtures, each as the list of files forming one model.
pub fn graph_fixtures() -> Vec<(&'static str, Vec<PathBuf>)> {
    vec![
        ("empty", vec![model("graph/1.0/empty.gmfgraph")]),
        (
            "single_figure",
            vec![model("graph/1.0/single_figure.gmfgraph")],
        ),
        (
            "statemachine",
            vec![model("graph/1.0/statemachine.gmfgraph")],
        ),
        (
            "two_file",
            vec![
                model("graph/two_file/a.gmfgraph"),
                model("graph/two_file/b.gmfgraph"),
            ],
        ),
        (
            "deep_nesting",
            vec![model("graph/1.0/deep_nesting.gmfgraph")],
        ),
    ]
}

pub fn read(paths: &[PathBuf], mm: &Arc<Metamodel>) -> ResourceSet {
    read_resource_set(paths, mm).unwrap_or_else(|e| panic!("reading {paths:?}: {e}"))
}
