//! Reduced GMF Graph metamodels for unit tests, mirroring the `.ecore`
//! fixtures shipped with the `migrata` crate.

use alloc::vec;
use alloc::vec::Vec;

use crate::metamodel::{DataType, EnumType, Feature, MetaClass, Metamodel, PrimitiveKind};

pub const GRAPH_V1_URI: &str = "http://www.eclipse.org/gmf/2005/GraphicalDefinition";
pub const GRAPH_V2_URI: &str = "http://www.eclipse.org/gmf/2006/GraphicalDefinition";

fn datatypes() -> Vec<DataType> {
    vec![
        DataType::new("EString", PrimitiveKind::String),
        DataType::new("EBoolean", PrimitiveKind::Boolean),
        DataType::new("EInt", PrimitiveKind::Integer),
    ]
}

fn direction() -> EnumType {
    EnumType::new(
        "Direction",
        ["NONE", "NORTH", "SOUTH", "WEST", "EAST", "NSEW"],
    )
}

fn shared(v2: bool) -> Vec<MetaClass> {
    let mut figure = MetaClass::new("Figure")
        .abstract_class()
        .extends("Identity")
        .with(
            Feature::reference("children", "Figure")
                .many()
                .containment(),
        );
    let mut element = MetaClass::new("DiagramElement")
        .abstract_class()
        .extends("Identity");
    if v2 {
        element = element.with(Feature::reference("figure", "FigureDescriptor"));
    } else {
        element =
            element.with(Feature::reference("figure", "Figure").opposite("referencingElements"));
        figure = figure.with(
            Feature::reference("referencingElements", "DiagramElement")
                .many()
                .opposite("figure"),
        );
    }
    let mut gallery = MetaClass::new("FigureGallery")
        .extends("Identity")
        .with(Feature::reference("figures", "Figure").many().containment())
        .with(Feature::attribute("implementationBundle", "EString"));
    let mut label = MetaClass::new("DiagramLabel")
        .extends("Node")
        .with(Feature::attribute("elementIcon", "EBoolean"));
    let mut compartment = MetaClass::new("Compartment")
        .extends("DiagramElement")
        .with(Feature::attribute("collapsible", "EBoolean"))
        .with(Feature::attribute("needsTitle", "EBoolean"));
    if v2 {
        gallery = gallery.with(
            Feature::reference("descriptors", "FigureDescriptor")
                .many()
                .containment(),
        );
        label = label.with(Feature::reference("accessor", "ChildAccess"));
        compartment = compartment.with(Feature::reference("accessor", "ChildAccess"));
    }
    let mut classes = vec![
        MetaClass::new("Identity")
            .abstract_class()
            .with(Feature::attribute("name", "EString")),
        MetaClass::new("Canvas")
            .extends("Identity")
            .with(
                Feature::reference("figures", "FigureGallery")
                    .many()
                    .containment(),
            )
            .with(Feature::reference("nodes", "Node").many().containment())
            .with(
                Feature::reference("connections", "Connection")
                    .many()
                    .containment(),
            )
            .with(
                Feature::reference("compartments", "Compartment")
                    .many()
                    .containment(),
            )
            .with(
                Feature::reference("labels", "DiagramLabel")
                    .many()
                    .containment(),
            ),
        gallery,
        element,
        MetaClass::new("Node")
            .extends("DiagramElement")
            .with(Feature::attribute("resizeConstraint", "Direction"))
            .with(Feature::attribute("affixedParentSide", "Direction")),
        MetaClass::new("Connection").extends("DiagramElement"),
        compartment,
        label,
        figure,
        MetaClass::new("Shape")
            .abstract_class()
            .extends("Figure")
            .with(Feature::attribute("lineWidth", "EInt"))
            .with(Feature::attribute("outline", "EBoolean"))
            .with(Feature::attribute("fill", "EBoolean")),
        MetaClass::new("Rectangle").extends("Shape"),
        MetaClass::new("RoundedRectangle")
            .extends("Shape")
            .with(Feature::attribute("cornerWidth", "EInt"))
            .with(Feature::attribute("cornerHeight", "EInt")),
        MetaClass::new("Ellipse").extends("Shape"),
        MetaClass::new("Label")
            .extends("Figure")
            .with(Feature::attribute("text", "EString")),
        MetaClass::new("PolylineConnection").extends("Figure"),
        MetaClass::new("CustomFigure")
            .extends("Figure")
            .with(Feature::attribute("qualifiedClassName", "EString")),
    ];
    if v2 {
        classes.push(
            MetaClass::new("FigureDescriptor")
                .extends("Identity")
                .with(
                    Feature::reference("actualFigure", "Figure")
                        .required()
                        .containment(),
                )
                .with(
                    Feature::reference("accessors", "ChildAccess")
                        .many()
                        .containment(),
                ),
        );
        classes.push(
            MetaClass::new("ChildAccess")
                .with(Feature::attribute("accessor", "EString"))
                .with(Feature::reference("figure", "Figure").required()),
        );
    }
    classes
}

pub fn graph_v1() -> Metamodel {
    Metamodel::new(
        "gmfgraph",
        GRAPH_V1_URI,
        "gmfgraph",
        shared(false),
        datatypes(),
        vec![direction()],
    )
    .expect("v1 test metamodel resolves")
}

pub fn graph_v2() -> Metamodel {
    Metamodel::new(
        "gmfgraph",
        GRAPH_V2_URI,
        "gmfgraph",
        shared(true),
        datatypes(),
        vec![direction()],
    )
    .expect("v2 test metamodel resolves")
}

pub const MAP_URIS: [&str; 3] = [
    "http://www.eclipse.org/gmf/2005/mappings",
    "http://www.eclipse.org/gmf/2006/mappings",
    "http://www.eclipse.org/gmf/2008/mappings",
];

/// Toy GMF Map metamodel: 0 = 1.0, 1 = 2.0, 2 = 2.1.
pub fn map_version(v: u8) -> Metamodel {
    let ext = |name: &str, ty: &str| Feature::reference(name, ty).external();
    let mut classes = vec![
        MetaClass::new("Mapping")
            .with(
                Feature::reference("nodes", "TopNodeReference")
                    .many()
                    .containment(),
            )
            .with(
                Feature::reference("links", "LinkMapping")
                    .many()
                    .containment(),
            )
            .with(
                Feature::reference("diagram", "CanvasMapping")
                    .required()
                    .containment(),
            ),
        MetaClass::new("CanvasMapping")
            .with(ext("domainModel", "ecore:EPackage"))
            .with(ext("domainMetaElement", "ecore:EClass"))
            .with(ext("diagramCanvas", "gmfgraph:Canvas")),
        MetaClass::new("MappingEntry")
            .abstract_class()
            .with(ext("domainMetaElement", "ecore:EClass"))
            .with(
                Feature::reference("labelMappings", "LabelMapping")
                    .many()
                    .containment(),
            )
            .with(Feature::reference("domainInitializer", "FeatureSeqInitializer").containment()),
        MetaClass::new("TopNodeReference")
            .with(ext("containmentFeature", "ecore:EReference"))
            .with(Feature::reference("ownedChild", "NodeMapping").containment()),
        MetaClass::new("NodeMapping")
            .extends("MappingEntry")
            .with(ext("diagramNode", "gmfgraph:Node"))
            .with(ext("tool", "gmftool:AbstractTool")),
        MetaClass::new("LinkMapping")
            .extends("MappingEntry")
            .with(ext("diagramLink", "gmfgraph:Connection"))
            .with(ext("linkMetaFeature", "ecore:EStructuralFeature")),
        MetaClass::new("ValueExpression")
            .with(Feature::attribute("body", "EString").required())
            .with(Feature::attribute("language", "Language")),
    ];
    let label = MetaClass::new("LabelMapping")
        .with(ext("diagramLabel", "gmfgraph:DiagramLabel"))
        .with(Feature::attribute("readOnly", "EBoolean"));
    let label_features = |c: MetaClass| {
        c.with(ext("features", "ecore:EAttribute").many())
            .with(Feature::attribute("viewPattern", "EString"))
            .with(Feature::attribute("editPattern", "EString"))
    };
    if v == 0 {
        classes.push(label_features(label));
    } else {
        classes.push(label);
        classes.push(label_features(
            MetaClass::new("FeatureLabelMapping").extends("LabelMapping"),
        ));
    }
    if v < 2 {
        classes.push(
            MetaClass::new("FeatureSeqInitializer").with(
                Feature::reference("initializers", "FeatureValueSpec")
                    .many()
                    .containment(),
            ),
        );
        classes.push(
            MetaClass::new("FeatureValueSpec")
                .extends("ValueExpression")
                .with(ext("feature", "ecore:EStructuralFeature").required()),
        );
    } else {
        classes.push(
            MetaClass::new("FeatureSeqInitializer").with(
                Feature::reference("initializers", "FeatureInitializer")
                    .many()
                    .containment(),
            ),
        );
        classes.push(
            MetaClass::new("FeatureInitializer")
                .abstract_class()
                .with(ext("feature", "ecore:EStructuralFeature").required()),
        );
        classes.push(
            MetaClass::new("FeatureValueSpec")
                .extends("FeatureInitializer")
                .with(
                    Feature::reference("value", "ValueExpression")
                        .required()
                        .containment(),
                ),
        );
    }
    Metamodel::new(
        "mappings",
        MAP_URIS[v as usize],
        "gmfmap",
        classes,
        vec![
            DataType::new("EString", PrimitiveKind::String),
            DataType::new("EBoolean", PrimitiveKind::Boolean),
        ],
        vec![EnumType::new(
            "Language",
            ["ocl", "java", "regexp", "nregexp", "literal"],
        )],
    )
    .expect("map test metamodel resolves")
}
