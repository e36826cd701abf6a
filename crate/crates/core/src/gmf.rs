//! Built-in plans for the GMF Graph and GMF Map metamodel histories.
//!
//! GMF Graph 2.1 puts a `FigureDescriptor` in front of every top-level
//! gallery figure and replaces `Figure.referencingElements` with explicit
//! `ChildAccess` objects for nested figures. Diagram elements then point at
//! descriptors instead of figures, and labels and compartments that show a
//! nested figure record the `ChildAccess` they go through.
//!
//! The Map chain covers two smaller steps: feature-backed labels become
//! `FeatureLabelMapping`s, and `FeatureValueSpec` stops being a
//! `ValueExpression` and holds one instead.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::engine::{EngineError, MigrationContext, MigrationPlan, Outcome, Rule};
use crate::instance::{ObjectId, ResourceSet, Value};
use crate::metamodel::Metamodel;
use crate::registry::{MigratorRegistry, RegistryError};

pub const GRAPH_PLAN_ID: &str = "gmf-graph-1.0-to-2.1";
pub const MAP_CHAIN_ID: &str = "gmf-map-chain";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot build plan: {0}")]
pub struct PlanConstructionError(pub String);

impl From<RegistryError> for PlanConstructionError {
    fn from(e: RegistryError) -> Self {
        PlanConstructionError(e.to_string())
    }
}

/// Metamodel symbols the graph rules touch.
pub struct GraphPlanNames;

impl GraphPlanNames {
    pub const FIGURE: &'static str = "Figure";
    pub const FIGURE_GALLERY: &'static str = "FigureGallery";
    pub const FIGURE_DESCRIPTOR: &'static str = "FigureDescriptor";
    pub const CHILD_ACCESS: &'static str = "ChildAccess";
    pub const DIAGRAM_LABEL: &'static str = "DiagramLabel";
    pub const COMPARTMENT: &'static str = "Compartment";
    pub const CANVAS: &'static str = "Canvas";
    pub const NODE: &'static str = "Node";
    pub const CONNECTION: &'static str = "Connection";

    pub const REFERENCING_ELEMENTS: &'static str = "referencingElements";
    pub const FIGURES: &'static str = "figures";
    pub const DESCRIPTORS: &'static str = "descriptors";
    pub const ACTUAL_FIGURE: &'static str = "actualFigure";
    pub const ACCESSORS: &'static str = "accessors";
    pub const FIGURE_REF: &'static str = "figure";
    pub const ACCESSOR: &'static str = "accessor";

    fn check(source: &Metamodel, target: &Metamodel) -> Result<(), PlanConstructionError> {
        let class = |mm: &Metamodel, name: &str| {
            mm.find_class(name).map(|_| ()).ok_or_else(|| {
                PlanConstructionError(format!("`{}` has no class `{name}`", mm.ns_uri))
            })
        };
        let feature = |mm: &Metamodel, c: &str, f: &str| {
            mm.feature(c, f).map(|_| ()).ok_or_else(|| {
                PlanConstructionError(format!("`{}` has no feature `{c}.{f}`", mm.ns_uri))
            })
        };
        for name in [
            Self::FIGURE,
            Self::FIGURE_GALLERY,
            Self::DIAGRAM_LABEL,
            Self::COMPARTMENT,
            Self::CANVAS,
            Self::NODE,
            Self::CONNECTION,
        ] {
            class(source, name)?;
            class(target, name)?;
        }
        class(target, Self::FIGURE_DESCRIPTOR)?;
        class(target, Self::CHILD_ACCESS)?;
        feature(source, Self::FIGURE, Self::REFERENCING_ELEMENTS)?;
        feature(source, Self::FIGURE_GALLERY, Self::FIGURES)?;
        feature(target, Self::FIGURE_GALLERY, Self::DESCRIPTORS)?;
        feature(target, Self::FIGURE_DESCRIPTOR, Self::ACTUAL_FIGURE)?;
        feature(target, Self::FIGURE_DESCRIPTOR, Self::ACCESSORS)?;
        feature(target, Self::CHILD_ACCESS, Self::FIGURE_REF)?;
        feature(target, Self::DIAGRAM_LABEL, Self::ACCESSOR)?;
        feature(target, Self::COMPARTMENT, Self::ACCESSOR)?;
        Ok(())
    }
}

const DESCRIPTOR_TAG: &str = "descriptor";
const ACCESS_TAG: &str = "child-access";

/// Concrete source classes whose `figure` reference points at a `Figure`
/// and becomes a `FigureDescriptor` reference in the target.
pub fn figure_owners(source: &Metamodel, target: &Metamodel) -> Vec<String> {
    source
        .classes()
        .iter()
        .filter(|c| !c.is_abstract)
        .filter(|c| {
            c.feature(GraphPlanNames::FIGURE_REF).is_some_and(|f| {
                !f.external && source.is_subtype(&f.type_name, GraphPlanNames::FIGURE)
            })
        })
        .filter(|c| {
            target
                .feature(&c.name, GraphPlanNames::FIGURE_REF)
                .is_some_and(|f| f.type_name == GraphPlanNames::FIGURE_DESCRIPTOR)
        })
        .map(|c| c.name.clone())
        .collect()
}

/// The GMF Graph 1.0 to 2.1 plan.
pub fn graph_plan(
    source: &Metamodel,
    target: &Metamodel,
) -> Result<MigrationPlan, PlanConstructionError> {
    GraphPlanNames::check(source, target)?;
    let engine_err = |e: EngineError| PlanConstructionError(e.to_string());

    let gallery = Rule::new(GraphPlanNames::FIGURE_GALLERY)
        .handles([GraphPlanNames::FIGURES])
        .create(create_gallery)
        .wire(wire_gallery);
    let mut plan = MigrationPlan::new(source.ns_uri.clone(), target.ns_uri.clone())
        .with_rule(gallery)
        .map_err(engine_err)?
        .discard(GraphPlanNames::FIGURE, GraphPlanNames::REFERENCING_ELEMENTS);

    let owners = figure_owners(source, target);
    if owners.is_empty() {
        return Err(PlanConstructionError(
            "no class owns a `figure` reference to retarget".to_string(),
        ));
    }
    for owner in owners {
        let rule = Rule::new(owner)
            .handles([GraphPlanNames::FIGURE_REF])
            .wire(retarget_figure);
        plan = plan.with_rule(rule).map_err(engine_err)?;
    }
    Ok(plan)
}

fn gallery_figures(rs: &ResourceSet, gallery: ObjectId) -> Vec<ObjectId> {
    rs.slot(gallery, GraphPlanNames::FIGURES)
        .map(|v| v.refs().collect())
        .unwrap_or_default()
}

fn create_gallery(ctx: &mut MigrationContext<'_>, src: ObjectId) -> Result<Outcome, EngineError> {
    let image = ctx.copy(src)?;
    let named = ctx
        .target_mm()
        .feature(GraphPlanNames::FIGURE_DESCRIPTOR, "name")
        .is_some();
    for figure in gallery_figures(ctx.source(), src) {
        let descriptor = ctx.create(GraphPlanNames::FIGURE_DESCRIPTOR)?;
        if named {
            if let Some(name) = ctx.source().slot(figure, "name").cloned() {
                ctx.set(descriptor, "name", name)?;
            }
        }
        ctx.set_aux(figure, DESCRIPTOR_TAG, descriptor);
    }
    Ok(Outcome::Created(image))
}

fn wire_gallery(ctx: &mut MigrationContext<'_>, src: ObjectId) -> Result<(), EngineError> {
    let image = ctx.require_image(src)?;
    let mut descriptors = Vec::new();
    for figure in gallery_figures(ctx.source(), src) {
        let descriptor = ctx.aux(figure, DESCRIPTOR_TAG).ok_or_else(|| {
            EngineError::rule(GraphPlanNames::FIGURE_GALLERY, "descriptor not created")
        })?;
        let actual = ctx.require_image(figure)?;
        ctx.set(descriptor, GraphPlanNames::ACTUAL_FIGURE, actual.into())?;
        descriptors.push(descriptor);
    }
    let mut all = match ctx.target().slot(image, GraphPlanNames::DESCRIPTORS) {
        Some(v) => v.items().to_vec(),
        None => Vec::new(),
    };
    all.extend(descriptors.into_iter().map(Value::Ref));
    ctx.set(image, GraphPlanNames::DESCRIPTORS, Value::List(all))
}

/// Top-level gallery figure containing `figure` (itself if top-level).
///
/// Only Figure-to-Figure containment is followed; the chain must end in a
/// gallery's `figures`.
pub fn top_level_figure(rs: &ResourceSet, figure: ObjectId) -> Option<ObjectId> {
    let mm = rs.metamodel();
    let is = |id: ObjectId, class: &str| rs.class_of(id).is_some_and(|c| mm.is_subtype(c, class));
    if !is(figure, GraphPlanNames::FIGURE) {
        return None;
    }
    let mut cur = figure;
    loop {
        let (owner, feature) = rs.object(cur)?.owner()?;
        if is(owner, GraphPlanNames::FIGURE) {
            cur = owner;
        } else if is(owner, GraphPlanNames::FIGURE_GALLERY) && feature == GraphPlanNames::FIGURES {
            return Some(cur);
        } else {
            return None;
        }
    }
}

fn retarget_figure(ctx: &mut MigrationContext<'_>, src: ObjectId) -> Result<(), EngineError> {
    let class = ctx.source().class_of(src).unwrap_or_default().to_string();
    let figure = match ctx.source().slot(src, GraphPlanNames::FIGURE_REF) {
        None => return Ok(()),
        Some(Value::Ref(f)) => *f,
        Some(other) => {
            return Err(EngineError::rule(
                class,
                format!("figure {other:?} is outside the resource set"),
            ))
        }
    };
    let top = top_level_figure(ctx.source(), figure)
        .ok_or_else(|| EngineError::rule(&class, "figure is not contained in any FigureGallery"))?;
    let descriptor = ctx
        .aux(top, DESCRIPTOR_TAG)
        .ok_or_else(|| EngineError::rule(&class, "no descriptor for the figure's gallery entry"))?;
    let image = ctx.require_image(src)?;
    ctx.set(image, GraphPlanNames::FIGURE_REF, descriptor.into())?;
    if top == figure {
        return Ok(());
    }

    let access = match ctx.aux(figure, ACCESS_TAG) {
        Some(a) => a,
        None => {
            let a = ctx.create(GraphPlanNames::CHILD_ACCESS)?;
            let nested = ctx.require_image(figure)?;
            ctx.set(a, GraphPlanNames::FIGURE_REF, nested.into())?;
            ctx.push(descriptor, GraphPlanNames::ACCESSORS, a.into())?;
            ctx.set_aux(figure, ACCESS_TAG, a);
            a
        }
    };
    let target_class = ctx.target().class_of(image).unwrap_or_default().to_string();
    if ctx
        .target_mm()
        .feature(&target_class, GraphPlanNames::ACCESSOR)
        .is_some()
    {
        ctx.set(image, GraphPlanNames::ACCESSOR, access.into())?;
    }
    Ok(())
}

const LABEL_FEATURE_SLOTS: [&str; 3] = ["features", "viewPattern", "editPattern"];

/// Plan for one step of the Map history, derived from what changed between
/// the two metamodels. Unchanged classes need no rule.
pub fn map_step_plan(source: &Metamodel, target: &Metamodel) -> MigrationPlan {
    let mut plan = MigrationPlan::new(source.ns_uri.clone(), target.ns_uri.clone());

    let label_split = source.feature("LabelMapping", "features").is_some()
        && target.find_class("FeatureLabelMapping").is_some()
        && target.feature("LabelMapping", "features").is_none();
    if label_split {
        let rule = Rule::new("LabelMapping")
            .guard(|rs, o| LABEL_FEATURE_SLOTS.iter().any(|f| rs.slot(o, f).is_some()))
            .create(|ctx, src| Ok(Outcome::Created(ctx.copy_as(src, "FeatureLabelMapping")?)));
        plan = plan.with_rule(rule).expect("first rule for LabelMapping");
    }

    let value_wrapped = source.feature("FeatureValueSpec", "body").is_some()
        && target
            .feature("FeatureValueSpec", "value")
            .is_some_and(|f| f.containment && f.type_name == "ValueExpression");
    if value_wrapped {
        let rule = Rule::new("FeatureValueSpec")
            .handles(["body", "language"])
            .create(|ctx, src| {
                let spec = ctx.copy(src)?;
                let expr = ctx.create("ValueExpression")?;
                for attr in ["body", "language"] {
                    if let Some(v) = ctx.source().slot(src, attr).cloned() {
                        ctx.set(expr, attr, v)?;
                    }
                }
                ctx.set(spec, "value", expr.into())?;
                ctx.set_aux(src, "value", expr);
                Ok(Outcome::Created(spec))
            });
        plan = plan
            .with_rule(rule)
            .expect("first rule for FeatureValueSpec");
    }
    plan
}

/// Registry over Map metamodel versions ordered oldest to newest.
pub fn map_plan_chain(
    versions: Vec<(String, Arc<Metamodel>)>,
) -> Result<MigratorRegistry, PlanConstructionError> {
    if versions.len() < 2 {
        return Err(PlanConstructionError(
            "a chain needs at least two versions".to_string(),
        ));
    }
    let plans = versions
        .windows(2)
        .map(|w| map_step_plan(&w[0].1, &w[1].1))
        .collect();
    Ok(MigratorRegistry::new(versions, plans)?)
}

/// Registry with the graph plan between two versions.
pub fn graph_registry(
    v1: (String, Arc<Metamodel>),
    v2: (String, Arc<Metamodel>),
) -> Result<MigratorRegistry, PlanConstructionError> {
    let plan = graph_plan(&v1.1, &v2.1)?;
    Ok(MigratorRegistry::new(
        alloc::vec![v1, v2],
        alloc::vec![plan],
    )?)
}
