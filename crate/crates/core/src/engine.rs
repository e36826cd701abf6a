//! Two-phase conservative-copy migration.
//!
//! Phase 1 walks every containment tree depth-first and creates target
//! objects: a matching [`Rule`] decides what to create, anything else is
//! copied to the same-named target class with its attribute slots. Phase 2
//! wires references through the [`Trace`]: each same-named reference gets the
//! images of its source targets unless the rule claimed the feature.
//!
//! Only the differences between two metamodel versions need rules; every
//! unchanged class migrates without one.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::instance::{check_conformance, ModelError, ObjectId, ResourceSet, Value, Violation};
use crate::metamodel::{FeatureKind, Metamodel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("plan expects {expected}, got {found}")]
    PlanMismatch { expected: String, found: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("class `{0}` has no counterpart in the target metamodel and no rule handles it")]
    MissingTargetClass(String),
    #[error("`{class}.{feature}` is set but absent from the target metamodel")]
    MissingTargetFeature { class: String, feature: String },
    #[error("enum `{enum_name}` in the target metamodel has no literal `{literal}`")]
    MissingEnumLiteral { enum_name: String, literal: String },
    #[error("rule for `{class}` failed: {message}")]
    Rule { class: String, message: String },
    #[error("source object {0} is referenced but was never migrated")]
    Untraced(ObjectId),
    #[error("target object {target} is the image of both {first} and {second}")]
    TraceConflict {
        target: ObjectId,
        first: ObjectId,
        second: ObjectId,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("migrated model does not conform ({} violations)", .0.len())]
    PostConformance(Vec<Violation>),
}

impl EngineError {
    pub fn rule(class: impl Into<String>, message: impl Into<String>) -> Self {
        EngineError::Rule {
            class: class.into(),
            message: message.into(),
        }
    }
}

/// What a phase-1 action produced for its source object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The primary image of the source object.
    Created(ObjectId),
    /// The source object has no image; references to it are dropped.
    Drop,
}

pub type Guard = Box<dyn Fn(&ResourceSet, ObjectId) -> bool + Send + Sync>;
pub type CreateAction =
    Box<dyn Fn(&mut MigrationContext<'_>, ObjectId) -> Result<Outcome, EngineError> + Send + Sync>;
pub type WireAction =
    Box<dyn Fn(&mut MigrationContext<'_>, ObjectId) -> Result<(), EngineError> + Send + Sync>;

/// Migration rule for one source class.
///
/// Phase-1 actions must not read images of reference targets; those may not
/// exist yet. Features listed in `handles` are skipped by the default
/// attribute copy and reference wiring for objects this rule matches.
pub struct Rule {
    source_class: String,
    include_subtypes: bool,
    guard: Option<Guard>,
    create: Option<CreateAction>,
    wire: Option<WireAction>,
    handles: Vec<String>,
}

impl Rule {
    pub fn new(source_class: impl Into<String>) -> Self {
        Rule {
            source_class: source_class.into(),
            include_subtypes: false,
            guard: None,
            create: None,
            wire: None,
            handles: Vec::new(),
        }
    }

    pub fn include_subtypes(mut self) -> Self {
        self.include_subtypes = true;
        self
    }

    pub fn guard(
        mut self,
        g: impl Fn(&ResourceSet, ObjectId) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.guard = Some(Box::new(g));
        self
    }

    pub fn create(
        mut self,
        action: impl Fn(&mut MigrationContext<'_>, ObjectId) -> Result<Outcome, EngineError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        self.create = Some(Box::new(action));
        self
    }

    pub fn wire(
        mut self,
        action: impl Fn(&mut MigrationContext<'_>, ObjectId) -> Result<(), EngineError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        self.wire = Some(Box::new(action));
        self
    }

    pub fn handles<I, S>(mut self, features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.handles.extend(features.into_iter().map(Into::into));
        self
    }

    pub fn source_class(&self) -> &str {
        &self.source_class
    }

    pub fn handled_features(&self) -> &[String] {
        &self.handles
    }
}

impl core::fmt::Debug for Rule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Rule")
            .field("source_class", &self.source_class)
            .field("include_subtypes", &self.include_subtypes)
            .field("guarded", &self.guard.is_some())
            .field("handles", &self.handles)
            .finish()
    }
}

#[derive(Debug)]
pub struct MigrationPlan {
    pub source_ns_uri: String,
    pub target_ns_uri: String,
    rules: Vec<Rule>,
    discards: Vec<(String, String)>,
}

impl MigrationPlan {
    pub fn new(source_ns_uri: impl Into<String>, target_ns_uri: impl Into<String>) -> Self {
        MigrationPlan {
            source_ns_uri: source_ns_uri.into(),
            target_ns_uri: target_ns_uri.into(),
            rules: Vec::new(),
            discards: Vec::new(),
        }
    }

    /// Plan with no rules between two identical metamodels.
    pub fn identity(ns_uri: impl Into<String>) -> Self {
        let ns = ns_uri.into();
        Self::new(ns.clone(), ns)
    }

    pub fn with_rule(mut self, rule: Rule) -> Result<Self, EngineError> {
        if self
            .rules
            .iter()
            .any(|r| r.source_class == rule.source_class)
        {
            return Err(EngineError::InvalidPlan(alloc::format!(
                "two rules for `{}`",
                rule.source_class
            )));
        }
        self.rules.push(rule);
        Ok(self)
    }

    /// Marks `class.feature` (and the feature on every subclass) as dropped
    /// on purpose, so it does not raise `MissingTargetFeature`.
    pub fn discard(mut self, class: impl Into<String>, feature: impl Into<String>) -> Self {
        self.discards.push((class.into(), feature.into()));
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn discards(&self) -> &[(String, String)] {
        &self.discards
    }

    /// Distinct source class names the rules are written against.
    pub fn rule_classes(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.source_class.as_str()).collect()
    }

    fn validate(&self, source: &Metamodel, target: &Metamodel) -> Result<(), EngineError> {
        if self.source_ns_uri != source.ns_uri {
            return Err(EngineError::PlanMismatch {
                expected: self.source_ns_uri.clone(),
                found: source.ns_uri.clone(),
            });
        }
        if self.target_ns_uri != target.ns_uri {
            return Err(EngineError::PlanMismatch {
                expected: self.target_ns_uri.clone(),
                found: target.ns_uri.clone(),
            });
        }
        if self.source_ns_uri == self.target_ns_uri && !self.rules.is_empty() {
            return Err(EngineError::InvalidPlan(
                "rules on a plan between identical namespaces".to_string(),
            ));
        }
        Ok(())
    }

    /// Exact-name rules win over subtype rules; guards must pass.
    fn rule_index(&self, source: &ResourceSet, id: ObjectId) -> Option<usize> {
        let class = source.class_of(id)?;
        let passes = |r: &Rule| r.guard.as_ref().is_none_or(|g| g(source, id));
        self.rules
            .iter()
            .position(|r| r.source_class == class && passes(r))
            .or_else(|| {
                let mm = source.metamodel();
                self.rules.iter().position(|r| {
                    r.include_subtypes && mm.is_subtype(class, &r.source_class) && passes(r)
                })
            })
    }

    fn is_discarded(&self, mm: &Metamodel, class: &str, feature: &str) -> bool {
        self.discards
            .iter()
            .any(|(c, f)| f == feature && mm.is_subtype(class, c))
    }
}

/// Source-to-target correspondence recorded during a migration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    primary: BTreeMap<ObjectId, ObjectId>,
    reverse: BTreeMap<ObjectId, ObjectId>,
    dropped: BTreeSet<ObjectId>,
    aux: BTreeMap<(ObjectId, String), ObjectId>,
    by_rule: BTreeSet<ObjectId>,
}

impl Trace {
    pub fn image(&self, source: ObjectId) -> Option<ObjectId> {
        self.primary.get(&source).copied()
    }

    /// Source object whose primary image is `target`.
    pub fn origin(&self, target: ObjectId) -> Option<ObjectId> {
        self.reverse.get(&target).copied()
    }

    pub fn is_dropped(&self, source: ObjectId) -> bool {
        self.dropped.contains(&source)
    }

    pub fn aux(&self, source: ObjectId, tag: &str) -> Option<ObjectId> {
        self.aux.get(&(source, tag.to_string())).copied()
    }

    /// True if a rule (rather than conservative copy) migrated `source`.
    pub fn by_rule(&self, source: ObjectId) -> bool {
        self.by_rule.contains(&source)
    }

    pub fn mappings(&self) -> impl Iterator<Item = (ObjectId, ObjectId)> + '_ {
        self.primary.iter().map(|(s, t)| (*s, *t))
    }

    pub fn dropped(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.dropped.iter().copied()
    }

    pub fn auxiliaries(&self) -> impl Iterator<Item = (ObjectId, &str, ObjectId)> + '_ {
        self.aux.iter().map(|((s, tag), t)| (*s, tag.as_str(), *t))
    }

    fn map(&mut self, source: ObjectId, target: ObjectId) -> Result<(), EngineError> {
        if let Some(first) = self.reverse.get(&target) {
            if *first != source {
                return Err(EngineError::TraceConflict {
                    target,
                    first: *first,
                    second: source,
                });
            }
        }
        self.primary.insert(source, target);
        self.reverse.insert(target, source);
        Ok(())
    }
}

/// What rule actions see: the source set, the target set under
/// construction, and the trace so far.
pub struct MigrationContext<'a> {
    source: &'a ResourceSet,
    target: ResourceSet,
    trace: Trace,
    plan: &'a MigrationPlan,
    current: Option<&'a Rule>,
}

impl<'a> MigrationContext<'a> {
    pub fn source(&self) -> &ResourceSet {
        self.source
    }

    pub fn source_mm(&self) -> &Metamodel {
        self.source.metamodel()
    }

    pub fn target(&self) -> &ResourceSet {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut ResourceSet {
        &mut self.target
    }

    pub fn target_mm(&self) -> &Metamodel {
        self.target.metamodel()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn image(&self, source: ObjectId) -> Option<ObjectId> {
        self.trace.image(source)
    }

    /// Image of `source`, failing if it was never migrated.
    pub fn require_image(&self, source: ObjectId) -> Result<ObjectId, EngineError> {
        self.trace
            .image(source)
            .ok_or(EngineError::Untraced(source))
    }

    pub fn aux(&self, source: ObjectId, tag: &str) -> Option<ObjectId> {
        self.trace.aux(source, tag)
    }

    /// Records an extra target object created on behalf of `source`.
    pub fn set_aux(&mut self, source: ObjectId, tag: impl Into<String>, target: ObjectId) {
        self.trace.aux.insert((source, tag.into()), target);
    }

    /// Creates a detached target object.
    pub fn create(&mut self, class: &str) -> Result<ObjectId, EngineError> {
        self.target.instantiate(class).map_err(|e| match e {
            ModelError::UnknownClass(c) => EngineError::MissingTargetClass(c),
            other => other.into(),
        })
    }

    pub fn set(
        &mut self,
        target: ObjectId,
        feature: &str,
        value: Value,
    ) -> Result<(), EngineError> {
        Ok(self.target.set(target, feature, value)?)
    }

    pub fn push(
        &mut self,
        target: ObjectId,
        feature: &str,
        item: Value,
    ) -> Result<(), EngineError> {
        Ok(self.target.push(target, feature, item)?)
    }

    /// Conservative copy of `source` to its same-named target class.
    pub fn copy(&mut self, source: ObjectId) -> Result<ObjectId, EngineError> {
        let class = self
            .source
            .class_of(source)
            .ok_or(EngineError::Untraced(source))?
            .to_string();
        self.copy_as(source, &class)
    }

    /// Creates a `class` object carrying `source`'s attribute slots and xmi:id.
    /// Discarded features and features the current rule handles are skipped.
    pub fn copy_as(&mut self, source: ObjectId, class: &str) -> Result<ObjectId, EngineError> {
        let target = self.create(class)?;
        self.copy_attributes(source, target)?;
        let id = self
            .source
            .object(source)
            .and_then(|o| o.xmi_id())
            .map(String::from);
        self.target.set_xmi_id(target, id)?;
        Ok(target)
    }

    /// Copies attribute slots of `source` onto `target` by feature name.
    pub fn copy_attributes(
        &mut self,
        source: ObjectId,
        target: ObjectId,
    ) -> Result<(), EngineError> {
        let source_set: &'a ResourceSet = self.source;
        let src = source_set
            .object(source)
            .ok_or(EngineError::Untraced(source))?;
        let src_mm = source_set.metamodel();
        let target_class = self.target.class_of(target).unwrap_or_default().to_string();
        for (name, value) in src.slots() {
            let Some(f) = src_mm.feature(src.class_name(), name) else {
                continue;
            };
            if f.kind != FeatureKind::Attribute || self.skips(src.class_name(), name) {
                continue;
            }
            let tf = self
                .target
                .metamodel()
                .feature(&target_class, name)
                .ok_or_else(|| EngineError::MissingTargetFeature {
                    class: src.class_name().to_string(),
                    feature: name.to_string(),
                })?;
            if let Some(e) = self.target.metamodel().find_enum(&tf.type_name) {
                for item in value.items() {
                    if let Value::Enum(lit) = item {
                        if !e.has_literal(lit) {
                            return Err(EngineError::MissingEnumLiteral {
                                enum_name: e.name.clone(),
                                literal: lit.clone(),
                            });
                        }
                    }
                }
            }
            self.target.set(target, name, value.clone())?;
        }
        Ok(())
    }

    fn skips(&self, class: &str, feature: &str) -> bool {
        self.plan
            .is_discarded(self.source.metamodel(), class, feature)
            || self
                .current
                .is_some_and(|r| r.handles.iter().any(|h| h == feature))
    }

    /// Maps a source reference value through the trace. Dropped targets
    /// disappear; external references are copied verbatim.
    pub fn map_value(&self, value: &Value) -> Result<Option<Value>, EngineError> {
        let map_item = |v: &Value| -> Result<Option<Value>, EngineError> {
            Ok(match v {
                Value::Ref(s) if self.trace.is_dropped(*s) => None,
                Value::Ref(s) => Some(Value::Ref(self.require_image(*s)?)),
                other => Some(other.clone()),
            })
        };
        match value {
            Value::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.extend(map_item(item)?);
                }
                Ok(Some(Value::List(out)))
            }
            single => map_item(single),
        }
    }

    fn wire_defaults(&mut self, source: ObjectId) -> Result<(), EngineError> {
        let Some(target) = self.trace.image(source) else {
            return Ok(());
        };
        let source_set: &'a ResourceSet = self.source;
        let src = source_set
            .object(source)
            .ok_or(EngineError::Untraced(source))?;
        let target_class = self.target.class_of(target).unwrap_or_default().to_string();
        for (name, value) in src.slots() {
            let Some(f) = source_set.metamodel().feature(src.class_name(), name) else {
                continue;
            };
            if f.kind != FeatureKind::Reference || self.skips(src.class_name(), name) {
                continue;
            }
            if self
                .target
                .metamodel()
                .feature(&target_class, name)
                .is_none()
            {
                return Err(EngineError::MissingTargetFeature {
                    class: src.class_name().to_string(),
                    feature: name.to_string(),
                });
            }
            match self.map_value(value)? {
                Some(mapped) => self.target.set(target, name, mapped)?,
                None => self.target.unset(target, name)?,
            }
        }
        Ok(())
    }
}

/// Migrates `source` to `target_mm` under `plan`.
///
/// The output has one resource per input resource, with the same uri, and
/// must conform to `target_mm`.
pub fn migrate(
    source: &ResourceSet,
    target_mm: Arc<Metamodel>,
    plan: &MigrationPlan,
) -> Result<(ResourceSet, Trace), EngineError> {
    plan.validate(source.metamodel(), &target_mm)?;
    let mut ctx = MigrationContext {
        source,
        target: ResourceSet::new(target_mm),
        trace: Trace::default(),
        plan,
        current: None,
    };
    for r in source.resources() {
        ctx.target.add_resource(r.uri.clone())?;
    }

    let order = source.all_objects();
    let mut matched: BTreeMap<ObjectId, usize> = BTreeMap::new();

    // phase 1: creation
    for &obj in &order {
        let rule = plan.rule_index(source, obj).map(|i| {
            matched.insert(obj, i);
            &plan.rules[i]
        });
        ctx.current = rule;
        let outcome = match rule.and_then(|r| r.create.as_ref()) {
            Some(action) => action(&mut ctx, obj)?,
            None => {
                let class = source.class_of(obj).unwrap_or_default();
                if ctx.target_mm().find_class(class).is_none() {
                    return Err(EngineError::MissingTargetClass(class.to_string()));
                }
                Outcome::Created(ctx.copy(obj)?)
            }
        };
        match outcome {
            Outcome::Created(t) => ctx.trace.map(obj, t)?,
            Outcome::Drop => {
                ctx.trace.dropped.insert(obj);
            }
        }
        if rule.is_some() {
            ctx.trace.by_rule.insert(obj);
        }
    }
    for (i, r) in source.resources().iter().enumerate() {
        for root in r.roots() {
            if let Some(image) = ctx.trace.image(*root) {
                ctx.target.add_root(crate::instance::ResourceId(i), image)?;
            }
        }
    }

    // phase 2: wiring
    for &obj in &order {
        let rule = matched.get(&obj).map(|i| &plan.rules[*i]);
        ctx.current = rule;
        if !ctx.trace.is_dropped(obj) {
            ctx.wire_defaults(obj)?;
        }
        if let Some(action) = rule.and_then(|r| r.wire.as_ref()) {
            action(&mut ctx, obj)?;
        }
    }
    ctx.current = None;

    let MigrationContext { target, trace, .. } = ctx;
    let violations = check_conformance(&target, target.metamodel());
    if !violations.is_empty() {
        return Err(EngineError::PostConformance(violations));
    }
    Ok((target, trace))
}
