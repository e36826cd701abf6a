//! Dynamic, metamodel-checked object graphs split into resources.
//!
//! All objects of a [`ResourceSet`] live in one arena and are addressed by
//! [`ObjectId`]. An object belongs to the resource holding its containment
//! root; objects that are neither a root nor transitively contained by one are
//! detached and not part of the set (they are still addressable, which is how
//! the migration engine builds objects before wiring them in).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::fragment;
use crate::metamodel::{Classifier, Feature, FeatureKind, Metamodel, PrimitiveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(u32);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(pub usize);

/// A reference to an object outside the resource set, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExternalRef {
    pub target_uri: String,
    pub fragment: String,
}

impl ExternalRef {
    pub fn new(target_uri: impl Into<String>, fragment: impl Into<String>) -> Self {
        ExternalRef {
            target_uri: target_uri.into(),
            fragment: fragment.into(),
        }
    }

    /// Splits `file#fragment`; a string without `#` is all uri.
    pub fn parse(uri: &str) -> Self {
        match uri.split_once('#') {
            Some((u, f)) => Self::new(u, f),
            None => Self::new(uri, ""),
        }
    }
}

impl fmt::Display for ExternalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.target_uri, self.fragment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    String(String),
    Bool(bool),
    Int(i64),
    Float(f64),
    Enum(String),
    Ref(ObjectId),
    External(ExternalRef),
    List(Vec<Value>),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) | Value::Enum(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_ref_id(&self) -> Option<ObjectId> {
        match self {
            Value::Ref(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    /// The value itself, or the elements of a list.
    pub fn items(&self) -> &[Value] {
        match self {
            Value::List(items) => items,
            other => core::slice::from_ref(other),
        }
    }

    /// Object ids referenced by this value (list elements included).
    pub fn refs(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.items().iter().filter_map(Value::as_ref_id)
    }

    pub fn is_reference(&self) -> bool {
        self.items()
            .iter()
            .any(|v| matches!(v, Value::Ref(_) | Value::External(_)))
    }

    fn variant_name(&self) -> &'static str {
        match self {
            Value::String(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Enum(_) => "enum literal",
            Value::Ref(_) => "object reference",
            Value::External(_) => "external reference",
            Value::List(_) => "list",
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::String(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::String(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<ObjectId> for Value {
    fn from(id: ObjectId) -> Self {
        Value::Ref(id)
    }
}

impl From<Vec<ObjectId>> for Value {
    fn from(ids: Vec<ObjectId>) -> Self {
        Value::List(ids.into_iter().map(Value::Ref).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("cannot instantiate abstract class `{0}`")]
    AbstractInstantiation(String),
    #[error("class `{class}` has no feature `{feature}`")]
    UnknownFeature { class: String, feature: String },
    #[error("type mismatch on `{feature}`: {detail}")]
    TypeMismatch { feature: String, detail: String },
    #[error("multiplicity violation on `{feature}`: {detail}")]
    MultiplicityViolation { feature: String, detail: String },
    #[error("object {object} would contain itself through `{feature}`")]
    OwnershipCycle { object: ObjectId, feature: String },
    #[error("no object {0} in this resource set")]
    UnknownObject(ObjectId),
    #[error("resource `{0}` already exists")]
    DuplicateResource(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelObject {
    class: String,
    slots: BTreeMap<String, Value>,
    owner: Option<(ObjectId, String)>,
    xmi_id: Option<String>,
    root_of: Option<ResourceId>,
}

impl ModelObject {
    pub fn class_name(&self) -> &str {
        &self.class
    }

    /// Container object and the containment feature holding this object.
    pub fn owner(&self) -> Option<(ObjectId, &str)> {
        self.owner.as_ref().map(|(o, f)| (*o, f.as_str()))
    }

    pub fn xmi_id(&self) -> Option<&str> {
        self.xmi_id.as_deref()
    }

    pub fn slot(&self, feature: &str) -> Option<&Value> {
        self.slots.get(feature)
    }

    /// Populated slots, keyed by feature name.
    pub fn slots(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.slots.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub uri: String,
    roots: Vec<ObjectId>,
}

impl Resource {
    pub fn roots(&self) -> &[ObjectId] {
        &self.roots
    }
}

#[derive(Debug, Clone)]
pub struct ResourceSet {
    metamodel: Arc<Metamodel>,
    objects: Vec<ModelObject>,
    resources: Vec<Resource>,
}

impl ResourceSet {
    pub fn new(metamodel: Arc<Metamodel>) -> Self {
        ResourceSet {
            metamodel,
            objects: Vec::new(),
            resources: Vec::new(),
        }
    }

    pub fn metamodel(&self) -> &Arc<Metamodel> {
        &self.metamodel
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn resource(&self, id: ResourceId) -> &Resource {
        &self.resources[id.0]
    }

    pub fn resource_ids(&self) -> impl Iterator<Item = ResourceId> {
        (0..self.resources.len()).map(ResourceId)
    }

    pub fn resource_by_uri(&self, uri: &str) -> Option<ResourceId> {
        self.resources
            .iter()
            .position(|r| r.uri == uri)
            .map(ResourceId)
    }

    pub fn add_resource(&mut self, uri: impl Into<String>) -> Result<ResourceId, ModelError> {
        let uri = uri.into();
        if self.resource_by_uri(&uri).is_some() {
            return Err(ModelError::DuplicateResource(uri));
        }
        self.resources.push(Resource {
            uri,
            roots: Vec::new(),
        });
        Ok(ResourceId(self.resources.len() - 1))
    }

    /// Creates a detached object with no slots set.
    pub fn instantiate(&mut self, class: &str) -> Result<ObjectId, ModelError> {
        let mc = self
            .metamodel
            .find_class(class)
            .ok_or_else(|| ModelError::UnknownClass(class.to_string()))?;
        if mc.is_abstract {
            return Err(ModelError::AbstractInstantiation(class.to_string()));
        }
        let id = ObjectId(self.objects.len() as u32);
        self.objects.push(ModelObject {
            class: class.to_string(),
            slots: BTreeMap::new(),
            owner: None,
            xmi_id: None,
            root_of: None,
        });
        Ok(id)
    }

    pub fn object(&self, id: ObjectId) -> Option<&ModelObject> {
        self.objects.get(id.index())
    }

    fn obj(&self, id: ObjectId) -> Result<&ModelObject, ModelError> {
        self.objects
            .get(id.index())
            .ok_or(ModelError::UnknownObject(id))
    }

    pub fn class_of(&self, id: ObjectId) -> Option<&str> {
        self.object(id).map(|o| o.class.as_str())
    }

    pub fn set_xmi_id(&mut self, id: ObjectId, xmi_id: Option<String>) -> Result<(), ModelError> {
        self.obj(id)?;
        self.objects[id.index()].xmi_id = xmi_id;
        Ok(())
    }

    /// Appends `id` to the roots of `resource`, detaching it from any owner
    /// or previous resource first.
    pub fn add_root(&mut self, resource: ResourceId, id: ObjectId) -> Result<(), ModelError> {
        self.obj(id)?;
        self.detach(id);
        self.resources[resource.0].roots.push(id);
        self.objects[id.index()].root_of = Some(resource);
        Ok(())
    }

    /// Removes `id` from its container slot or resource root list.
    pub fn detach(&mut self, id: ObjectId) {
        let Some(o) = self.objects.get_mut(id.index()) else {
            return;
        };
        if let Some((owner, feature)) = o.owner.take() {
            self.raw_remove_ref(owner, &feature, id);
        }
        if let Some(r) = self.objects[id.index()].root_of.take() {
            self.resources[r.0].roots.retain(|x| *x != id);
        }
    }

    fn feature_of(&self, id: ObjectId, feature: &str) -> Result<Feature, ModelError> {
        let o = self.obj(id)?;
        self.metamodel
            .feature(&o.class, feature)
            .cloned()
            .ok_or_else(|| ModelError::UnknownFeature {
                class: o.class.clone(),
                feature: feature.to_string(),
            })
    }

    /// Stored value; `None` for an unset single-valued feature, an empty list
    /// for an unset many-valued one.
    pub fn get(&self, id: ObjectId, feature: &str) -> Result<Option<Value>, ModelError> {
        let f = self.feature_of(id, feature)?;
        let stored = self.objects[id.index()].slots.get(feature).cloned();
        Ok(match stored {
            None if f.is_many() => Some(Value::List(Vec::new())),
            other => other,
        })
    }

    /// Raw slot access without metamodel lookup.
    pub fn slot(&self, id: ObjectId, feature: &str) -> Option<&Value> {
        self.object(id)?.slots.get(feature)
    }

    /// Sets a slot, keeping containment and opposites consistent.
    ///
    /// Containment moves children: each new child leaves its previous owner
    /// (or resource root list), children dropped from the slot become
    /// detached. Setting an empty list unsets the slot.
    pub fn set(&mut self, id: ObjectId, feature: &str, value: Value) -> Result<(), ModelError> {
        let f = self.feature_of(id, feature)?;
        check_value(&self.metamodel, |t| self.class_of(t), &f, &value)?;

        let new_refs: Vec<ObjectId> = value.refs().collect();
        let old_refs: Vec<ObjectId> = self
            .slot(id, feature)
            .map(|v| v.refs().collect())
            .unwrap_or_default();

        if f.containment {
            for (i, child) in new_refs.iter().enumerate() {
                if new_refs[..i].contains(child) {
                    return Err(ModelError::MultiplicityViolation {
                        feature: feature.to_string(),
                        detail: format!("object {child} contained twice"),
                    });
                }
                if *child == id || self.is_ancestor(*child, id) {
                    return Err(ModelError::OwnershipCycle {
                        object: *child,
                        feature: feature.to_string(),
                    });
                }
            }
            for old in &old_refs {
                if !new_refs.contains(old) {
                    self.objects[old.index()].owner = None;
                }
            }
            for child in &new_refs {
                let already = matches!(
                    &self.objects[child.index()].owner,
                    Some((o, fname)) if *o == id && fname == feature
                );
                if !already {
                    self.detach(*child);
                    self.objects[child.index()].owner = Some((id, feature.to_string()));
                }
            }
        }

        if let (Some(opp), false) = (&f.opposite, f.external) {
            for old in &old_refs {
                if !new_refs.contains(old) {
                    self.raw_remove_ref(*old, opp, id);
                }
            }
            for new in &new_refs {
                if !old_refs.contains(new) {
                    self.link_opposite(*new, opp, id, feature);
                }
            }
        }

        let slots = &mut self.objects[id.index()].slots;
        match value {
            Value::List(items) if items.is_empty() => {
                slots.remove(feature);
            }
            v => {
                slots.insert(feature.to_string(), v);
            }
        }
        Ok(())
    }

    /// Appends to a many-valued feature.
    pub fn push(&mut self, id: ObjectId, feature: &str, item: Value) -> Result<(), ModelError> {
        let mut items = match self.get(id, feature)? {
            Some(Value::List(items)) => items,
            _ => {
                return Err(ModelError::MultiplicityViolation {
                    feature: feature.to_string(),
                    detail: "push on a single-valued feature".to_string(),
                })
            }
        };
        items.push(item);
        self.set(id, feature, Value::List(items))
    }

    pub fn unset(&mut self, id: ObjectId, feature: &str) -> Result<(), ModelError> {
        let f = self.feature_of(id, feature)?;
        if f.is_many() {
            self.set(id, feature, Value::List(Vec::new()))
        } else {
            let Some(old) = self.objects[id.index()].slots.remove(feature) else {
                return Ok(());
            };
            for r in old.refs() {
                if f.containment {
                    self.objects[r.index()].owner = None;
                }
                if let (Some(opp), false) = (&f.opposite, f.external) {
                    self.raw_remove_ref(r, opp, id);
                }
            }
            Ok(())
        }
    }

    /// Adds `source` to `target.opp`, evicting the previous occupant of a
    /// single-valued opposite from its forward slot.
    fn link_opposite(&mut self, target: ObjectId, opp: &str, source: ObjectId, forward: &str) {
        let many = self
            .metamodel
            .feature(&self.objects[target.index()].class, opp)
            .map(Feature::is_many)
            .unwrap_or(false);
        let slots = &mut self.objects[target.index()].slots;
        if many {
            match slots.get_mut(opp) {
                Some(Value::List(items)) => {
                    if !items.contains(&Value::Ref(source)) {
                        items.push(Value::Ref(source));
                    }
                }
                _ => {
                    slots.insert(opp.to_string(), Value::List(vec![Value::Ref(source)]));
                }
            }
        } else {
            let previous = slots.insert(opp.to_string(), Value::Ref(source));
            if let Some(Value::Ref(prev)) = previous {
                if prev != source {
                    self.raw_remove_ref(prev, forward, target);
                }
            }
        }
    }

    fn raw_remove_ref(&mut self, id: ObjectId, feature: &str, target: ObjectId) {
        let slots = &mut self.objects[id.index()].slots;
        let remove_slot = match slots.get_mut(feature) {
            Some(Value::List(items)) => {
                items.retain(|v| *v != Value::Ref(target));
                items.is_empty()
            }
            Some(Value::Ref(t)) => *t == target,
            _ => false,
        };
        if remove_slot {
            slots.remove(feature);
        }
    }

    /// True if `ancestor` transitively contains `id`.
    pub fn is_ancestor(&self, ancestor: ObjectId, id: ObjectId) -> bool {
        let mut cur = self.object(id).and_then(|o| o.owner());
        while let Some((owner, _)) = cur {
            if owner == ancestor {
                return true;
            }
            cur = self.object(owner).and_then(|o| o.owner());
        }
        false
    }

    /// Topmost container of `id` (itself if unowned).
    pub fn containment_root(&self, id: ObjectId) -> ObjectId {
        let mut cur = id;
        while let Some((owner, _)) = self.object(cur).and_then(|o| o.owner()) {
            cur = owner;
        }
        cur
    }

    /// Resource holding `id`'s containment root, or `None` if detached.
    pub fn resource_of(&self, id: ObjectId) -> Option<ResourceId> {
        let root = self.containment_root(id);
        self.object(root)?.root_of
    }

    /// Directly contained objects in metamodel feature order.
    pub fn children(&self, id: ObjectId) -> Vec<(String, ObjectId)> {
        let Some(o) = self.object(id) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let features = self
            .metamodel
            .find_class(&o.class)
            .map(|c| c.effective_features())
            .unwrap_or(&[]);
        for f in features.iter().filter(|f| f.containment) {
            if let Some(v) = o.slots.get(&f.name) {
                out.extend(v.refs().map(|c| (f.name.clone(), c)));
            }
        }
        out
    }

    /// Objects of one resource in depth-first pre-order.
    pub fn resource_objects(&self, resource: ResourceId) -> Vec<ObjectId> {
        let mut out = Vec::new();
        for root in &self.resources[resource.0].roots {
            self.preorder(*root, &mut out);
        }
        out
    }

    fn preorder(&self, id: ObjectId, out: &mut Vec<ObjectId>) {
        out.push(id);
        for (_, child) in self.children(id) {
            self.preorder(child, out);
        }
    }

    /// All objects of the set, resource by resource, depth-first.
    pub fn all_objects(&self) -> Vec<ObjectId> {
        self.resource_ids()
            .flat_map(|r| self.resource_objects(r))
            .collect()
    }

    /// Number of arena entries, attached or not.
    pub fn arena_len(&self) -> usize {
        self.objects.len()
    }
}

/// Checks one value against a feature: multiplicity, then the type of each element.
pub(crate) fn check_value<'a>(
    mm: &Metamodel,
    class_of: impl Fn(ObjectId) -> Option<&'a str>,
    f: &Feature,
    value: &Value,
) -> Result<(), ModelError> {
    let mismatch = |detail: String| ModelError::TypeMismatch {
        feature: f.name.clone(),
        detail,
    };
    match (f.is_many(), value) {
        (true, Value::List(items)) => {
            if f.upper_bound > 1 && items.len() > f.upper_bound as usize {
                return Err(ModelError::MultiplicityViolation {
                    feature: f.name.clone(),
                    detail: format!("{} values, at most {} allowed", items.len(), f.upper_bound),
                });
            }
            for item in items {
                if matches!(item, Value::List(_)) {
                    return Err(ModelError::MultiplicityViolation {
                        feature: f.name.clone(),
                        detail: "nested list".to_string(),
                    });
                }
                check_item(mm, &class_of, f, item).map_err(mismatch)?;
            }
            Ok(())
        }
        (true, _) => Err(ModelError::MultiplicityViolation {
            feature: f.name.clone(),
            detail: "single value on a many-valued feature".to_string(),
        }),
        (false, Value::List(_)) => Err(ModelError::MultiplicityViolation {
            feature: f.name.clone(),
            detail: "list on a single-valued feature".to_string(),
        }),
        (false, item) => check_item(mm, &class_of, f, item).map_err(mismatch),
    }
}

fn check_item<'a>(
    mm: &Metamodel,
    class_of: &impl Fn(ObjectId) -> Option<&'a str>,
    f: &Feature,
    item: &Value,
) -> Result<(), String> {
    match f.kind {
        FeatureKind::Attribute => {
            if f.external {
                return match item {
                    Value::String(_) => Ok(()),
                    other => Err(format!("expected string, got {}", other.variant_name())),
                };
            }
            match mm.classifier(&f.type_name) {
                Some(Classifier::DataType(dt)) => {
                    let ok = matches!(
                        (dt.kind, item),
                        (PrimitiveKind::String, Value::String(_))
                            | (PrimitiveKind::Boolean, Value::Bool(_))
                            | (PrimitiveKind::Integer, Value::Int(_))
                            | (PrimitiveKind::Float, Value::Float(_))
                    );
                    if ok {
                        Ok(())
                    } else {
                        Err(format!("expected {}, got {}", dt.name, item.variant_name()))
                    }
                }
                Some(Classifier::Enum(e)) => match item {
                    Value::Enum(lit) if e.has_literal(lit) => Ok(()),
                    Value::Enum(lit) => Err(format!("`{lit}` is not a literal of `{}`", e.name)),
                    other => Err(format!("expected {}, got {}", e.name, other.variant_name())),
                },
                _ => Err(format!("unknown datatype `{}`", f.type_name)),
            }
        }
        FeatureKind::Reference => match item {
            Value::External(_) if !f.containment => Ok(()),
            Value::External(_) => Err("containment of an external reference".to_string()),
            Value::Ref(_) if f.external => Err(format!(
                "external type `{}` needs an external reference",
                f.type_name
            )),
            Value::Ref(target) => {
                let class = class_of(*target).ok_or_else(|| format!("no object {target}"))?;
                if mm.is_subtype(class, &f.type_name) {
                    Ok(())
                } else {
                    Err(format!("`{class}` is not a `{}`", f.type_name))
                }
            }
            other => Err(format!("expected reference, got {}", other.variant_name())),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    UnknownClass,
    AbstractClass,
    UnknownFeature,
    TypeMismatch,
    Multiplicity,
    MissingRequired,
    UnresolvedReference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub object: ObjectId,
    /// `uri#fragment` of the offending object.
    pub location: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.location, self.kind, self.message)
    }
}

/// Lists every way `rs` fails to conform to `mm`. Empty means conformant.
///
/// Only objects reachable from a resource root are checked. Classes and
/// features are matched by name, so a set may be checked against a metamodel
/// other than the one it was built with.
pub fn check_conformance(rs: &ResourceSet, mm: &Metamodel) -> Vec<Violation> {
    let mut out = Vec::new();
    for id in rs.all_objects() {
        let obj = &rs.objects[id.index()];
        let mut report = |kind: ViolationKind, message: String| {
            out.push(Violation {
                object: id,
                location: fragment::object_uri(rs, id).unwrap_or_default(),
                kind,
                message,
            })
        };
        let Some(class) = mm.find_class(&obj.class) else {
            report(
                ViolationKind::UnknownClass,
                format!("unknown class `{}`", obj.class),
            );
            continue;
        };
        if class.is_abstract {
            report(
                ViolationKind::AbstractClass,
                format!("`{}` is abstract", obj.class),
            );
        }
        for (name, value) in &obj.slots {
            let Some(f) = class.feature(name) else {
                report(
                    ViolationKind::UnknownFeature,
                    format!("`{}` has no feature `{name}`", obj.class),
                );
                continue;
            };
            if let Err(e) = check_value(mm, |t| rs.class_of(t), f, value) {
                let kind = match e {
                    ModelError::MultiplicityViolation { .. } => ViolationKind::Multiplicity,
                    _ => ViolationKind::TypeMismatch,
                };
                report(kind, e.to_string());
            }
            for target in value.refs() {
                if rs.resource_of(target).is_none() {
                    report(
                        ViolationKind::UnresolvedReference,
                        format!("`{name}` targets {target}, which is in no resource"),
                    );
                }
            }
        }
        for f in class.effective_features() {
            if f.lower_bound == 0 {
                continue;
            }
            let count = obj.slots.get(&f.name).map_or(0, |v| v.items().len());
            if count < f.lower_bound as usize {
                report(
                    ViolationKind::MissingRequired,
                    format!(
                        "`{}` needs at least {} value(s), has {count}",
                        f.name, f.lower_bound
                    ),
                );
            }
        }
    }
    out
}
