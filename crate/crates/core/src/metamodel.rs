//! Ecore-style metamodels: classes, features, enums and primitive datatypes.
//!
//! A [`Metamodel`] is immutable once built. [`Metamodel::new`] resolves every
//! supertype and feature type name and precomputes the effective (inherited +
//! own) feature list of each class, so the lookups used while migrating are
//! plain map reads.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetamodelError {
    #[error("unresolved type `{name}` referenced from {context}")]
    UnresolvedType { name: String, context: String },
    #[error("duplicate name `{name}` in {context}")]
    DuplicateName { name: String, context: String },
    #[error("inheritance cycle through class `{0}`")]
    InheritanceCycle(String),
    #[error("invalid feature `{class}.{feature}`: {reason}")]
    InvalidFeature {
        class: String,
        feature: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    String,
    Boolean,
    Integer,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataType {
    pub name: String,
    pub kind: PrimitiveKind,
}

impl DataType {
    pub fn new(name: impl Into<String>, kind: PrimitiveKind) -> Self {
        DataType {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumType {
    pub name: String,
    pub literals: Vec<String>,
}

impl EnumType {
    pub fn new<I, S>(name: impl Into<String>, literals: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EnumType {
            name: name.into(),
            literals: literals.into_iter().map(Into::into).collect(),
        }
    }

    pub fn has_literal(&self, literal: &str) -> bool {
        self.literals.iter().any(|l| l == literal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Attribute,
    Reference,
}

/// A structural feature (attribute or reference) of a [`MetaClass`].
///
/// `upper_bound == -1` means unbounded. A feature whose type lives in another
/// metamodel has `external == true`; its `type_name` is kept as an opaque
/// string and never resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub type_name: String,
    pub external: bool,
    pub lower_bound: u32,
    pub upper_bound: i32,
    pub containment: bool,
    pub ordered: bool,
    pub opposite: Option<String>,
}

impl Feature {
    fn new(name: impl Into<String>, kind: FeatureKind, type_name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind,
            type_name: type_name.into(),
            external: false,
            lower_bound: 0,
            upper_bound: 1,
            containment: false,
            ordered: true,
            opposite: None,
        }
    }

    /// Optional single-valued attribute.
    pub fn attribute(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Attribute, type_name)
    }

    /// Optional single-valued non-containment reference.
    pub fn reference(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Reference, type_name)
    }

    pub fn many(mut self) -> Self {
        self.upper_bound = -1;
        self
    }

    pub fn required(mut self) -> Self {
        self.lower_bound = 1;
        self
    }

    pub fn bounds(mut self, lower: u32, upper: i32) -> Self {
        self.lower_bound = lower;
        self.upper_bound = upper;
        self
    }

    pub fn containment(mut self) -> Self {
        self.containment = true;
        self
    }

    pub fn opposite(mut self, name: impl Into<String>) -> Self {
        self.opposite = Some(name.into());
        self
    }

    pub fn external(mut self) -> Self {
        self.external = true;
        self
    }

    pub fn is_many(&self) -> bool {
        self.upper_bound == -1 || self.upper_bound > 1
    }

    pub fn is_reference(&self) -> bool {
        self.kind == FeatureKind::Reference
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaClass {
    pub name: String,
    pub is_abstract: bool,
    pub supertypes: Vec<String>,
    pub own_features: Vec<Feature>,
    effective: Vec<Feature>,
    ancestors: BTreeSet<String>,
}

impl MetaClass {
    pub fn new(name: impl Into<String>) -> Self {
        MetaClass {
            name: name.into(),
            is_abstract: false,
            supertypes: Vec::new(),
            own_features: Vec::new(),
            effective: Vec::new(),
            ancestors: BTreeSet::new(),
        }
    }

    pub fn abstract_class(mut self) -> Self {
        self.is_abstract = true;
        self
    }

    pub fn extends(mut self, supertype: impl Into<String>) -> Self {
        self.supertypes.push(supertype.into());
        self
    }

    pub fn with(mut self, feature: Feature) -> Self {
        self.own_features.push(feature);
        self
    }

    /// Inherited features first (depth-first over supertypes, each ancestor
    /// contributing once), then own features.
    ///
    /// Empty until the class has been resolved as part of a [`Metamodel`].
    pub fn effective_features(&self) -> &[Feature] {
        &self.effective
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.effective.iter().find(|f| f.name == name)
    }

    /// Reflexive, transitive subtype test. Both classes must come from the
    /// same resolved metamodel.
    pub fn is_subtype_of(&self, sup: &MetaClass) -> bool {
        self.name == sup.name || self.ancestors.contains(&sup.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Class(usize),
    DataType(usize),
    Enum(usize),
}

#[derive(Debug, Clone, Copy)]
pub enum Classifier<'a> {
    Class(&'a MetaClass),
    DataType(&'a DataType),
    Enum(&'a EnumType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metamodel {
    pub name: String,
    pub ns_uri: String,
    pub ns_prefix: String,
    classes: Vec<MetaClass>,
    datatypes: Vec<DataType>,
    enums: Vec<EnumType>,
    index: BTreeMap<String, Slot>,
}

impl Metamodel {
    /// Resolves and validates a metamodel.
    ///
    /// Fails if classifier names clash, a supertype or feature type does not
    /// resolve, inheritance is cyclic, or a feature is malformed.
    pub fn new(
        name: impl Into<String>,
        ns_uri: impl Into<String>,
        ns_prefix: impl Into<String>,
        classes: Vec<MetaClass>,
        datatypes: Vec<DataType>,
        enums: Vec<EnumType>,
    ) -> Result<Self, MetamodelError> {
        let name = name.into();
        let mut index = BTreeMap::new();
        let entries = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (&c.name, Slot::Class(i)))
            .chain(
                datatypes
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (&d.name, Slot::DataType(i))),
            )
            .chain(
                enums
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (&e.name, Slot::Enum(i))),
            );
        for (key, slot) in entries {
            if index.insert(key.clone(), slot).is_some() {
                return Err(MetamodelError::DuplicateName {
                    name: key.clone(),
                    context: alloc::format!("metamodel `{name}`"),
                });
            }
        }

        for e in &enums {
            let mut seen = BTreeSet::new();
            for lit in &e.literals {
                if !seen.insert(lit.as_str()) {
                    return Err(MetamodelError::DuplicateName {
                        name: lit.clone(),
                        context: alloc::format!("enum `{}`", e.name),
                    });
                }
            }
        }

        let mut mm = Metamodel {
            name,
            ns_uri: ns_uri.into(),
            ns_prefix: ns_prefix.into(),
            classes,
            datatypes,
            enums,
            index,
        };
        mm.check_classes()?;
        mm.linearize()?;
        mm.check_opposites()?;
        Ok(mm)
    }

    fn check_classes(&self) -> Result<(), MetamodelError> {
        for class in &self.classes {
            for sup in &class.supertypes {
                if !matches!(self.index.get(sup), Some(Slot::Class(_))) {
                    return Err(MetamodelError::UnresolvedType {
                        name: sup.clone(),
                        context: alloc::format!("supertypes of `{}`", class.name),
                    });
                }
            }
            let mut seen = BTreeSet::new();
            for f in &class.own_features {
                if !seen.insert(f.name.as_str()) {
                    return Err(MetamodelError::DuplicateName {
                        name: f.name.clone(),
                        context: alloc::format!("class `{}`", class.name),
                    });
                }
                self.check_feature(class, f)?;
            }
        }
        Ok(())
    }

    fn check_feature(&self, class: &MetaClass, f: &Feature) -> Result<(), MetamodelError> {
        let invalid = |reason: &str| MetamodelError::InvalidFeature {
            class: class.name.clone(),
            feature: f.name.clone(),
            reason: reason.to_string(),
        };
        if f.containment && f.kind != FeatureKind::Reference {
            return Err(invalid("containment on an attribute"));
        }
        if f.upper_bound != -1 && (f.upper_bound < 0 || (f.upper_bound as u32) < f.lower_bound) {
            return Err(invalid("upper bound below lower bound"));
        }
        if f.kind == FeatureKind::Attribute && f.opposite.is_some() {
            return Err(invalid("opposite on an attribute"));
        }
        if f.external {
            if f.containment {
                return Err(invalid("containment of an external type"));
            }
            return Ok(());
        }
        match (self.index.get(&f.type_name), f.kind) {
            (None, _) => Err(MetamodelError::UnresolvedType {
                name: f.type_name.clone(),
                context: alloc::format!("feature `{}.{}`", class.name, f.name),
            }),
            (Some(Slot::Class(_)), FeatureKind::Reference) => Ok(()),
            (Some(Slot::Class(_)), FeatureKind::Attribute) => {
                Err(invalid("attribute typed by a class"))
            }
            (Some(_), FeatureKind::Reference) => Err(invalid("reference typed by a datatype")),
            (Some(_), FeatureKind::Attribute) => Ok(()),
        }
    }

    fn linearize(&mut self) -> Result<(), MetamodelError> {
        let mut results = Vec::with_capacity(self.classes.len());
        for i in 0..self.classes.len() {
            let mut stack = Vec::new();
            self.detect_cycle(i, &mut stack)?;

            let mut visited = BTreeSet::new();
            let mut effective = Vec::new();
            self.collect_inherited(i, &mut visited, &mut effective);
            effective.extend(self.classes[i].own_features.iter().cloned());

            let mut names = BTreeSet::new();
            for f in &effective {
                if !names.insert(f.name.clone()) {
                    return Err(MetamodelError::DuplicateName {
                        name: f.name.clone(),
                        context: alloc::format!("effective features of `{}`", self.classes[i].name),
                    });
                }
            }
            results.push((effective, visited));
        }
        for (class, (effective, ancestors)) in self.classes.iter_mut().zip(results) {
            class.effective = effective;
            class.ancestors = ancestors;
        }
        Ok(())
    }

    fn detect_cycle(&self, i: usize, stack: &mut Vec<usize>) -> Result<(), MetamodelError> {
        if stack.contains(&i) {
            return Err(MetamodelError::InheritanceCycle(
                self.classes[i].name.clone(),
            ));
        }
        stack.push(i);
        for sup in &self.classes[i].supertypes {
            if let Some(Slot::Class(j)) = self.index.get(sup) {
                self.detect_cycle(*j, stack)?;
            }
        }
        stack.pop();
        Ok(())
    }

    fn collect_inherited(&self, i: usize, visited: &mut BTreeSet<String>, out: &mut Vec<Feature>) {
        for sup in &self.classes[i].supertypes {
            if !visited.insert(sup.clone()) {
                continue;
            }
            if let Some(Slot::Class(j)) = self.index.get(sup) {
                self.collect_inherited(*j, visited, out);
                out.extend(self.classes[*j].own_features.iter().cloned());
            }
        }
    }

    fn check_opposites(&self) -> Result<(), MetamodelError> {
        for class in &self.classes {
            for f in &class.own_features {
                let Some(opp) = &f.opposite else { continue };
                let target = if f.external {
                    None
                } else {
                    self.find_class(&f.type_name)
                };
                match target.and_then(|t| t.feature(opp)) {
                    Some(o) if o.is_reference() => {}
                    _ => {
                        return Err(MetamodelError::UnresolvedType {
                            name: alloc::format!("{}.{}", f.type_name, opp),
                            context: alloc::format!("opposite of `{}.{}`", class.name, f.name),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> &[MetaClass] {
        &self.classes
    }

    pub fn datatypes(&self) -> &[DataType] {
        &self.datatypes
    }

    pub fn enums(&self) -> &[EnumType] {
        &self.enums
    }

    pub fn find_class(&self, name: &str) -> Option<&MetaClass> {
        match self.index.get(name)? {
            Slot::Class(i) => Some(&self.classes[*i]),
            _ => None,
        }
    }

    pub fn find_enum(&self, name: &str) -> Option<&EnumType> {
        match self.index.get(name)? {
            Slot::Enum(i) => Some(&self.enums[*i]),
            _ => None,
        }
    }

    pub fn find_datatype(&self, name: &str) -> Option<&DataType> {
        match self.index.get(name)? {
            Slot::DataType(i) => Some(&self.datatypes[*i]),
            _ => None,
        }
    }

    pub fn classifier(&self, name: &str) -> Option<Classifier<'_>> {
        Some(match self.index.get(name)? {
            Slot::Class(i) => Classifier::Class(&self.classes[*i]),
            Slot::DataType(i) => Classifier::DataType(&self.datatypes[*i]),
            Slot::Enum(i) => Classifier::Enum(&self.enums[*i]),
        })
    }

    /// Name-based subtype test; false if either class is unknown.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        match (self.find_class(sub), self.find_class(sup)) {
            (Some(a), Some(b)) => a.is_subtype_of(b),
            _ => false,
        }
    }

    /// Looks up an effective feature of a class by name.
    pub fn feature(&self, class: &str, feature: &str) -> Option<&Feature> {
        self.find_class(class)?.feature(feature)
    }

    /// Concrete classes that are `name` or inherit from it, in declaration order.
    pub fn concrete_subtypes<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MetaClass> {
        let sup = self.find_class(name);
        self.classes
            .iter()
            .filter(move |c| !c.is_abstract && sup.is_some_and(|s| c.is_subtype_of(s)))
    }
}
