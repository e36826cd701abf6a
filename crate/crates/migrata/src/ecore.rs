//! Loads `.ecore` files (XMI-serialized EPackages) into core metamodels.

use std::fs;
use std::path::{Path, PathBuf};

use migrata_core::{
    DataType, EnumType, Feature, MetaClass, Metamodel, MetamodelError, PrimitiveKind,
};
use thiserror::Error;

use crate::dom::{self, Element};

const ECORE_NS: &str = "http://www.eclipse.org/emf/2002/Ecore";

#[derive(Debug, Error)]
pub enum EcoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ecore document: {0}")]
    Parse(String),
    #[error(transparent)]
    Metamodel(#[from] MetamodelError),
}

pub fn load_metamodel(path: &Path) -> Result<Metamodel, EcoreError> {
    let text = fs::read_to_string(path).map_err(|source| EcoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_metamodel(&text).map_err(|e| match e {
        EcoreError::Parse(msg) => EcoreError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_metamodel(text: &str) -> Result<Metamodel, EcoreError> {
    let root = dom::parse(text).map_err(EcoreError::Parse)?;
    let package = if root.local_name() == "XMI" {
        let mut packages = root
            .children
            .iter()
            .filter(|c| c.local_name() == "EPackage");
        let first = packages
            .next()
            .ok_or_else(|| EcoreError::Parse("no EPackage in document".into()))?;
        if packages.next().is_some() {
            log::warn!("only the first EPackage of a multi-package document is loaded");
        }
        first
    } else if root.local_name() == "EPackage" {
        &root
    } else {
        return Err(EcoreError::Parse(format!(
            "root element `{}` is not an EPackage",
            root.name
        )));
    };
    Loader::default().package(package)
}

#[derive(Default)]
struct Loader {
    classes: Vec<MetaClass>,
    datatypes: Vec<DataType>,
    enums: Vec<EnumType>,
    builtins: Vec<DataType>,
}

fn required<'e>(el: &'e Element, attr: &str) -> Result<&'e str, EcoreError> {
    el.attr(attr)
        .ok_or_else(|| EcoreError::Parse(format!("<{}> lacks `{attr}`", el.name)))
}

fn flag(el: &Element, attr: &str) -> bool {
    el.attr(attr) == Some("true")
}

/// `xsi:type` local part, e.g. `EClass`.
fn xsi_type(el: &Element) -> Option<&str> {
    el.attr("xsi:type").map(dom::local)
}

fn builtin_kind(name: &str) -> PrimitiveKind {
    match name {
        "EBoolean" | "EBooleanObject" => PrimitiveKind::Boolean,
        "EInt" | "EIntegerObject" | "ELong" | "ELongObject" | "EShort" | "EShortObject"
        | "EByte" | "EByteObject" | "EBigInteger" => PrimitiveKind::Integer,
        "EFloat" | "EFloatObject" | "EDouble" | "EDoubleObject" | "EBigDecimal" => {
            PrimitiveKind::Float
        }
        _ => PrimitiveKind::String,
    }
}

fn instance_class_kind(name: &str) -> PrimitiveKind {
    match name {
        "boolean" | "java.lang.Boolean" => PrimitiveKind::Boolean,
        "int"
        | "long"
        | "short"
        | "byte"
        | "java.lang.Integer"
        | "java.lang.Long"
        | "java.lang.Short"
        | "java.lang.Byte"
        | "java.math.BigInteger" => PrimitiveKind::Integer,
        "float" | "double" | "java.lang.Float" | "java.lang.Double" | "java.math.BigDecimal" => {
            PrimitiveKind::Float
        }
        _ => PrimitiveKind::String,
    }
}

/// Resolved `eType` reference.
enum TypeRef {
    Local(String),
    Builtin(String),
    External(String),
}

fn type_ref(raw: &str) -> TypeRef {
    // Some tools prefix the reference with its classifier kind: "ecore:EClass x.ecore#//Y".
    let uri = raw.rsplit(' ').next().unwrap_or(raw);
    if let Some(name) = uri.strip_prefix("#//") {
        return TypeRef::Local(name.to_string());
    }
    if let Some((base, frag)) = uri.split_once("#//") {
        if base == ECORE_NS || base.ends_with("Ecore.ecore") {
            return TypeRef::Builtin(frag.to_string());
        }
    }
    TypeRef::External(raw.to_string())
}

impl Loader {
    fn package(mut self, pkg: &Element) -> Result<Metamodel, EcoreError> {
        let name = required(pkg, "name")?.to_string();
        let ns_uri = required(pkg, "nsURI")?.to_string();
        let ns_prefix = pkg.attr("nsPrefix").unwrap_or(&name).to_string();
        for child in &pkg.children {
            match child.local_name() {
                "eClassifiers" => self.classifier(child)?,
                "eSubpackages" => log::warn!(
                    "nested package `{}` ignored",
                    child.attr("name").unwrap_or("?")
                ),
                "eAnnotations" => {}
                other => log::debug!("ignoring <{other}> in package {name}"),
            }
        }
        let mut datatypes = self.datatypes;
        for b in self.builtins {
            if !datatypes.iter().any(|d| d.name == b.name)
                && !self.classes.iter().any(|c| c.name == b.name)
                && !self.enums.iter().any(|e| e.name == b.name)
            {
                datatypes.push(b);
            }
        }
        Ok(Metamodel::new(
            name,
            ns_uri,
            ns_prefix,
            self.classes,
            datatypes,
            self.enums,
        )?)
    }

    fn classifier(&mut self, el: &Element) -> Result<(), EcoreError> {
        let name = required(el, "name")?;
        match xsi_type(el) {
            Some("EClass") => {
                let mut class = MetaClass::new(name);
                if flag(el, "abstract") || flag(el, "interface") {
                    class = class.abstract_class();
                }
                for sup in el.attr("eSuperTypes").unwrap_or("").split_whitespace() {
                    match sup.strip_prefix("#//") {
                        Some(local) => class = class.extends(local),
                        None => {
                            return Err(MetamodelError::UnresolvedType {
                                name: sup.to_string(),
                                context: format!("supertype of {name}"),
                            }
                            .into())
                        }
                    }
                }
                for f in el
                    .children
                    .iter()
                    .filter(|c| c.local_name() == "eStructuralFeatures")
                {
                    class = class.with(self.feature(name, f)?);
                }
                self.classes.push(class);
            }
            Some("EEnum") => {
                let literals = el
                    .children
                    .iter()
                    .filter(|c| c.local_name() == "eLiterals")
                    .map(|l| required(l, "name").map(str::to_string))
                    .collect::<Result<Vec<_>, _>>()?;
                self.enums.push(EnumType::new(name, literals));
            }
            Some("EDataType") => {
                let kind = el
                    .attr("instanceClassName")
                    .map_or(PrimitiveKind::String, instance_class_kind);
                self.datatypes.push(DataType::new(name, kind));
            }
            other => {
                return Err(EcoreError::Parse(format!(
                    "classifier `{name}` has unsupported type {other:?}"
                )))
            }
        }
        Ok(())
    }

    fn feature(&mut self, class: &str, el: &Element) -> Result<Feature, EcoreError> {
        let name = required(el, "name")?;
        let is_ref = match xsi_type(el) {
            Some("EAttribute") => false,
            Some("EReference") => true,
            other => {
                return Err(EcoreError::Parse(format!(
                    "feature {class}.{name} has unsupported type {other:?}"
                )))
            }
        };
        let raw_type = el.attr("eType").ok_or_else(|| {
            EcoreError::Parse(format!(
                "feature {class}.{name} has no eType (generic types are not supported)"
            ))
        })?;
        let (type_name, external) = match type_ref(raw_type) {
            TypeRef::Local(n) => (n, false),
            // Ecore's own classes (EClass, EPackage, ...) are outside this package.
            TypeRef::Builtin(_) if is_ref => (raw_type.to_string(), true),
            TypeRef::Builtin(n) => {
                if !self.builtins.iter().any(|d| d.name == n) {
                    self.builtins
                        .push(DataType::new(n.clone(), builtin_kind(&n)));
                }
                (n, false)
            }
            TypeRef::External(n) => (n, true),
        };
        let mut f = if is_ref {
            Feature::reference(name, type_name)
        } else {
            Feature::attribute(name, type_name)
        };
        if external {
            f = f.external();
        }
        let parse_bound = |attr: &str, default: i64| -> Result<i64, EcoreError> {
            el.attr(attr).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| EcoreError::Parse(format!("{class}.{name}: bad {attr} `{v}`")))
            })
        };
        let lower = parse_bound("lowerBound", 0)?;
        // -2 is Ecore's "unspecified", read as many-valued.
        let upper = match parse_bound("upperBound", 1)? {
            -2 => -1,
            u => u,
        };
        let lower = u32::try_from(lower)
            .map_err(|_| EcoreError::Parse(format!("{class}.{name}: negative lowerBound")))?;
        let upper = i32::try_from(upper)
            .map_err(|_| EcoreError::Parse(format!("{class}.{name}: upperBound out of range")))?;
        f = f.bounds(lower, upper);
        if flag(el, "containment") {
            f = f.containment();
        }
        if el.attr("ordered") == Some("false") {
            f.ordered = false;
        }
        if let Some(opp) = el.attr("eOpposite") {
            let opp_name = opp.rsplit_once('/').map(|(_, n)| n).ok_or_else(|| {
                EcoreError::Parse(format!("{class}.{name}: bad eOpposite `{opp}`"))
            })?;
            f = f.opposite(opp_name);
        }
        for ignored in [
            "derived",
            "transient",
            "volatile",
            "changeable",
            "unsettable",
            "resolveProxies",
        ] {
            if el.attr(ignored).is_some() {
                log::debug!("{class}.{name}: `{ignored}` ignored");
            }
        }
        Ok(f)
    }
}
