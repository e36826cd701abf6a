//! XMI 2.0 reading and writing for resource sets.
//!
//! Reading is two-pass: every file's containment tree is built first, then
//! non-containment references are resolved across the whole set.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use migrata_core::fragment::resolve_fragment;
use migrata_core::{
    object_fragment, ExternalRef, Feature, FeatureKind, Metamodel, MigratorRegistry, ModelError,
    ObjectId, PrimitiveKind, ResourceId, ResourceSet, Value, VersionId,
};
use quick_xml::events::Event;
use thiserror::Error;

use crate::dom::{self, escape_attr, escape_text, Element};

pub const XMI_NS: &str = "http://www.omg.org/XMI";
pub const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";

#[derive(Debug, Error)]
pub enum XmiError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed XML: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: namespace `{ns_uri}` is not registered")]
    UnknownNamespace { path: PathBuf, ns_uri: String },
    #[error("{path}: namespace `{found}` differs from `{expected}` used by the other inputs")]
    NamespaceMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: unknown class `{class}`")]
    UnknownClass { path: PathBuf, class: String },
    #[error("{path}: class `{class}` has no feature `{feature}`")]
    FeatureMismatch {
        path: PathBuf,
        class: String,
        feature: String,
    },
    #[error("{path}: invalid value for {class}.{feature}: {detail}")]
    InvalidValue {
        path: PathBuf,
        class: String,
        feature: String,
        detail: String,
    },
    #[error("{path}: reference `{uri}` does not resolve")]
    UnresolvedReference { path: PathBuf, uri: String },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("two inputs share the file name `{0}`")]
    DuplicateResource(String),
    #[error("{location}: `{feature}` refers to an object outside every resource")]
    DanglingReference { location: String, feature: String },
}

/// Finds the metamodel for a namespace uri.
pub trait MetamodelLookup {
    fn lookup(&self, ns_uri: &str) -> Option<Arc<Metamodel>>;
}

impl MetamodelLookup for MigratorRegistry {
    fn lookup(&self, ns_uri: &str) -> Option<Arc<Metamodel>> {
        self.metamodel(ns_uri).cloned()
    }
}

impl MetamodelLookup for [Arc<Metamodel>] {
    fn lookup(&self, ns_uri: &str) -> Option<Arc<Metamodel>> {
        self.iter().find(|m| m.ns_uri == ns_uri).cloned()
    }
}

impl MetamodelLookup for Vec<Arc<Metamodel>> {
    fn lookup(&self, ns_uri: &str) -> Option<Arc<Metamodel>> {
        self.as_slice().lookup(ns_uri)
    }
}

impl MetamodelLookup for Arc<Metamodel> {
    fn lookup(&self, ns_uri: &str) -> Option<Arc<Metamodel>> {
        (self.ns_uri == ns_uri).then(|| self.clone())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    /// Drop unknown document features with a warning instead of failing.
    pub lenient: bool,
}

#[derive(Debug)]
pub struct ReadOutput {
    pub set: ResourceSet,
    pub warnings: Vec<String>,
}

/// Reads `paths` into one resource set, one resource per file, in order.
pub fn read_resource_set<P, L>(paths: &[P], lookup: &L) -> Result<ResourceSet, XmiError>
where
    P: AsRef<Path>,
    L: MetamodelLookup + ?Sized,
{
    read_resource_set_with(paths, lookup, &ReadOptions::default()).map(|o| o.set)
}

pub fn read_resource_set_with<P, L>(
    paths: &[P],
    lookup: &L,
    opts: &ReadOptions,
) -> Result<ReadOutput, XmiError>
where
    P: AsRef<Path>,
    L: MetamodelLookup + ?Sized,
{
    let mut docs = Vec::with_capacity(paths.len());
    for p in paths {
        docs.push(Doc::load(p.as_ref())?);
    }
    let mut ns: Option<(String, &Path)> = None;
    for doc in &docs {
        if let Some(found) = doc.namespace(lookup)? {
            match &ns {
                None => ns = Some((found, &doc.path)),
                Some((expected, _)) if *expected != found => {
                    return Err(XmiError::NamespaceMismatch {
                        path: doc.path.clone(),
                        expected: expected.clone(),
                        found,
                    })
                }
                Some(_) => {}
            }
        }
    }
    let Some((ns_uri, first)) = ns else {
        return Err(XmiError::UnknownNamespace {
            path: docs.first().map(|d| d.path.clone()).unwrap_or_default(),
            ns_uri: String::new(),
        });
    };
    let mm = lookup
        .lookup(&ns_uri)
        .ok_or_else(|| XmiError::UnknownNamespace {
            path: first.to_path_buf(),
            ns_uri: ns_uri.clone(),
        })?;

    let mut reader = Reader {
        rs: ResourceSet::new(mm),
        opts,
        warnings: Vec::new(),
        pending: Vec::new(),
        doc_index: 0,
        path: PathBuf::new(),
    };
    let mut resources = Vec::with_capacity(docs.len());
    for (i, doc) in docs.iter().enumerate() {
        reader.doc_index = i;
        reader.path = doc.path.clone();
        let name = file_name(&doc.path);
        let res = reader
            .rs
            .add_resource(name.clone())
            .map_err(|_| XmiError::DuplicateResource(name))?;
        resources.push(res);
        for el in doc.object_elements() {
            let class = el.attr("xsi:type").map_or(el.local_name(), dom::local);
            let obj = reader.instantiate(class)?;
            reader.fill(obj, el)?;
            reader
                .rs
                .add_root(res, obj)
                .map_err(|e| reader.model_err(e))?;
        }
    }

    let canonical: Vec<Option<PathBuf>> = docs
        .iter()
        .map(|d| fs::canonicalize(&d.path).ok())
        .collect();
    let pending = std::mem::take(&mut reader.pending);
    for p in pending {
        let doc = &docs[p.doc];
        reader.path = doc.path.clone();
        let mut values = Vec::with_capacity(p.tokens.len());
        for token in &p.tokens {
            values.push(resolve_token(
                &reader.rs,
                token,
                doc,
                resources[p.doc],
                &canonical,
                &resources,
                p.external,
            )?);
        }
        let value = if p.many {
            Value::List(values)
        } else if values.len() == 1 {
            values.pop().expect("one value")
        } else {
            return Err(XmiError::InvalidValue {
                path: doc.path.clone(),
                class: reader.rs.class_of(p.obj).unwrap_or("?").to_string(),
                feature: p.feature,
                detail: format!("{} references on a single-valued feature", values.len()),
            });
        };
        reader
            .rs
            .set(p.obj, &p.feature, value)
            .map_err(|e| reader.model_err(e))?;
    }
    Ok(ReadOutput {
        set: reader.rs,
        warnings: reader.warnings,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn lexical_normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other),
        }
    }
    out
}

fn resolve_token(
    rs: &ResourceSet,
    token: &str,
    doc: &Doc,
    own: ResourceId,
    canonical: &[Option<PathBuf>],
    resources: &[ResourceId],
    external: bool,
) -> Result<Value, XmiError> {
    if external {
        return Ok(Value::External(ExternalRef::parse(token)));
    }
    let unresolved = || XmiError::UnresolvedReference {
        path: doc.path.clone(),
        uri: token.to_string(),
    };
    let (res, frag) = match token.split_once('#') {
        None => (own, token),
        Some(("", frag)) => (own, frag),
        Some((file, frag)) => {
            let joined = doc.path.parent().unwrap_or(Path::new("")).join(file);
            let target = fs::canonicalize(&joined).unwrap_or_else(|_| lexical_normalize(&joined));
            match canonical
                .iter()
                .position(|c| c.as_deref() == Some(target.as_path()))
            {
                Some(i) => (resources[i], frag),
                None => return Ok(Value::External(ExternalRef::new(file, frag))),
            }
        }
    };
    resolve_fragment(rs, res, frag)
        .map(Value::Ref)
        .ok_or_else(unresolved)
}

struct Doc {
    path: PathBuf,
    root: Element,
}

impl Doc {
    fn load(path: &Path) -> Result<Doc, XmiError> {
        let text = fs::read_to_string(path).map_err(|source| XmiError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = dom::parse(&text).map_err(|message| XmiError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(Doc {
            path: path.to_path_buf(),
            root,
        })
    }

    fn is_wrapper(&self) -> bool {
        is_wrapper(&self.root)
    }

    fn object_elements(&self) -> Vec<&Element> {
        if self.is_wrapper() {
            self.root.children.iter().collect()
        } else {
            vec![&self.root]
        }
    }

    fn prefix_uri(&self, prefix: &str) -> Option<&str> {
        self.root
            .namespace_decls()
            .chain(
                self.object_elements()
                    .into_iter()
                    .flat_map(|e| e.namespace_decls()),
            )
            .find(|(p, _)| *p == prefix)
            .map(|(_, u)| u)
    }

    /// Namespace of the model objects; `None` for an empty document that
    /// declares no usable namespace.
    fn namespace<L: MetamodelLookup + ?Sized>(
        &self,
        lookup: &L,
    ) -> Result<Option<String>, XmiError> {
        let mut found: Option<String> = None;
        for el in self.object_elements() {
            let prefix = el.prefix().unwrap_or("");
            let uri = self.prefix_uri(prefix).ok_or_else(|| XmiError::Parse {
                path: self.path.clone(),
                message: format!("undeclared namespace prefix `{prefix}` on <{}>", el.name),
            })?;
            match &found {
                None => found = Some(uri.to_string()),
                Some(f) if f != uri => {
                    return Err(XmiError::NamespaceMismatch {
                        path: self.path.clone(),
                        expected: f.clone(),
                        found: uri.to_string(),
                    })
                }
                Some(_) => {}
            }
        }
        if found.is_none() {
            let mut candidates = model_namespaces(&self.root).peekable();
            if candidates.peek().is_none() {
                return Ok(None);
            }
            let all: Vec<&str> = candidates.collect();
            found = Some(
                all.iter()
                    .find(|u| lookup.lookup(u).is_some())
                    .unwrap_or(&all[0])
                    .to_string(),
            );
        }
        Ok(found)
    }
}

fn is_wrapper(el: &Element) -> bool {
    el.local_name() == "XMI"
        && el.prefix().is_some_and(|p| {
            p == "xmi"
                || el
                    .namespace_decls()
                    .any(|(q, u)| q == p && u.starts_with("http://www.omg.org/"))
        })
}

/// Declared namespaces other than XMI and XSI.
fn model_namespaces(el: &Element) -> impl Iterator<Item = &str> {
    el.namespace_decls()
        .map(|(_, u)| u)
        .filter(|u| !u.starts_with("http://www.omg.org/") && *u != XSI_NS)
}

struct Pending {
    obj: ObjectId,
    feature: String,
    tokens: Vec<String>,
    doc: usize,
    many: bool,
    external: bool,
}

struct Reader<'o> {
    rs: ResourceSet,
    opts: &'o ReadOptions,
    warnings: Vec<String>,
    pending: Vec<Pending>,
    doc_index: usize,
    path: PathBuf,
}

impl Reader<'_> {
    fn model_err(&self, source: ModelError) -> XmiError {
        XmiError::Model {
            path: self.path.clone(),
            source,
        }
    }

    fn instantiate(&mut self, class: &str) -> Result<ObjectId, XmiError> {
        self.rs.instantiate(class).map_err(|e| match e {
            ModelError::UnknownClass(c) => XmiError::UnknownClass {
                path: self.path.clone(),
                class: c,
            },
            other => self.model_err(other),
        })
    }

    /// Looks a document feature up, or handles it as unknown. `Ok(None)`
    /// means the feature was dropped in lenient mode.
    fn feature(&mut self, class: &str, name: &str) -> Result<Option<Feature>, XmiError> {
        if let Some(f) = self.rs.metamodel().feature(class, name) {
            return Ok(Some(f.clone()));
        }
        if self.opts.lenient {
            let msg = format!(
                "{}: dropped unknown feature {class}.{name}",
                self.path.display()
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
            Ok(None)
        } else {
            Err(XmiError::FeatureMismatch {
                path: self.path.clone(),
                class: class.to_string(),
                feature: name.to_string(),
            })
        }
    }

    fn parse_value(&self, class: &str, f: &Feature, text: &str) -> Result<Value, XmiError> {
        let invalid = |detail: String| XmiError::InvalidValue {
            path: self.path.clone(),
            class: class.to_string(),
            feature: f.name.clone(),
            detail,
        };
        if f.external {
            return Ok(Value::String(text.to_string()));
        }
        let mm = self.rs.metamodel();
        if mm.find_enum(&f.type_name).is_some() {
            return Ok(Value::Enum(text.to_string()));
        }
        let kind = mm
            .find_datatype(&f.type_name)
            .map(|d| d.kind)
            .ok_or_else(|| invalid(format!("unknown datatype `{}`", f.type_name)))?;
        Ok(match kind {
            PrimitiveKind::String => Value::String(text.to_string()),
            PrimitiveKind::Boolean => match text.trim() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                other => return Err(invalid(format!("`{other}` is not a boolean"))),
            },
            PrimitiveKind::Integer => Value::Int(
                text.trim()
                    .parse()
                    .map_err(|_| invalid(format!("`{text}` is not an integer")))?,
            ),
            PrimitiveKind::Float => Value::Float(
                text.trim()
                    .parse()
                    .map_err(|_| invalid(format!("`{text}` is not a number")))?,
            ),
        })
    }

    fn fill(&mut self, obj: ObjectId, el: &Element) -> Result<(), XmiError> {
        let class = self
            .rs
            .class_of(obj)
            .expect("object just created")
            .to_string();
        let mut lists: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        let mut refs: Vec<(Feature, Vec<String>)> = Vec::new();
        let mut push_ref =
            |f: Feature, token: String| match refs.iter_mut().find(|(g, _)| g.name == f.name) {
                Some((_, tokens)) => tokens.push(token),
                None => refs.push((f, vec![token])),
            };

        for (key, text) in &el.attrs {
            if key == "xmi:id" {
                self.rs
                    .set_xmi_id(obj, Some(text.clone()))
                    .map_err(|e| self.model_err(e))?;
                continue;
            }
            if key.contains(':') || key == "xmlns" {
                continue;
            }
            let Some(f) = self.feature(&class, key)? else {
                continue;
            };
            match f.kind {
                FeatureKind::Attribute if f.is_many() => {
                    for word in text.split_whitespace() {
                        let v = self.parse_value(&class, &f, word)?;
                        lists.entry(f.name.clone()).or_default().push(v);
                    }
                }
                FeatureKind::Attribute => {
                    let v = self.parse_value(&class, &f, text)?;
                    self.rs
                        .set(obj, &f.name, v)
                        .map_err(|e| self.model_err(e))?;
                }
                FeatureKind::Reference if f.containment => {
                    return Err(XmiError::InvalidValue {
                        path: self.path.clone(),
                        class,
                        feature: f.name.clone(),
                        detail: "containment written as an attribute".into(),
                    })
                }
                FeatureKind::Reference => {
                    for token in text.split_whitespace() {
                        push_ref(f.clone(), token.to_string());
                    }
                }
            }
        }

        for child in &el.children {
            let Some(f) = self.feature(&class, child.local_name())? else {
                continue;
            };
            match f.kind {
                FeatureKind::Attribute => {
                    let v = self.parse_value(&class, &f, &child.text)?;
                    if f.is_many() {
                        lists.entry(f.name.clone()).or_default().push(v);
                    } else {
                        self.rs
                            .set(obj, &f.name, v)
                            .map_err(|e| self.model_err(e))?;
                    }
                }
                FeatureKind::Reference if f.containment => {
                    let child_class = child
                        .attr("xsi:type")
                        .map_or(f.type_name.as_str(), dom::local);
                    let child_obj = self.instantiate(child_class)?;
                    self.fill(child_obj, child)?;
                    if f.is_many() {
                        lists
                            .entry(f.name.clone())
                            .or_default()
                            .push(Value::Ref(child_obj));
                    } else {
                        self.rs
                            .set(obj, &f.name, Value::Ref(child_obj))
                            .map_err(|e| self.model_err(e))?;
                    }
                }
                FeatureKind::Reference => {
                    let href = child.attr("href").ok_or_else(|| XmiError::InvalidValue {
                        path: self.path.clone(),
                        class: class.clone(),
                        feature: f.name.clone(),
                        detail: "reference element without href".into(),
                    })?;
                    push_ref(f, href.to_string());
                }
            }
        }

        for (feature, items) in lists {
            self.rs
                .set(obj, &feature, Value::List(items))
                .map_err(|e| self.model_err(e))?;
        }
        for (f, tokens) in refs {
            self.pending.push(Pending {
                obj,
                feature: f.name.clone(),
                tokens,
                doc: self.doc_index,
                many: f.is_many(),
                external: f.external,
            });
        }
        Ok(())
    }
}

/// Serializes one resource to XMI text.
pub fn serialize_resource(rs: &ResourceSet, resource: ResourceId) -> Result<String, XmiError> {
    let mm = rs.metamodel();
    let mut w = Writer {
        rs,
        resource,
        prefix: &mm.ns_prefix,
        out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
    };
    let decls = format!(
        " xmi:version=\"2.0\" xmlns:xmi=\"{XMI_NS}\" xmlns:xsi=\"{XSI_NS}\" xmlns:{}=\"{}\"",
        mm.ns_prefix,
        escape_attr(&mm.ns_uri)
    );
    let roots = rs.resource(resource).roots();
    if let [root] = roots {
        let tag = w.qualified(rs.class_of(*root).unwrap_or_default());
        w.object(&tag, None, *root, 0, &decls)?;
    } else if roots.is_empty() {
        let _ = writeln!(w.out, "<xmi:XMI{decls}/>");
    } else {
        let _ = writeln!(w.out, "<xmi:XMI{decls}>");
        for root in roots {
            let tag = w.qualified(rs.class_of(*root).unwrap_or_default());
            w.object(&tag, None, *root, 1, "")?;
        }
        w.out.push_str("</xmi:XMI>\n");
    }
    Ok(w.out)
}

/// Writes one file per resource into `dir`, named after the resource.
/// Nothing is written if any resource fails to serialize.
pub fn write_resource_set(rs: &ResourceSet, dir: &Path) -> Result<Vec<PathBuf>, XmiError> {
    let texts = rs
        .resource_ids()
        .map(|r| serialize_resource(rs, r).map(|t| (dir.join(&rs.resource(r).uri), t)))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(dir).map_err(|source| XmiError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(texts.len());
    for (path, text) in texts {
        fs::write(&path, text).map_err(|source| XmiError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

enum Child<'a> {
    Text(&'a str, String),
    Object(&'a str, &'a str, ObjectId),
    Href(&'a str, String),
}

struct Writer<'a> {
    rs: &'a ResourceSet,
    resource: ResourceId,
    prefix: &'a str,
    out: String,
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) | Value::Enum(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => x.to_string(),
        Value::External(e) => e.to_string(),
        Value::Ref(id) => id.to_string(),
        Value::List(_) => String::new(),
    }
}

impl<'a> Writer<'a> {
    fn qualified(&self, class: &str) -> String {
        format!("{}:{class}", self.prefix)
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn dangling(&self, id: ObjectId, feature: &str) -> XmiError {
        XmiError::DanglingReference {
            location: format!(
                "{}#{}",
                self.rs.resource(self.resource).uri,
                object_fragment(self.rs, id)
                    .map(String::from)
                    .unwrap_or_default()
            ),
            feature: feature.to_string(),
        }
    }

    fn object(
        &mut self,
        tag: &str,
        static_type: Option<&str>,
        id: ObjectId,
        depth: usize,
        decls: &str,
    ) -> Result<(), XmiError> {
        let rs = self.rs;
        let obj = rs.object(id).expect("serialized objects exist");
        let class_name = obj.class_name();
        let class = rs
            .metamodel()
            .find_class(class_name)
            .expect("objects are instances of metamodel classes");
        self.indent(depth);
        let _ = write!(self.out, "<{tag}{decls}");
        if static_type.is_some_and(|t| t != class_name) {
            let _ = write!(self.out, " xsi:type=\"{}\"", self.qualified(class_name));
        }
        if let Some(x) = obj.xmi_id() {
            let _ = write!(self.out, " xmi:id=\"{}\"", escape_attr(x));
        }
        let mut children: Vec<Child<'a>> = Vec::new();
        for f in class.effective_features() {
            let Some(value) = obj.slot(&f.name) else {
                continue;
            };
            match f.kind {
                FeatureKind::Attribute if f.is_many() => {
                    for item in value.items() {
                        children.push(Child::Text(&f.name, scalar(item)));
                    }
                }
                FeatureKind::Attribute => {
                    let _ = write!(self.out, " {}=\"{}\"", f.name, escape_attr(&scalar(value)));
                }
                FeatureKind::Reference if f.containment => {
                    for child in value.refs() {
                        children.push(Child::Object(&f.name, &f.type_name, child));
                    }
                }
                FeatureKind::Reference => {
                    let items: &[Value] = match value {
                        Value::List(items) => items,
                        single => std::slice::from_ref(single),
                    };
                    let local = items.iter().all(|v| match v {
                        Value::Ref(t) => rs.resource_of(*t) == Some(self.resource),
                        _ => false,
                    });
                    if local {
                        let mut frags = Vec::with_capacity(items.len());
                        for t in items.iter().filter_map(Value::as_ref_id) {
                            let frag =
                                object_fragment(rs, t).ok_or_else(|| self.dangling(id, &f.name))?;
                            frags.push(String::from(frag));
                        }
                        let _ = write!(
                            self.out,
                            " {}=\"{}\"",
                            f.name,
                            escape_attr(&frags.join(" "))
                        );
                    } else {
                        for item in items {
                            let href = match item {
                                Value::External(e) => e.to_string(),
                                Value::Ref(t) => {
                                    let res = rs
                                        .resource_of(*t)
                                        .ok_or_else(|| self.dangling(id, &f.name))?;
                                    let frag = object_fragment(rs, *t)
                                        .ok_or_else(|| self.dangling(id, &f.name))?;
                                    if res == self.resource {
                                        format!("#{frag}")
                                    } else {
                                        format!("{}#{frag}", rs.resource(res).uri)
                                    }
                                }
                                _ => continue,
                            };
                            children.push(Child::Href(&f.name, href));
                        }
                    }
                }
            }
        }
        if children.is_empty() {
            self.out.push_str("/>\n");
            return Ok(());
        }
        self.out.push_str(">\n");
        for child in children {
            match child {
                Child::Text(name, text) => {
                    self.indent(depth + 1);
                    let _ = writeln!(self.out, "<{name}>{}</{name}>", escape_text(&text));
                }
                Child::Href(name, href) => {
                    self.indent(depth + 1);
                    let _ = writeln!(self.out, "<{name} href=\"{}\"/>", escape_attr(&href));
                }
                Child::Object(name, ty, child) => {
                    self.object(name, Some(ty), child, depth + 1, "")?
                }
            }
        }
        self.indent(depth);
        let _ = writeln!(self.out, "</{tag}>");
        Ok(())
    }
}

/// Namespace uri a document's model objects belong to, read from the root
/// element only.
pub fn document_namespace<L: MetamodelLookup + ?Sized>(
    path: &Path,
    lookup: &L,
) -> Result<String, XmiError> {
    let text = fs::read_to_string(path).map_err(|source| XmiError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| XmiError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = quick_xml::Reader::from_str(&text);
    let root = loop {
        match reader.read_event().map_err(|e| parse_err(e.to_string()))? {
            Event::Start(e) | Event::Empty(e) => {
                break dom::start_to_element(&e).map_err(parse_err)?
            }
            Event::Eof => return Err(parse_err("document has no root element".into())),
            _ => {}
        }
    };
    let unknown = |ns_uri: &str| XmiError::UnknownNamespace {
        path: path.to_path_buf(),
        ns_uri: ns_uri.to_string(),
    };
    if is_wrapper(&root) {
        let all: Vec<&str> = model_namespaces(&root).collect();
        return all
            .iter()
            .find(|u| lookup.lookup(u).is_some())
            .map(|u| u.to_string())
            .ok_or_else(|| unknown(all.first().copied().unwrap_or("")));
    }
    let prefix = root.prefix().unwrap_or("");
    let ns = root
        .namespace_decls()
        .find(|(p, _)| *p == prefix)
        .map(|(_, u)| u.to_string());
    ns.ok_or_else(|| parse_err(format!("undeclared namespace prefix `{prefix}`")))
}

/// Version label of a model file, from its root namespace.
pub fn detect_version(path: &Path, registry: &MigratorRegistry) -> Result<VersionId, XmiError> {
    let ns = document_namespace(path, registry)?;
    registry
        .version(&ns)
        .cloned()
        .map_err(|_| XmiError::UnknownNamespace {
            path: path.to_path_buf(),
            ns_uri: ns,
        })
}
