//! XMI-style URI fragments: `/<root>/@feature.index/...`.
//!
//! Canonical output prints `.index` only for many-valued containments. Input
//! also accepts an explicit index on single-valued ones, the `//@feature.N`
//! shorthand for root 0, a lone `/`, and bare `xmi:id` tokens.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::instance::{ExternalRef, ObjectId, ResourceId, ResourceSet, Value};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UriFragment(String);

impl UriFragment {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UriFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<UriFragment> for String {
    fn from(f: UriFragment) -> Self {
        f.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub feature: String,
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FragmentPath {
    Path { root: usize, steps: Vec<Step> },
    Id(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("malformed fragment `{0}`")]
    Malformed(String),
    #[error("`{uri}` does not resolve")]
    UnresolvedReference { uri: String },
}

/// Parses fragment text into root index and containment steps.
pub fn parse_fragment(text: &str) -> Result<FragmentPath, FragmentError> {
    let malformed = || FragmentError::Malformed(text.to_string());
    if text.is_empty() {
        return Err(malformed());
    }
    let Some(rest) = text.strip_prefix('/') else {
        if text.contains('/') || text.contains(char::is_whitespace) {
            return Err(malformed());
        }
        return Ok(FragmentPath::Id(text.to_string()));
    };
    let (root, rest) = if rest.is_empty() {
        (0, "")
    } else if rest.starts_with('/') {
        // "//@f.0" is "/0/@f.0"
        (0, rest)
    } else {
        let end = rest.find('/').unwrap_or(rest.len());
        let root = rest[..end].parse::<usize>().map_err(|_| malformed())?;
        (root, &rest[end..])
    };
    let mut steps = Vec::new();
    for seg in rest.split('/').skip(1) {
        let seg = seg.strip_prefix('@').ok_or_else(malformed)?;
        let (feature, index) = match seg.rsplit_once('.') {
            Some((f, i)) => (f, Some(i.parse::<usize>().map_err(|_| malformed())?)),
            None => (seg, None),
        };
        if feature.is_empty() {
            return Err(malformed());
        }
        steps.push(Step {
            feature: feature.to_string(),
            index,
        });
    }
    Ok(FragmentPath::Path { root, steps })
}

/// Canonical fragment of an attached object; `None` if it is detached.
pub fn object_fragment(rs: &ResourceSet, id: ObjectId) -> Option<UriFragment> {
    let mut steps = Vec::new();
    let mut cur = id;
    while let Some((owner, feature)) = rs.object(cur)?.owner() {
        let owner_obj = rs.object(owner)?;
        let many = rs
            .metamodel()
            .feature(owner_obj.class_name(), feature)
            .map(|f| f.is_many())
            .unwrap_or(true);
        if many {
            let pos = owner_obj.slot(feature)?.refs().position(|c| c == cur)?;
            steps.push(format!("/@{feature}.{pos}"));
        } else {
            steps.push(format!("/@{feature}"));
        }
        cur = owner;
    }
    let resource = rs.resource_of(cur)?;
    let root = rs
        .resource(resource)
        .roots()
        .iter()
        .position(|r| *r == cur)?;
    let mut text = format!("/{root}");
    for s in steps.iter().rev() {
        text.push_str(s);
    }
    Some(UriFragment(text))
}

/// `resource-uri#fragment` of an attached object.
pub fn object_uri(rs: &ResourceSet, id: ObjectId) -> Option<String> {
    let frag = object_fragment(rs, id)?;
    let res = rs.resource_of(id)?;
    Some(format!("{}#{}", rs.resource(res).uri, frag))
}

/// Resolves fragment text inside one resource.
pub fn resolve_fragment(rs: &ResourceSet, resource: ResourceId, text: &str) -> Option<ObjectId> {
    match parse_fragment(text).ok()? {
        FragmentPath::Id(id) => rs
            .resource_objects(resource)
            .into_iter()
            .find(|o| rs.object(*o).and_then(|o| o.xmi_id()) == Some(id.as_str())),
        FragmentPath::Path { root, steps } => {
            let mut cur = *rs.resource(resource).roots().get(root)?;
            for step in steps {
                let value = rs.slot(cur, &step.feature)?;
                let next = match (value, step.index) {
                    (Value::List(items), i) => items.get(i.unwrap_or(0))?.as_ref_id()?,
                    (Value::Ref(child), None | Some(0)) => *child,
                    _ => return None,
                };
                // non-containment features are not part of a path
                if rs.object(next)?.owner() != Some((cur, step.feature.as_str())) {
                    return None;
                }
                cur = next;
            }
            Some(cur)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    Object(ObjectId),
    External(ExternalRef),
}

fn basename(uri: &str) -> &str {
    uri.rsplit(['/', '\\']).next().unwrap_or(uri)
}

/// Finds the resource a document uri names, by exact uri or file name.
pub fn find_resource(rs: &ResourceSet, uri: &str) -> Option<ResourceId> {
    rs.resource_by_uri(uri).or_else(|| {
        let name = basename(uri);
        rs.resource_ids()
            .find(|r| basename(&rs.resource(*r).uri) == name)
    })
}

/// Resolves `fragment` (relative to `base`) or `file#fragment`.
///
/// A file outside the set yields an [`ExternalRef`] holding the uri
/// verbatim; a file inside the set with a bad fragment is an error.
pub fn resolve_uri(
    rs: &ResourceSet,
    base: ResourceId,
    uri: &str,
) -> Result<Resolved, FragmentError> {
    let unresolved = || FragmentError::UnresolvedReference {
        uri: uri.to_string(),
    };
    let (resource, fragment) = match uri.split_once('#') {
        None => (base, uri),
        Some(("", frag)) => (base, frag),
        Some((file, frag)) => match find_resource(rs, file) {
            Some(r) => (r, frag),
            None => return Ok(Resolved::External(ExternalRef::new(file, frag))),
        },
    };
    resolve_fragment(rs, resource, fragment)
        .map(Resolved::Object)
        .ok_or_else(unresolved)
}
