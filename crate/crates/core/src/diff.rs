//! Structural equivalence of two resource sets.
//!
//! Objects are paired top-down: resources by file name, roots by position,
//! contained objects by position within their containment feature. Once
//! every pair is known, attributes are compared by value and references by
//! whether their targets correspond.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::fragment::object_uri;
use crate::instance::{ObjectId, ResourceSet, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiffKind {
    MissingObject,
    ExtraObject,
    ClassMismatch,
    AttrMismatch,
    RefMismatch,
    OrderMismatch,
    ExternalRefMismatch,
}

impl DiffKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiffKind::MissingObject => "MissingObject",
            DiffKind::ExtraObject => "ExtraObject",
            DiffKind::ClassMismatch => "ClassMismatch",
            DiffKind::AttrMismatch => "AttrMismatch",
            DiffKind::RefMismatch => "RefMismatch",
            DiffKind::OrderMismatch => "OrderMismatch",
            DiffKind::ExternalRefMismatch => "ExternalRefMismatch",
        }
    }
}

impl fmt::Display for DiffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffEntry {
    pub kind: DiffKind,
    /// `resource#fragment` of the object in the first set (second set for
    /// `ExtraObject`).
    pub path: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffReport {
    pub entries: Vec<DiffEntry>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// One tab-separated `kind path detail` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{}", e.kind, e.path, e.detail);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOptions {
    pub ignore_xmi_ids: bool,
    /// Containment or reference features compared as multisets.
    pub unordered_features: BTreeSet<String>,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions {
            ignore_xmi_ids: true,
            unordered_features: BTreeSet::new(),
        }
    }
}

pub fn equivalent(a: &ResourceSet, b: &ResourceSet, opts: &DiffOptions) -> bool {
    diff(a, b, opts).is_empty()
}

fn basename(uri: &str) -> &str {
    uri.rsplit(['/', '\\']).next().unwrap_or(uri)
}

struct Differ<'a> {
    a: &'a ResourceSet,
    b: &'a ResourceSet,
    opts: &'a DiffOptions,
    ab: BTreeMap<ObjectId, ObjectId>,
    pairs: Vec<(ObjectId, ObjectId)>,
    entries: Vec<DiffEntry>,
}

pub fn diff(a: &ResourceSet, b: &ResourceSet, opts: &DiffOptions) -> DiffReport {
    let mut d = Differ {
        a,
        b,
        opts,
        ab: BTreeMap::new(),
        pairs: Vec::new(),
        entries: Vec::new(),
    };
    let mut matched_b = BTreeSet::new();
    for ra in a.resource_ids() {
        let res_a = a.resource(ra);
        let found = b.resource_ids().find(|rb| {
            !matched_b.contains(rb) && basename(&b.resource(*rb).uri) == basename(&res_a.uri)
        });
        match found {
            Some(rb) => {
                matched_b.insert(rb);
                let roots_a = res_a.roots().to_vec();
                let roots_b = b.resource(rb).roots().to_vec();
                let loc = format!("{}#", res_a.uri);
                d.match_lists(&roots_a, &roots_b, false, &loc, "roots");
            }
            None => d.push(
                DiffKind::MissingObject,
                res_a.uri.clone(),
                "resource missing".to_string(),
            ),
        }
    }
    for rb in b.resource_ids() {
        if !matched_b.contains(&rb) {
            d.push(
                DiffKind::ExtraObject,
                b.resource(rb).uri.clone(),
                "unexpected resource".to_string(),
            );
        }
    }
    let pairs = core::mem::take(&mut d.pairs);
    for (x, y) in pairs {
        d.compare_slots(x, y);
    }
    DiffReport { entries: d.entries }
}

impl<'a> Differ<'a> {
    fn push(&mut self, kind: DiffKind, path: String, detail: String) {
        self.entries.push(DiffEntry { kind, path, detail });
    }

    fn path_a(&self, id: ObjectId) -> String {
        object_uri(self.a, id).unwrap_or_default()
    }

    fn path_b(&self, id: ObjectId) -> String {
        object_uri(self.b, id).unwrap_or_default()
    }

    fn match_lists(
        &mut self,
        xs: &[ObjectId],
        ys: &[ObjectId],
        unordered: bool,
        location: &str,
        feature: &str,
    ) {
        let sig_a: Vec<String> = xs
            .iter()
            .map(|x| signature(self.a, *x, self.opts))
            .collect();
        let sig_b: Vec<String> = ys
            .iter()
            .map(|y| signature(self.b, *y, self.opts))
            .collect();
        let by_signature = if unordered {
            true
        } else if sig_a != sig_b && sorted(&sig_a) == sorted(&sig_b) {
            self.push(
                DiffKind::OrderMismatch,
                location.to_string(),
                format!("`{feature}` holds the same objects in a different order"),
            );
            true
        } else {
            false
        };

        let mut pairs = Vec::new();
        let (mut rest_a, mut rest_b): (Vec<usize>, Vec<usize>);
        if by_signature {
            let mut used = alloc::vec![false; ys.len()];
            rest_a = Vec::new();
            for (i, s) in sig_a.iter().enumerate() {
                match (0..ys.len()).find(|j| !used[*j] && sig_b[*j] == *s) {
                    Some(j) => {
                        used[j] = true;
                        pairs.push((i, j));
                    }
                    None => rest_a.push(i),
                }
            }
            rest_b = (0..ys.len()).filter(|j| !used[*j]).collect();
        } else {
            rest_a = (0..xs.len()).collect();
            rest_b = (0..ys.len()).collect();
        }
        let common = rest_a.len().min(rest_b.len());
        pairs.extend(rest_a.iter().zip(&rest_b).map(|(i, j)| (*i, *j)));
        for i in rest_a.drain(common..) {
            let p = self.path_a(xs[i]);
            let class = self.a.class_of(xs[i]).unwrap_or_default().to_string();
            self.push(
                DiffKind::MissingObject,
                p,
                format!("`{class}` in `{feature}` has no counterpart"),
            );
        }
        for j in rest_b.drain(common..) {
            let p = self.path_b(ys[j]);
            let class = self.b.class_of(ys[j]).unwrap_or_default().to_string();
            self.push(
                DiffKind::ExtraObject,
                p,
                format!("unexpected `{class}` in `{feature}`"),
            );
        }
        pairs.sort_unstable();
        for (i, j) in pairs {
            self.pair(xs[i], ys[j]);
        }
    }

    fn pair(&mut self, x: ObjectId, y: ObjectId) {
        self.ab.insert(x, y);
        self.pairs.push((x, y));
        let ca = self.a.class_of(x).unwrap_or_default();
        let cb = self.b.class_of(y).unwrap_or_default();
        if ca != cb {
            let p = self.path_a(x);
            self.push(DiffKind::ClassMismatch, p, format!("`{ca}` vs `{cb}`"));
        }
        let kids_a = grouped_children(self.a, x);
        let kids_b = grouped_children(self.b, y);
        let features: BTreeSet<&String> = kids_a.keys().chain(kids_b.keys()).collect();
        let loc = if features.is_empty() {
            String::new()
        } else {
            self.path_a(x)
        };
        for f in features {
            let empty = Vec::new();
            let xs = kids_a.get(f).unwrap_or(&empty);
            let ys = kids_b.get(f).unwrap_or(&empty);
            let unordered = self.opts.unordered_features.contains(f.as_str());
            self.match_lists(xs, ys, unordered, &loc, f);
        }
    }

    fn compare_slots(&mut self, x: ObjectId, y: ObjectId) {
        let (Some(oa), Some(ob)) = (self.a.object(x), self.b.object(y)) else {
            return;
        };
        if !self.opts.ignore_xmi_ids && oa.xmi_id() != ob.xmi_id() {
            let p = self.path_a(x);
            self.push(
                DiffKind::AttrMismatch,
                p,
                format!("xmi:id: {:?} vs {:?}", oa.xmi_id(), ob.xmi_id()),
            );
        }
        let names: BTreeSet<&str> = oa
            .slots()
            .map(|(k, _)| k)
            .chain(ob.slots().map(|(k, _)| k))
            .collect();
        for name in names {
            let va = oa.slot(name);
            let vb = ob.slot(name);
            let contained = |rs: &ResourceSet, owner: ObjectId, v: Option<&Value>| {
                v.is_some_and(|v| {
                    v.refs()
                        .any(|c| rs.object(c).and_then(|o| o.owner()) == Some((owner, name)))
                })
            };
            if contained(self.a, x, va) || contained(self.b, y, vb) {
                continue;
            }
            let is_ref = va.is_some_and(Value::is_reference) || vb.is_some_and(Value::is_reference);
            if is_ref {
                self.compare_refs(x, name, va, vb);
            } else if va != vb {
                let p = self.path_a(x);
                self.push(
                    DiffKind::AttrMismatch,
                    p,
                    format!("`{name}`: {} vs {}", show(va), show(vb)),
                );
            }
        }
    }

    fn compare_refs(&mut self, x: ObjectId, name: &str, va: Option<&Value>, vb: Option<&Value>) {
        #[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Debug)]
        enum Key {
            Obj(Option<ObjectId>),
            Ext(String),
        }
        let ka: Vec<Key> = va
            .map(|v| v.items())
            .unwrap_or(&[])
            .iter()
            .map(|i| match i {
                Value::Ref(t) => Key::Obj(self.ab.get(t).copied()),
                Value::External(e) => Key::Ext(e.to_string()),
                other => Key::Ext(format!("{other:?}")),
            })
            .collect();
        let kb: Vec<Key> = vb
            .map(|v| v.items())
            .unwrap_or(&[])
            .iter()
            .map(|i| match i {
                Value::Ref(t) => Key::Obj(Some(*t)),
                Value::External(e) => Key::Ext(e.to_string()),
                other => Key::Ext(format!("{other:?}")),
            })
            .collect();
        if ka == kb && !ka.contains(&Key::Obj(None)) {
            return;
        }
        let same_multiset = sorted(&ka) == sorted(&kb) && !ka.contains(&Key::Obj(None));
        let p = self.path_a(x);
        if same_multiset {
            if !self.opts.unordered_features.contains(name) {
                self.push(
                    DiffKind::OrderMismatch,
                    p,
                    format!("`{name}` targets reordered"),
                );
            }
            return;
        }
        let ext = |k: &[Key]| {
            k.iter()
                .filter(|k| matches!(k, Key::Ext(_)))
                .cloned()
                .collect::<Vec<_>>()
        };
        let obj = |k: &[Key]| {
            k.iter()
                .filter(|k| matches!(k, Key::Obj(_)))
                .cloned()
                .collect::<Vec<_>>()
        };
        let ext_differs = ext(&ka) != ext(&kb);
        let obj_differs = obj(&ka) != obj(&kb) || ka.contains(&Key::Obj(None));
        if ext_differs {
            self.push(
                DiffKind::ExternalRefMismatch,
                p.clone(),
                format!("`{name}`: {} vs {}", show(va), show(vb)),
            );
        }
        if obj_differs {
            let targets = |rs: &ResourceSet, v: Option<&Value>| -> String {
                let list: Vec<String> = v
                    .map(|v| {
                        v.refs()
                            .map(|t| object_uri(rs, t).unwrap_or_else(|| t.to_string()))
                            .collect()
                    })
                    .unwrap_or_default();
                format!("[{}]", list.join(", "))
            };
            self.push(
                DiffKind::RefMismatch,
                p,
                format!(
                    "`{name}`: {} vs {}",
                    targets(self.a, va),
                    targets(self.b, vb)
                ),
            );
        }
    }
}

fn sorted<T: Ord + Clone>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort();
    v
}

fn show(v: Option<&Value>) -> String {
    match v {
        None => "unset".to_string(),
        Some(Value::String(s)) => format!("{s:?}"),
        Some(Value::External(e)) => e.to_string(),
        Some(Value::List(items)) => {
            let parts: Vec<String> = items.iter().map(|i| show(Some(i))).collect();
            format!("[{}]", parts.join(", "))
        }
        Some(other) => format!("{other:?}"),
    }
}

fn grouped_children(rs: &ResourceSet, id: ObjectId) -> BTreeMap<String, Vec<ObjectId>> {
    let mut out: BTreeMap<String, Vec<ObjectId>> = BTreeMap::new();
    for (f, c) in rs.children(id) {
        out.entry(f).or_default().push(c);
    }
    out
}

/// Class, attribute slots and contained subtrees; reference targets are left
/// out because they can only be compared once objects are paired.
fn signature(rs: &ResourceSet, id: ObjectId, opts: &DiffOptions) -> String {
    let mut out = String::new();
    let Some(o) = rs.object(id) else {
        return out;
    };
    out.push_str(o.class_name());
    if !opts.ignore_xmi_ids {
        let _ = write!(out, "#{:?}", o.xmi_id());
    }
    out.push('{');
    for (name, v) in o.slots() {
        if !v.is_reference() {
            let _ = write!(out, "{name}={v:?};");
        }
    }
    for (f, kids) in grouped_children(rs, id) {
        let mut sigs: Vec<String> = kids.iter().map(|k| signature(rs, *k, opts)).collect();
        if opts.unordered_features.contains(&f) {
            sigs.sort();
        }
        let _ = write!(out, "{f}=[{}];", sigs.join(","));
    }
    out.push('}');
    out
}
