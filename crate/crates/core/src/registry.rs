//! Metamodel version histories and chained migration.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::engine::{migrate, EngineError, MigrationPlan};
use crate::instance::ResourceSet;
use crate::metamodel::Metamodel;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VersionId {
    pub ns_uri: String,
    pub label: String,
}

impl fmt::Display for VersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("namespace `{0}` is not registered")]
    UnknownNamespace(String),
    #[error("namespace `{0}` registered twice")]
    DuplicateNamespace(String),
    #[error("broken plan chain: {0}")]
    BrokenChain(String),
    #[error("inputs declare different versions: `{0}` and `{1}`")]
    MixedVersions(String, String),
    #[error("migrating {from} -> {to}: {source}")]
    Step {
        from: String,
        to: String,
        #[source]
        source: EngineError,
    },
}

#[derive(Debug)]
struct Entry {
    version: VersionId,
    metamodel: Arc<Metamodel>,
}

/// An ordered version history: plan `i` migrates version `i` to `i + 1`,
/// and the last version is the latest.
#[derive(Debug)]
pub struct MigratorRegistry {
    entries: Vec<Entry>,
    plans: Vec<MigrationPlan>,
}

impl MigratorRegistry {
    /// Builds a chain from versions ordered oldest to newest and one plan per
    /// adjacent pair.
    pub fn new(
        versions: Vec<(String, Arc<Metamodel>)>,
        plans: Vec<MigrationPlan>,
    ) -> Result<Self, RegistryError> {
        if versions.is_empty() {
            return Err(RegistryError::BrokenChain("no versions".to_string()));
        }
        if plans.len() + 1 != versions.len() {
            return Err(RegistryError::BrokenChain(alloc::format!(
                "{} versions need {} plans, got {}",
                versions.len(),
                versions.len() - 1,
                plans.len()
            )));
        }
        let mut entries: Vec<Entry> = Vec::with_capacity(versions.len());
        for (label, metamodel) in versions {
            if entries.iter().any(|e| e.version.ns_uri == metamodel.ns_uri) {
                return Err(RegistryError::DuplicateNamespace(metamodel.ns_uri.clone()));
            }
            entries.push(Entry {
                version: VersionId {
                    ns_uri: metamodel.ns_uri.clone(),
                    label,
                },
                metamodel,
            });
        }
        for (i, plan) in plans.iter().enumerate() {
            let (from, to) = (&entries[i].version, &entries[i + 1].version);
            if plan.source_ns_uri != from.ns_uri || plan.target_ns_uri != to.ns_uri {
                return Err(RegistryError::BrokenChain(alloc::format!(
                    "plan {i} goes {} -> {}, expected {} -> {}",
                    plan.source_ns_uri,
                    plan.target_ns_uri,
                    from.ns_uri,
                    to.ns_uri
                )));
            }
        }
        Ok(MigratorRegistry { entries, plans })
    }

    pub fn versions(&self) -> impl Iterator<Item = &VersionId> {
        self.entries.iter().map(|e| &e.version)
    }

    pub fn latest(&self) -> &VersionId {
        &self
            .entries
            .last()
            .expect("registry is never empty")
            .version
    }

    pub fn plans(&self) -> &[MigrationPlan] {
        &self.plans
    }

    fn position(&self, ns_uri: &str) -> Result<usize, RegistryError> {
        self.entries
            .iter()
            .position(|e| e.version.ns_uri == ns_uri)
            .ok_or_else(|| RegistryError::UnknownNamespace(ns_uri.to_string()))
    }

    pub fn is_registered(&self, ns_uri: &str) -> bool {
        self.position(ns_uri).is_ok()
    }

    /// Version registered under `ns_uri`.
    pub fn version(&self, ns_uri: &str) -> Result<&VersionId, RegistryError> {
        Ok(&self.entries[self.position(ns_uri)?].version)
    }

    pub fn metamodel(&self, ns_uri: &str) -> Option<&Arc<Metamodel>> {
        self.position(ns_uri)
            .ok()
            .map(|i| &self.entries[i].metamodel)
    }

    /// Plans that take `ns_uri` to the latest version, in order.
    pub fn steps_from(&self, ns_uri: &str) -> Result<&[MigrationPlan], RegistryError> {
        Ok(&self.plans[self.position(ns_uri)?..])
    }

    /// Threads `rs` through every plan from its version to the latest one.
    /// Returns the set unchanged (as a clone) if it is already latest.
    pub fn migrate_to_latest(&self, rs: &ResourceSet) -> Result<ResourceSet, RegistryError> {
        let start = self.position(&rs.metamodel().ns_uri)?;
        let mut current = rs.clone();
        for (i, plan) in self.plans.iter().enumerate().skip(start) {
            let target = self.entries[i + 1].metamodel.clone();
            let (next, _trace) =
                migrate(&current, target, plan).map_err(|source| RegistryError::Step {
                    from: self.entries[i].version.label.clone(),
                    to: self.entries[i + 1].version.label.clone(),
                    source,
                })?;
            current = next;
        }
        Ok(current)
    }
}
