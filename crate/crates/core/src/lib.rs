//! Metamodel-driven model migration.
//!
//! `migrata-core` holds everything that does not touch a file system: typed
//! metamodels, dynamic object graphs partitioned into resources, URI fragment
//! addressing, the two-phase conservative-copy migration engine, the built-in
//! GMF plans and the structural diff used as the equivalence oracle.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing and writing Ecore and
//! XMI documents lives in the `migrata` crate.

#![no_std]

extern crate alloc;

pub mod diff;
pub mod engine;
pub mod fragment;
pub mod gmf;
pub mod instance;
pub mod metamodel;
pub mod registry;

#[cfg(test)]
pub(crate) mod testing;

pub use diff::{diff, equivalent, DiffEntry, DiffKind, DiffOptions, DiffReport};
pub use engine::{migrate, MigrationContext, MigrationPlan, Outcome, Rule, Trace};
pub use fragment::{object_fragment, resolve_fragment, UriFragment};
pub use instance::{
    check_conformance, ExternalRef, ModelError, ModelObject, ObjectId, Resource, ResourceId,
    ResourceSet, Value, Violation, ViolationKind,
};
pub use metamodel::{
    DataType, EnumType, Feature, FeatureKind, MetaClass, Metamodel, MetamodelError, PrimitiveKind,
};
pub use registry::{MigratorRegistry, RegistryError, VersionId};
