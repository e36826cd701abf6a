//! File formats and command-line front end for `migrata-core`.
//!
//! Loads Ecore metamodels, reads and writes XMI resource sets, parses
//! registry configuration files and runs the `migrata` command.

pub mod cli;
pub mod config;
pub mod dom;
pub mod ecore;
pub mod pipeline;
pub mod plans;
pub mod xmi;

pub use config::{ConfigError, RegistryConfig};
pub use ecore::{load_metamodel, parse_metamodel, EcoreError};
pub use pipeline::{chain_migrate, migrate_files, write_staged, PipelineError};
pub use xmi::{
    detect_version, read_resource_set, read_resource_set_with, serialize_resource,
    write_resource_set, MetamodelLookup, ReadOptions, ReadOutput, XmiError,
};
