//! Registry configuration files.
//!
//! ```text
//! # comment
//! plan = gmf-map-chain
//! version 1.0 = gmfmap_1_0.ecore
//! version 2.0 = gmfmap_2_0.ecore
//! ```
//!
//! Versions are listed oldest first. Metamodel paths are relative to the
//! directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use migrata_core::gmf::PlanConstructionError;
use migrata_core::{MigratorRegistry, RegistryError};
use thiserror::Error;

use crate::ecore::{load_metamodel, EcoreError};
use crate::plans::build_plan;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("registry lists no versions")]
    NoVersions,
    #[error(transparent)]
    Ecore(#[from] EcoreError),
    #[error(transparent)]
    Plan(#[from] PlanConstructionError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryConfig {
    pub plan: String,
    /// `(label, metamodel path)`, oldest first.
    pub versions: Vec<(String, PathBuf)>,
}

impl RegistryConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut plan = None;
        let mut versions: Vec<(String, PathBuf)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax(format!("`{key}` has no value")));
            }
            if key == "plan" {
                if plan.replace(value.to_string()).is_some() {
                    return Err(syntax("`plan` given twice".into()));
                }
            } else if let Some(label) = key.strip_prefix("version ").map(str::trim) {
                if versions.iter().any(|(l, _)| l == label) {
                    return Err(syntax(format!("version `{label}` given twice")));
                }
                versions.push((label.to_string(), base_dir.join(value)));
            } else {
                return Err(syntax(format!("unknown key `{key}`")));
            }
        }
        let plan = plan.ok_or(ConfigError::Syntax {
            line: 0,
            message: "missing `plan`".into(),
        })?;
        if versions.is_empty() {
            return Err(ConfigError::NoVersions);
        }
        Ok(RegistryConfig { plan, versions })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Loads every metamodel and builds one plan per adjacent pair.
    pub fn build(&self) -> Result<MigratorRegistry, ConfigError> {
        let mut versions = Vec::with_capacity(self.versions.len());
        for (label, path) in &self.versions {
            versions.push((label.clone(), Arc::new(load_metamodel(path)?)));
        }
        let plans = versions
            .windows(2)
            .map(|w| build_plan(&self.plan, &w[0].1, &w[1].1))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MigratorRegistry::new(versions, plans)?)
    }
}

/// Loads and builds the registry described by `path`.
pub fn load_registry(path: &Path) -> Result<MigratorRegistry, ConfigError> {
    RegistryConfig::load(path)?.build()
}
