//! Multi-file workflows shared by the CLI and tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use migrata_core::engine::EngineError;
use migrata_core::{
    migrate, Metamodel, MigrationPlan, MigratorRegistry, RegistryError, ResourceSet, Trace,
    VersionId,
};
use thiserror::Error;

use crate::xmi::{
    detect_version, read_resource_set_with, write_resource_set, ReadOptions, XmiError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Xmi(#[from] XmiError),
    #[error("migration failed: {0}")]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("no input models")]
    NoInputs,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub struct Migrated {
    pub set: ResourceSet,
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// Reads `paths` under `source_mm` and migrates them with `plan`.
pub fn migrate_files<P: AsRef<Path>>(
    paths: &[P],
    source_mm: Arc<Metamodel>,
    target_mm: Arc<Metamodel>,
    plan: &MigrationPlan,
    opts: &ReadOptions,
) -> Result<Migrated, PipelineError> {
    if paths.is_empty() {
        return Err(PipelineError::NoInputs);
    }
    let input = read_resource_set_with(paths, &source_mm, opts)?;
    let (set, trace) = migrate(&input.set, target_mm, plan)?;
    Ok(Migrated {
        set,
        trace,
        warnings: input.warnings,
    })
}

pub struct Chained {
    pub set: ResourceSet,
    pub from: VersionId,
    pub to: VersionId,
    pub warnings: Vec<String>,
}

/// Detects the version of every input, then migrates them together to the
/// registry's latest version. All inputs must share one version.
pub fn chain_migrate<P: AsRef<Path>>(
    paths: &[P],
    registry: &MigratorRegistry,
    opts: &ReadOptions,
) -> Result<Chained, PipelineError> {
    let mut from: Option<VersionId> = None;
    for p in paths {
        let v = detect_version(p.as_ref(), registry)?;
        match &from {
            Some(f) if *f != v => {
                return Err(RegistryError::MixedVersions(f.label.clone(), v.label).into());
            }
            Some(_) => {}
            None => from = Some(v),
        }
    }
    let from = from.ok_or(PipelineError::NoInputs)?;
    let input = read_resource_set_with(paths, registry, opts)?;
    let set = registry.migrate_to_latest(&input.set)?;
    Ok(Chained {
        set,
        from,
        to: registry.latest().clone(),
        warnings: input.warnings,
    })
}

/// Writes `rs` into `out_dir` through a staging directory, so the output
/// directory either receives every file or none of them.
pub fn write_staged(rs: &ResourceSet, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let staging = tempfile::Builder::new()
        .prefix(".migrata-staging")
        .tempdir_in(out_dir)
        .map_err(io(out_dir))?;
    let staged = write_resource_set(rs, staging.path())?;
    let mut moved: Vec<PathBuf> = Vec::with_capacity(staged.len());
    for file in staged {
        let dest = out_dir.join(file.file_name().expect("staged files have names"));
        if let Err(source) = fs::rename(&file, &dest) {
            for done in &moved {
                let _ = fs::remove_file(done);
            }
            return Err(PipelineError::Io { path: dest, source });
        }
        moved.push(dest);
    }
    Ok(moved)
}
