//! The `migrata` command.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use migrata_core::{check_conformance, diff, DiffOptions, Metamodel};

use crate::config::load_registry;
use crate::ecore::load_metamodel;
use crate::pipeline::{chain_migrate, migrate_files, write_staged};
use crate::plans::build_plan;
use crate::xmi::{detect_version, read_resource_set_with, ReadOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

pub const LENIENT_ENV: &str = "MIGRATA_LENIENT";

#[derive(Debug, Parser)]
#[command(
    name = "migrata",
    version,
    about = "Migrate, compare and validate XMI models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Migrate models with one plan.
    Migrate {
        #[arg(long)]
        plan: String,
        #[arg(long)]
        source_mm: PathBuf,
        #[arg(long)]
        target_mm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop unknown document features with a warning.
        #[arg(long)]
        lenient: bool,
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
    /// Detect the models' version and migrate them to the latest one.
    Chain {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lenient: bool,
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
    /// Print the version label of a model.
    Detect {
        #[arg(long)]
        registry: PathBuf,
        model: PathBuf,
    },
    /// Check models against a metamodel.
    Validate {
        #[arg(long)]
        mm: PathBuf,
        #[arg(long)]
        lenient: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
    /// Compare two models or two directories of models.
    Diff {
        /// Treat xmi:id values as insignificant.
        #[arg(long)]
        ignore_ids: bool,
        /// Metamodel for reading the models (repeatable).
        #[arg(long = "mm")]
        mm: Vec<PathBuf>,
        /// Registry whose metamodels are used for reading.
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Feature compared as a multiset (repeatable).
        #[arg(long)]
        unordered: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        lenient: bool,
        expected: PathBuf,
        actual: PathBuf,
    },
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Processing(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

enum Failure {
    Usage(String),
    Processing(String),
}

fn fail(e: impl std::error::Error) -> Failure {
    let mut msg = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
        source = s.source();
    }
    Failure::Processing(msg)
}

fn lenient(flag: bool) -> ReadOptions {
    let env = std::env::var(LENIENT_ENV).is_ok_and(|v| v == "1");
    ReadOptions {
        lenient: flag || env,
    }
}

fn metamodel(path: &Path) -> Result<Arc<Metamodel>, Failure> {
    load_metamodel(path).map(Arc::new).map_err(fail)
}

fn warn_all(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn list_paths(out: &mut dyn Write, paths: &[PathBuf]) {
    for p in paths {
        let _ = writeln!(out, "{}", p.display());
    }
}

/// Model files named by `path`: the file itself, or the visible regular
/// files of a directory sorted by name.
fn model_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path)
        .map_err(|e| Failure::Processing(format!("{}: {e}", path.display())))?
    {
        let entry = entry.map_err(|e| Failure::Processing(format!("{}: {e}", path.display())))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && entry.path().is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

fn json_line(out: &mut dyn Write, value: &serde_json::Value) {
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    );
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Migrate {
            plan,
            source_mm,
            target_mm,
            out: out_dir,
            lenient: flag,
            models,
        } => {
            let src = metamodel(&source_mm)?;
            let tgt = metamodel(&target_mm)?;
            let plan = build_plan(&plan, &src, &tgt).map_err(|e| Failure::Usage(e.to_string()))?;
            let migrated = migrate_files(&models, src, tgt, &plan, &lenient(flag)).map_err(fail)?;
            warn_all(err, &migrated.warnings);
            let written = write_staged(&migrated.set, &out_dir).map_err(fail)?;
            list_paths(out, &written);
            Ok(EXIT_OK)
        }
        Command::Chain {
            registry,
            out: out_dir,
            lenient: flag,
            models,
        } => {
            let registry = load_registry(&registry).map_err(fail)?;
            let chained = chain_migrate(&models, &registry, &lenient(flag)).map_err(fail)?;
            warn_all(err, &chained.warnings);
            let written = write_staged(&chained.set, &out_dir).map_err(fail)?;
            let _ = writeln!(err, "migrated {} -> {}", chained.from, chained.to);
            list_paths(out, &written);
            Ok(EXIT_OK)
        }
        Command::Detect { registry, model } => {
            let registry = load_registry(&registry).map_err(fail)?;
            let version = detect_version(&model, &registry).map_err(fail)?;
            let _ = writeln!(out, "{version}");
            Ok(EXIT_OK)
        }
        Command::Validate {
            mm,
            lenient: flag,
            format,
            models,
        } => {
            let mm = metamodel(&mm)?;
            let input = read_resource_set_with(&models, &mm, &lenient(flag)).map_err(fail)?;
            warn_all(err, &input.warnings);
            let violations = check_conformance(&input.set, &mm);
            match format {
                Format::Text => {
                    for v in &violations {
                        let _ = writeln!(out, "{v}");
                    }
                }
                Format::Json => {
                    let items: Vec<_> = violations
                        .iter()
                        .map(|v| {
                            serde_json::json!({
                                "location": v.location,
                                "kind": format!("{:?}", v.kind),
                                "message": v.message,
                            })
                        })
                        .collect();
                    json_line(
                        out,
                        &serde_json::json!({ "conforms": violations.is_empty(), "violations": items }),
                    );
                }
            }
            let _ = writeln!(
                err,
                "{} violation(s) in {} file(s)",
                violations.len(),
                models.len()
            );
            Ok(if violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_FINDINGS
            })
        }
        Command::Diff {
            ignore_ids,
            mm,
            registry,
            unordered,
            format,
            lenient: flag,
            expected,
            actual,
        } => {
            let mut metamodels = Vec::new();
            for p in &mm {
                metamodels.push(metamodel(p)?);
            }
            if let Some(r) = registry {
                let registry = load_registry(&r).map_err(fail)?;
                metamodels.extend(
                    registry
                        .versions()
                        .filter_map(|v| registry.metamodel(&v.ns_uri).cloned()),
                );
            }
            if metamodels.is_empty() {
                return Err(Failure::Usage(
                    "diff needs --mm <file> or --registry <config>".into(),
                ));
            }
            let opts = lenient(flag);
            let a = read_resource_set_with(&model_files(&expected)?, &metamodels, &opts)
                .map_err(fail)?;
            let b =
                read_resource_set_with(&model_files(&actual)?, &metamodels, &opts).map_err(fail)?;
            warn_all(err, &a.warnings);
            warn_all(err, &b.warnings);
            let options = DiffOptions {
                ignore_xmi_ids: ignore_ids,
                unordered_features: unordered.into_iter().collect(),
            };
            let report = diff(&a.set, &b.set, &options);
            match format {
                Format::Text => {
                    let _ = write!(out, "{}", report.to_text());
                }
                Format::Json => {
                    let entries: Vec<_> = report
                        .entries
                        .iter()
                        .map(|e| serde_json::json!({ "kind": e.kind.as_str(), "path": e.path, "detail": e.detail }))
                        .collect();
                    json_line(
                        out,
                        &serde_json::json!({ "equivalent": report.is_empty(), "entries": entries }),
                    );
                }
            }
            Ok(if report.is_empty() {
                EXIT_OK
            } else {
                EXIT_FINDINGS
            })
        }
    }
}
