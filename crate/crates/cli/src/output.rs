//! CSV and JSON writers with an embedded run manifest.
//!
//! CSV files start with `#` comment lines carrying the manifest, then a
//! fixed header row. Numbers use Rust's shortest round-trip formatting, empty
//! cells stand for absent values and lines end in LF only.

use std::io::Write;
use std::path::{Path, PathBuf};

use gagt::experiments::TauAggregate;
use gagt::ga::GenerationStats;
use gagt::{GaConfig, KnapsackInstance, RunSummary};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::CliError;

/// A record type with a documented column order.
pub trait TableRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl TableRow for GenerationStats {
    const HEADER: &'static [&'static str] = &[
        "generation_index",
        "best_feasible_value",
        "feasible_count",
        "max_genetic_term",
        "cheater_fraction",
        "mean_combined_fitness",
    ];
}

impl TableRow for RunSummary {
    const HEADER: &'static [&'static str] = &[
        "label",
        "replica",
        "seed",
        "tau",
        "best_feasible_value",
        "feasible_count",
        "mean_feasible_fitness",
        "max_feasible_fitness",
        "final_cheater_fraction",
    ];
}

impl TableRow for TauAggregate {
    const HEADER: &'static [&'static str] = &[
        "tau",
        "replicas",
        "mean_feasible_count",
        "mean_feasible_fitness",
        "mean_max_feasible_fitness",
        "mean_best_feasible_value",
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceInfo {
    pub path: String,
    pub name: String,
    pub n_items: usize,
    pub n_sacks: usize,
    pub best_known: Option<f64>,
}

impl InstanceInfo {
    pub fn new(path: &Path, inst: &KnapsackInstance) -> Self {
        InstanceInfo {
            path: path.display().to_string(),
            name: inst.name.clone(),
            n_items: inst.n_items(),
            n_sacks: inst.n_sacks(),
            best_known: inst.best_known,
        }
    }
}

/// Everything needed to reproduce an output file. The worker count is left
/// out on purpose: it never changes results.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub instance: InstanceInfo,
    pub config: GaConfig,
    /// Command-specific settings such as replica counts or τ lists.
    pub settings: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str, config: &GaConfig, instance: InstanceInfo) -> Self {
        Manifest {
            tool: "gagt",
            version: gagt::VERSION,
            command,
            seed: config.seed,
            instance,
            config: config.clone(),
            settings: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.settings.insert(
            key.to_string(),
            serde_json::to_value(value).expect("settings serialize"),
        );
    }
}

/// Renders `records` with their manifest. `summary` holds run-level results
/// shown as extra comment lines in CSV and as a `summary` object in JSON.
pub fn render<R: TableRow>(
    manifest: &Manifest,
    summary: &Map<String, Value>,
    records: &[R],
    format: Format,
) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => render_csv(manifest, summary, records),
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("manifest".into(), to_value(manifest)?);
            if !summary.is_empty() {
                doc.insert("summary".into(), Value::Object(summary.clone()));
            }
            doc.insert("records".into(), to_value(records)?);
            let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc)).map_err(json_err)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

fn render_csv<R: TableRow>(
    manifest: &Manifest,
    summary: &Map<String, Value>,
    records: &[R],
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let manifest_json = serde_json::to_string(manifest).map_err(json_err)?;
    writeln!(buf, "# {} {}", manifest.tool, manifest.version).expect("in-memory write");
    writeln!(buf, "# command: {}", manifest.command).expect("in-memory write");
    writeln!(buf, "# seed: {}", manifest.seed).expect("in-memory write");
    writeln!(buf, "# manifest: {manifest_json}").expect("in-memory write");
    for (key, value) in summary {
        let shown = match value {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        writeln!(buf, "# {key}: {shown}").expect("in-memory write");
    }
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf);
    writer.write_record(R::HEADER).map_err(csv_err)?;
    for r in records {
        writer.serialize(r).map_err(csv_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Data(e.to_string()))
}

pub fn to_value(v: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(json_err)
}

pub fn json_bytes(v: impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(&v).map_err(json_err)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Data(format!("serializing output: {e}"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(format!("writing CSV: {e}"))
}

/// Writes to `--out` when given, else to standard output.
pub fn deliver(bytes: &[u8], out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Data(format!("--out {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Data(format!("standard output: {e}")))
        }
    }
}
