//! Result envelopes and their on-disk form.
//!
//! An output directory holds `spec.toml` (the resolved spec), one CSV per
//! table, any attachments (such as `trajectory.jsonl`) and `summary.json`.
//! Every file is written to a temporary file in the same directory and
//! renamed into place. Nothing that varies between identical runs is
//! written, so replays are byte-identical; the wall-clock time is kept in
//! memory and reported on stderr.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use critfrog_core::StreamTag;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};
use crate::ops::{lookup, Attachment, ReplicaFailure};
use crate::spec::ExperimentSpec;
use crate::table::Table;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SUMMARY_FILE: &str = "summary.json";
pub const SPEC_FILE: &str = "spec.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Recomputable from the primary tables; checked on load.
    pub derived: Value,
    /// Diagnostics reported as computed.
    pub info: Value,
}

#[derive(Debug, Clone)]
pub struct ResultEnvelope {
    /// The resolved spec, as echoed.
    pub spec: ExperimentSpec,
    /// Primary tables first, then derived ones.
    pub tables: Vec<Table>,
    pub primary: usize,
    pub aggregates: Aggregates,
    pub failures: Vec<ReplicaFailure>,
    pub attachments: Vec<Attachment>,
    pub wall_clock: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableEntry {
    name: String,
    file: String,
    role: String,
    rows: usize,
    columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Summary {
    tool: String,
    version: String,
    name: String,
    operation: String,
    seed: u64,
    replicas: Option<u64>,
    streams: Value,
    params: Value,
    tables: Vec<TableEntry>,
    attachments: Vec<String>,
    aggregates: Aggregates,
    status: String,
    failures: Vec<ReplicaFailure>,
}

pub fn streams_json() -> Value {
    serde_json::json!({
        "percolation": StreamTag::PERCOLATION.0,
        "frog-clock": StreamTag::FROG_CLOCK.0,
        "frog-direction": StreamTag::FROG_DIRECTION.0,
        "auxiliary": StreamTag::AUXILIARY.0,
    })
}

impl ResultEnvelope {
    pub fn status(&self) -> &'static str {
        if self.failures.is_empty() {
            "ok"
        } else {
            "partial"
        }
    }

    /// The error to exit with, if any replica failed.
    pub fn failure(&self) -> Option<HarnessError> {
        (!self.failures.is_empty()).then(|| HarnessError::PartialFailure {
            failed: self.failures.len(),
            total: self.spec.replicas.unwrap_or(1),
        })
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn derived(&self, key: &str) -> Option<&Value> {
        self.aggregates.derived.get(key)
    }

    /// The metadata line heading every CSV file.
    pub fn metadata_line(&self) -> String {
        let s = &self.spec;
        format!(
            "critfrog {VERSION} operation={} seed={} replicas={} streams=percolation:{},frog-clock:{},frog-direction:{},auxiliary:{}",
            s.operation,
            s.seed,
            s.replicas.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            StreamTag::PERCOLATION,
            StreamTag::FROG_CLOCK,
            StreamTag::FROG_DIRECTION,
            StreamTag::AUXILIARY,
        )
    }

    fn summary(&self) -> Summary {
        let s = &self.spec;
        Summary {
            tool: "critfrog".into(),
            version: VERSION.into(),
            name: s.display_name().into(),
            operation: s.operation.clone(),
            seed: s.seed,
            replicas: s.replicas,
            streams: streams_json(),
            params: serde_json::to_value(&s.params).expect("TOML values are JSON values"),
            tables: self
                .tables
                .iter()
                .enumerate()
                .map(|(i, t)| TableEntry {
                    name: t.name.clone(),
                    file: t.file_name(),
                    role: if i < self.primary { "primary" } else { "derived" }.into(),
                    rows: t.len(),
                    columns: t.columns.clone(),
                })
                .collect(),
            attachments: self.attachments.iter().map(|a| a.file.clone()).collect(),
            aggregates: self.aggregates.clone(),
            status: self.status().into(),
            failures: self.failures.clone(),
        }
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary()).expect("summaries serialize");
        s.push('\n');
        s
    }

    /// Writes every file of the envelope into `dir`, each atomically.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let meta = self.metadata_line();
        for t in &self.tables {
            write_atomic(dir, &t.file_name(), t.to_csv(&meta).as_bytes())?;
        }
        for a in &self.attachments {
            write_atomic(dir, &a.file, a.contents.as_bytes())?;
        }
        write_atomic(dir, SPEC_FILE, self.spec.to_toml().as_bytes())?;
        write_atomic(dir, SUMMARY_FILE, self.summary_json().as_bytes())
    }
}

/// Writes `bytes` to `dir/file` through a temporary file and a rename, so
/// the target is either absent, the old file, or the complete new one.
pub fn write_atomic(dir: &Path, file: &str, bytes: &[u8]) -> Result<()> {
    let target = dir.join(file);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(tmp.path(), e))?;
    tmp.persist(&target).map_err(|e| HarnessError::io(&target, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Loads a stored run, re-derives its aggregates and derived tables from
/// the primary rows and fails if any of them differ from what was stored.
pub fn load_envelope(dir: &Path) -> Result<ResultEnvelope> {
    let spec = ExperimentSpec::load(&dir.join(SPEC_FILE))?;
    let summary_path = dir.join(SUMMARY_FILE);
    let summary: Summary = serde_json::from_str(&read(&summary_path)?)
        .map_err(|e| HarnessError::Mismatch { path: summary_path.clone(), detail: e.to_string() })?;
    let mismatch = |detail: String| HarnessError::Mismatch { path: dir.to_path_buf(), detail };
    if summary.operation != spec.operation || summary.seed != spec.seed || summary.replicas != spec.replicas {
        return Err(mismatch("summary.json and spec.toml describe different runs".into()));
    }
    let mut primary = Vec::new();
    let mut stored_derived = Vec::new();
    for entry in &summary.tables {
        let text = read(&dir.join(&entry.file))?;
        let table = Table::from_csv(&entry.name, &text)?;
        if entry.role == "primary" {
            primary.push(table);
        } else {
            stored_derived.push((table, text));
        }
    }
    let derived = (lookup(&spec.operation)?.rederive)(&spec, &primary)?;
    if derived.aggregates != summary.aggregates.derived {
        return Err(mismatch(format!(
            "stored aggregates {} differ from the ones recomputed from the rows {}",
            summary.aggregates.derived, derived.aggregates
        )));
    }
    let mut env = ResultEnvelope {
        spec,
        primary: primary.len(),
        tables: primary,
        aggregates: summary.aggregates,
        failures: summary.failures,
        attachments: Vec::new(),
        wall_clock: Duration::ZERO,
    };
    let meta = env.metadata_line();
    if derived.tables.len() != stored_derived.len() {
        return Err(mismatch("derived table count differs".into()));
    }
    for (fresh, (_, text)) in derived.tables.iter().zip(&stored_derived) {
        if fresh.to_csv(&meta) != *text {
            return Err(mismatch(format!("table {} differs from its recomputation", fresh.name)));
        }
    }
    env.tables.extend(derived.tables);
    for file in &summary.attachments {
        env.attachments.push(Attachment { file: file.clone(), contents: read(&dir.join(file))? });
    }
    Ok(env)
}
