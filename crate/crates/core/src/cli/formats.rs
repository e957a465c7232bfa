//! On-disk formats: JSONL bodies with JSON sidecars, plus CSV tables.
//!
//! Every sidecar carries `schema_version` and the `config_hash` of the
//! config sections that determined it, so that a later stage can refuse
//! inputs produced under a different configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{Histogram, MetricsReport};
use crate::neural::{Architecture, EpochRecord, TrainConfig};
use crate::pipeline::{DataPoint, SeverityPartition, Split, Standardization, Task};

pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_err(path, e))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(read_file(path)?)))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s)
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_jsonl<S: Serialize>(path: &Path, items: &[S]) -> Result<()> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it)?);
        s.push('\n');
    }
    write_file(path, s)
}

pub fn read_jsonl<D: DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// Rejects an input whose recorded hash differs from the current config's.
pub fn check_provenance(what: &Path, schema_version: u32, recorded: &str, expected: &str) -> Result<()> {
    if schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "{}: schema version {schema_version}, expected {SCHEMA_VERSION}",
            what.display()
        )));
    }
    if recorded != expected {
        return Err(Error::InvalidInput(format!(
            "{} was produced under a different configuration (hash {recorded}, current {expected}); rerun the earlier stage",
            what.display()
        )));
    }
    Ok(())
}

/// Sidecar of `sequences.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub scenario: String,
    pub num_sequences: usize,
    pub seed: u64,
    pub num_beams: usize,
    pub sequences_sha256: String,
    pub counts_per_class: BTreeMap<String, usize>,
    /// Keyed by direction tag; `none` for untagged sequences.
    pub counts_per_direction: BTreeMap<String, usize>,
}

/// One line of `dataset.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub split: Split,
    #[serde(flatten)]
    pub point: DataPoint<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
}

/// Sidecar of `dataset.jsonl`. Observations are stored standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub config_hash: String,
    pub sequences_sha256: String,
    pub dataset_sha256: String,
    pub task: Task,
    pub t_ob: usize,
    pub t_p: usize,
    pub stride: usize,
    pub center_cut: usize,
    pub observation_shape: (usize, usize),
    pub classes: Vec<i64>,
    pub standardization: Standardization<f64>,
    /// Per label value.
    pub counts: BTreeMap<i64, SplitCounts>,
    pub severity_partition: Option<SeverityPartition>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config_hash: String,
    pub dataset_sha256: String,
    pub task: Task,
    pub t_p: usize,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub init_seed: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub config_hash: String,
    pub report: MetricsReport,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_metric\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.val_metric);
    }
    s
}

/// `first_col` names the row key; one `beam_<j>` column per matrix column.
pub fn matrix_csv(first_col: &str, keys: &[String], m: &crate::Matrix<f64>) -> String {
    let mut s = String::from(first_col);
    for j in 0..m.cols() {
        let _ = write!(s, ",beam_{j}");
    }
    s.push('\n');
    for (r, key) in keys.iter().enumerate() {
        s.push_str(key);
        for v in m.row(r) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn histograms_csv(groups: &[(String, Histogram)]) -> String {
    let mut s = String::from("group,bin,lower,upper,count\n");
    for (g, h) in groups {
        for (i, c) in h.counts.iter().enumerate() {
            let _ = writeln!(s, "{g},{i},{},{},{c}", h.edges[i], h.edges[i + 1]);
        }
    }
    s
}
