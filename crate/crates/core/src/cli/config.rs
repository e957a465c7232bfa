//! Run configuration read from TOML.
//!
//! The `[scenario]` table either names a built-in `preset` and overrides
//! some of its keys, or spells out a full scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};
use crate::neural::{Architecture, CnnConfig, GruConfig, Head, TrainConfig};
use crate::pipeline::{BuildOptions, DurationScale, Task, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub num_sequences: usize,
    pub config: ScenarioConfig<f64>,
}

fn one() -> usize {
    1
}
fn default_fraction() -> f64 {
    0.7
}
fn default_snr() -> f64 {
    10.0
}
fn default_n_class() -> usize {
    3
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub t_ob: usize,
    pub t_p: Vec<usize>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    /// Decimation factors for drop augmentation; empty disables it.
    #[serde(default)]
    pub drop_factors: Vec<usize>,
    #[serde(default)]
    pub center_cut: usize,
    /// SNR of the AWGN copies used by severity and direction.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    /// Severity levels before level 1 is excluded.
    #[serde(default = "default_n_class")]
    pub n_class: usize,
    #[serde(default)]
    pub severity_scale: DurationScale,
    #[serde(default = "yes")]
    pub clear_observation: bool,
}

impl PipelineSection {
    pub fn build_options(&self, t_p: usize) -> Result<BuildOptions> {
        let mut opts = BuildOptions::new(WindowSpec::new(self.t_ob, t_p, self.stride)?);
        opts.center_cut = self.center_cut;
        opts.snr_db = self.snr_db;
        opts.clear_observation = self.clear_observation;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gru,
    Cnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gru => "gru",
            ModelKind::Cnn => "cnn",
        }
    }
}

fn default_hidden() -> usize {
    20
}
fn default_dropout() -> f64 {
    0.2
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "one")]
    pub num_layers: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub max_train_points: Option<usize>,
    #[serde(default)]
    pub max_val_points: Option<usize>,
}

impl ModelSection {
    /// Architecture for observations of `shape` (`T_ob × M'`).
    pub fn architecture(&self, shape: (usize, usize), head: Head) -> Result<Architecture> {
        let arch = match self.kind {
            ModelKind::Gru => Architecture::Gru(GruConfig {
                input_dim: shape.1,
                hidden_dim: self.hidden_dim,
                num_layers: self.num_layers,
                seq_len: shape.0,
                head,
                dropout: self.dropout,
            }),
            ModelKind::Cnn => {
                let mut c = CnnConfig::outdoor(head);
                c.input_shape = shape;
                c.dropout = self.dropout;
                Architecture::Cnn(c)
            }
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn train_config(&self, seed: u64, init_seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::new(self.epochs, seed);
        cfg.learning_rate = self.learning_rate;
        cfg.batch_size = self.batch_size;
        cfg.init_seed = init_seed;
        cfg.max_train_points = self.max_train_points;
        cfg.max_val_points = self.max_val_points;
        cfg
    }
}

/// Every stage draws from its own seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub simulate: u64,
    pub pipeline: u64,
    pub init: u64,
    pub train: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub scenario: ScenarioSection,
    pub pipeline: PipelineSection,
    pub model: ModelSection,
    pub seeds: Seeds,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    output_dir: PathBuf,
    scenario: ScenarioSection,
    pipeline: PipelineSection,
    model: ModelSection,
    seeds: Seeds,
}

/// Recursively overlays `over` onto `base`; tables merge, anything else replaces.
fn overlay(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => overlay(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string().trim_end().to_string())
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn json_bytes<S: Serialize>(v: &S) -> Vec<u8> {
    serde_json::to_vec(v).expect("config sections serialize")
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut root: toml::Table = text.parse().map_err(config_err)?;
        let scenario = match root.remove("scenario") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(Error::Config("`scenario` must be a table".into())),
            None => return Err(Error::Config("missing [scenario] section".into())),
        };
        root.insert("scenario".into(), toml::Value::Table(resolve_scenario(scenario)?));
        let raw: RawRunConfig = toml::Value::Table(root).try_into().map_err(config_err)?;
        let cfg = RunConfig {
            output_dir: raw.output_dir,
            scenario: raw.scenario,
            pipeline: raw.pipeline,
            model: raw.model,
            seeds: raw.seeds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.config.validate()?;
        if self.scenario.num_sequences == 0 {
            return Err(Error::Config("scenario.num_sequences must be at least 1".into()));
        }
        let p = &self.pipeline;
        if p.t_p.is_empty() {
            return Err(Error::Config("pipeline.t_p must list at least one horizon".into()));
        }
        let mut sorted = p.t_p.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != p.t_p.len() {
            return Err(Error::Config("pipeline.t_p has repeated horizons".into()));
        }
        for &t_p in &p.t_p {
            WindowSpec::new(p.t_ob, t_p, p.stride)?;
        }
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return Err(Error::Config(format!("pipeline.train_fraction {} is outside (0, 1)", p.train_fraction)));
        }
        if let Some(&d) = p.drop_factors.iter().find(|&&d| d < 2) {
            return Err(Error::Config(format!("drop factor {d} must be at least 2")));
        }
        if p.n_class < 2 {
            return Err(Error::Config("pipeline.n_class must be at least 2".into()));
        }
        if p.snr_db.is_nan() {
            return Err(Error::Config("pipeline.snr_db is NaN".into()));
        }
        self.model.train_config(0, 0).validate()?;
        if !(0.0..1.0).contains(&self.model.dropout) {
            return Err(Error::Config(format!("model.dropout {} is outside [0, 1)", self.model.dropout)));
        }
        Ok(())
    }

    /// Identifies the simulated corpus: scenario and simulate seed.
    pub fn simulate_hash(&self) -> String {
        sha256_hex(&[b"simulate", &json_bytes(&self.scenario), &self.seeds.simulate.to_le_bytes()])
    }

    /// Identifies the datasets: the corpus, the pipeline and its seed.
    pub fn dataset_hash(&self) -> String {
        sha256_hex(&[
            b"dataset",
            self.simulate_hash().as_bytes(),
            &json_bytes(&self.pipeline),
            &self.seeds.pipeline.to_le_bytes(),
        ])
    }

    /// Identifies trained models: the datasets, the model and its seeds.
    pub fn model_hash(&self) -> String {
        sha256_hex(&[
            b"model",
            self.dataset_hash().as_bytes(),
            &json_bytes(&self.model),
            &self.seeds.init.to_le_bytes(),
            &self.seeds.train.to_le_bytes(),
        ])
    }

    /// Everything except the output directory.
    pub fn config_hash(&self) -> String {
        sha256_hex(&[b"config", self.model_hash().as_bytes()])
    }

    pub fn head_for(&self, task: Task, n_classes: usize) -> Head {
        if task.is_classification() {
            Head::Classifier { n_out: n_classes }
        } else {
            Head::Regressor
        }
    }
}

fn resolve_scenario(mut t: toml::Table) -> Result<toml::Table> {
    let num = t.remove("num_sequences").ok_or_else(|| Error::Config("scenario.num_sequences is required".into()))?;
    let config = match t.remove("preset") {
        Some(toml::Value::String(name)) => {
            let preset = ScenarioConfig::<f64>::preset(&name)?;
            let mut base = match toml::Value::try_from(&preset).map_err(config_err)? {
                toml::Value::Table(b) => b,
                _ => unreachable!("a scenario serializes to a table"),
            };
            overlay(&mut base, t);
            base
        }
        Some(_) => return Err(Error::Config("scenario.preset must be a string".into())),
        None => t,
    };
    let mut out = toml::Table::new();
    out.insert("num_sequences".into(), num);
    out.insert("config".into(), toml::Value::Table(config));
    Ok(out)
}
