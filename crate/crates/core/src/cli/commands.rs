//! The five pipeline stages. Each reads the run config and the files of the
//! previous stage under the output directory:
//!
//! ```text
//! out/sequences.jsonl, sequences.manifest.json
//! out/<task>/tp<k>/dataset.jsonl, metadata.json
//! out/<task>/tp<k>/<model>/checkpoint.json, history.csv
//! out/<task>/<model>/metrics.csv, metrics.json, confusion_tp<k>.csv
//! out/analysis/...
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::formats::*;
use crate::channel::{make_fleet, RawSequencePair};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{
    power_histogram, pre_blockage_std_contrast, proximity_stats, Histogram, HorizonEntry, MetricsReport, PROXIMITY_WINDOW,
};
use crate::neural::{check_compatible, predict_indices, train, ModelParams, Predictions};
use crate::pipeline::{
    augment_drop_corpus, average_blocked_durations, build_direction_dataset, build_instance_dataset,
    build_occurrence_dataset, build_severity_dataset, severity_partition_on, split, standardize, DevelopmentDataset,
    SeverityPartition, Split, Task,
};
use crate::rng::derive_seed;

/// Samples nearest to and farthest from the blockage compared by the
/// signature analysis.
pub const CONTRAST_SAMPLES: usize = 5;
/// Bins of the observation-power histograms.
pub const HISTOGRAM_BINS: usize = 30;

/// File locations under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn sequences(&self) -> PathBuf {
        self.root.join("sequences.jsonl")
    }

    pub fn sequence_manifest(&self) -> PathBuf {
        self.root.join("sequences.manifest.json")
    }

    pub fn dataset_dir(&self, task: Task, t_p: usize) -> PathBuf {
        self.root.join(task.name()).join(format!("tp{t_p}"))
    }

    pub fn dataset(&self, task: Task, t_p: usize) -> PathBuf {
        self.dataset_dir(task, t_p).join("dataset.jsonl")
    }

    pub fn dataset_metadata(&self, task: Task, t_p: usize) -> PathBuf {
        self.dataset_dir(task, t_p).join("metadata.json")
    }

    pub fn checkpoint(&self, task: Task, t_p: usize, model: &str) -> PathBuf {
        self.dataset_dir(task, t_p).join(model).join("checkpoint.json")
    }

    pub fn history(&self, task: Task, t_p: usize, model: &str) -> PathBuf {
        self.dataset_dir(task, t_p).join(model).join("history.csv")
    }

    pub fn report_dir(&self, task: Task, model: &str) -> PathBuf {
        self.root.join(task.name()).join(model)
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.root.join("analysis")
    }
}

/// Simulates the fleet and writes it with its manifest.
pub fn cmd_simulate(cfg: &RunConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let sc = &cfg.scenario;
    let pairs = make_fleet(&sc.config, sc.num_sequences, cfg.seeds.simulate)?;
    let path = layout.sequences();
    write_jsonl(&path, &pairs)?;
    let mut counts_per_class = BTreeMap::new();
    let mut counts_per_direction = BTreeMap::new();
    for p in &pairs {
        *counts_per_class.entry(p.metadata.class.clone()).or_insert(0) += 1;
        let dir = p.metadata.direction.map_or_else(|| "none".to_string(), |d| d.to_string());
        *counts_per_direction.entry(dir).or_insert(0) += 1;
    }
    let manifest = SequenceManifest {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.simulate_hash(),
        scenario: sc.config.name.clone(),
        num_sequences: pairs.len(),
        seed: cfg.seeds.simulate,
        num_beams: sc.config.codebook.num_beams,
        sequences_sha256: file_sha256(&path)?,
        counts_per_class,
        counts_per_direction,
    };
    write_json(&layout.sequence_manifest(), &manifest)?;
    Ok(vec![path, layout.sequence_manifest()])
}

/// Sequences written by [`cmd_simulate`] under the same scenario and seed.
pub fn load_sequences(cfg: &RunConfig, layout: &Layout) -> Result<(Vec<RawSequencePair<f64>>, SequenceManifest)> {
    let mpath = layout.sequence_manifest();
    let manifest: SequenceManifest = read_json(&mpath)?;
    check_provenance(&mpath, manifest.schema_version, &manifest.config_hash, &cfg.simulate_hash())?;
    let path = layout.sequences();
    let sha = file_sha256(&path)?;
    if sha != manifest.sequences_sha256 {
        return Err(Error::InvalidInput(format!("{} does not match its manifest", path.display())));
    }
    let pairs: Vec<RawSequencePair<f64>> = read_jsonl(&path)?;
    for p in &pairs {
        p.validate()?;
    }
    Ok((pairs, manifest))
}

/// Severity levels from the corpus' per-class mean blocked durations.
pub fn corpus_partition(cfg: &RunConfig, pairs: &[RawSequencePair<f64>]) -> Result<SeverityPartition> {
    severity_partition_on(&average_blocked_durations(pairs), cfg.pipeline.n_class, cfg.pipeline.severity_scale)
}

/// The standardized, split dataset of one task and horizon, in memory.
pub fn build_dataset(
    cfg: &RunConfig,
    pairs: &[RawSequencePair<f64>],
    task: Task,
    t_p: usize,
) -> Result<(DevelopmentDataset<f64>, Option<SeverityPartition>, u64)> {
    let p = &cfg.pipeline;
    let opts = p.build_options(t_p)?;
    let seed = derive_seed(cfg.seeds.pipeline, task.name(), t_p as u64);
    // severity levels come from the undecimated corpus
    let partition = match task {
        Task::Severity => Some(corpus_partition(cfg, pairs)?),
        _ => None,
    };
    let augmented;
    let corpus = if p.drop_factors.is_empty() {
        pairs
    } else {
        augmented = augment_drop_corpus(pairs, &p.drop_factors)?;
        &augmented[..]
    };
    let ds = match task {
        Task::Occurrence => build_occurrence_dataset(corpus, &opts, seed)?,
        Task::Instance => build_instance_dataset(corpus, &opts)?,
        Task::Severity => build_severity_dataset(corpus, partition.as_ref().expect("set above"), &opts, seed)?,
        Task::Direction => build_direction_dataset(corpus, &opts, seed)?,
    };
    let ds = standardize(split(ds, p.train_fraction, seed)?)?;
    Ok((ds, partition, seed))
}

/// Builds and writes one dataset per configured horizon.
pub fn cmd_build_dataset(cfg: &RunConfig, layout: &Layout, task: Task) -> Result<Vec<PathBuf>> {
    let (pairs, manifest) = load_sequences(cfg, layout)?;
    let mut written = Vec::new();
    for &t_p in &cfg.pipeline.t_p {
        let (ds, partition, seed) = build_dataset(cfg, &pairs, task, t_p)?;
        let splits = ds.splits.clone().expect("split above");
        let records: Vec<DatasetRecord> = ds
            .points
            .iter()
            .zip(&splits)
            .map(|(p, &s)| DatasetRecord { split: s, point: p.clone() })
            .collect();
        let path = layout.dataset(task, t_p);
        write_jsonl(&path, &records)?;
        let mut counts: BTreeMap<i64, SplitCounts> = BTreeMap::new();
        for r in &records {
            let c = counts.entry(r.point.label.value()).or_default();
            match r.split {
                Split::Train => c.train += 1,
                Split::Validation => c.validation += 1,
            }
        }
        let meta = DatasetMetadata {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.dataset_hash(),
            sequences_sha256: manifest.sequences_sha256.clone(),
            dataset_sha256: file_sha256(&path)?,
            task,
            t_ob: cfg.pipeline.t_ob,
            t_p,
            stride: cfg.pipeline.stride,
            center_cut: cfg.pipeline.center_cut,
            observation_shape: ds.observation_shape().expect("datasets are non-empty"),
            classes: ds.classes.clone(),
            standardization: ds.standardization.expect("standardized above"),
            counts,
            severity_partition: partition,
            seed,
        };
        let mpath = layout.dataset_metadata(task, t_p);
        write_json(&mpath, &meta)?;
        written.push(path);
        written.push(mpath);
    }
    Ok(written)
}

/// A dataset written by [`cmd_build_dataset`] under the same configuration.
pub fn load_dataset(cfg: &RunConfig, layout: &Layout, task: Task, t_p: usize) -> Result<(DevelopmentDataset<f64>, DatasetMetadata)> {
    let mpath = layout.dataset_metadata(task, t_p);
    let meta: DatasetMetadata = read_json(&mpath)?;
    check_provenance(&mpath, meta.schema_version, &meta.config_hash, &cfg.dataset_hash())?;
    if meta.task != task || meta.t_p != t_p {
        return Err(Error::InvalidInput(format!("{} describes {} at T_P={}", mpath.display(), meta.task, meta.t_p)));
    }
    let path = layout.dataset(task, t_p);
    if file_sha256(&path)? != meta.dataset_sha256 {
        return Err(Error::InvalidInput(format!("{} does not match its metadata", path.display())));
    }
    let records: Vec<DatasetRecord> = read_jsonl(&path)?;
    let (splits, points) = records.into_iter().map(|r| (r.split, r.point)).unzip();
    let ds = DevelopmentDataset {
        task,
        points,
        classes: meta.classes.clone(),
        standardization: Some(meta.standardization),
        splits: Some(splits),
    };
    ds.validate()?;
    Ok((ds, meta))
}

/// Trains one model per horizon and writes its checkpoint and history.
pub fn cmd_train(cfg: &RunConfig, layout: &Layout, task: Task) -> Result<Vec<PathBuf>> {
    let model = cfg.model.kind.name();
    let mut written = Vec::new();
    for &t_p in &cfg.pipeline.t_p {
        let (ds, meta) = load_dataset(cfg, layout, task, t_p)?;
        let arch = cfg.model.architecture(meta.observation_shape, cfg.head_for(task, meta.classes.len()))?;
        let tc = cfg.model.train_config(
            derive_seed(cfg.seeds.train, task.name(), t_p as u64),
            derive_seed(cfg.seeds.init, task.name(), t_p as u64),
        );
        let outcome = train(&ds, &arch, &tc).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("{task} at T_P={t_p}: {m}")),
            other => other,
        })?;
        let best = outcome.history[outcome.best_epoch - 1].val_metric;
        let ckpt = Checkpoint {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.model_hash(),
            dataset_sha256: meta.dataset_sha256.clone(),
            task,
            t_p,
            arch,
            train: tc,
            best_epoch: outcome.best_epoch,
            best_val_metric: best,
            init_seed: outcome.params.init_seed(),
            values: outcome.params.values().to_vec(),
        };
        let cpath = layout.checkpoint(task, t_p, model);
        write_json(&cpath, &ckpt)?;
        let hpath = layout.history(task, t_p, model);
        write_file(&hpath, history_csv(&outcome.history))?;
        written.push(cpath);
        written.push(hpath);
    }
    Ok(written)
}

/// Parameters of a checkpoint, after checking that it was trained on `meta`'s dataset.
pub fn load_checkpoint(cfg: &RunConfig, path: &Path, meta: &DatasetMetadata) -> Result<ModelParams<f64>> {
    let ckpt: Checkpoint = read_json(path)?;
    check_provenance(path, ckpt.schema_version, &ckpt.config_hash, &cfg.model_hash())?;
    if ckpt.dataset_sha256 != meta.dataset_sha256 || ckpt.task != meta.task || ckpt.t_p != meta.t_p {
        return Err(Error::InvalidInput(format!("{} was trained on a different dataset", path.display())));
    }
    ModelParams::from_values(ckpt.arch, ckpt.values, ckpt.init_seed)
}

/// Scores every horizon's checkpoint on its validation split.
pub fn cmd_eval(cfg: &RunConfig, layout: &Layout, task: Task) -> Result<MetricsReport> {
    let model = cfg.model.kind.name();
    let dir = layout.report_dir(task, model);
    let mut entries = Vec::new();
    for &t_p in &cfg.pipeline.t_p {
        let (ds, meta) = load_dataset(cfg, layout, task, t_p)?;
        let params = load_checkpoint(cfg, &layout.checkpoint(task, t_p, model), &meta)?;
        check_compatible(params.arch(), &ds)?;
        let idx = ds.indices(Split::Validation);
        let labels: Vec<i64> = idx.iter().map(|&i| ds.points[i].label.value()).collect();
        let entry = match predict_indices(&params, &ds, &idx)? {
            Predictions::Labels(pred) => HorizonEntry::classification(t_p, &pred, &labels, &ds.classes)?,
            Predictions::Values(pred) => HorizonEntry::regression(t_p, &pred, &labels)?,
        };
        if let Some(cm) = &entry.confusion {
            write_file(&dir.join(format!("confusion_tp{t_p}.csv")), cm.to_csv())?;
        }
        entries.push(entry);
    }
    let report = MetricsReport { task, model: model.to_string(), entries };
    report.validate()?;
    write_file(&dir.join("metrics.csv"), report.to_csv())?;
    let file = MetricsFile { schema_version: SCHEMA_VERSION, config_hash: cfg.model_hash(), report };
    write_json(&dir.join("metrics.json"), &file)?;
    Ok(file.report)
}

fn stack_rows(blocks: &[Matrix<f64>]) -> Result<Matrix<f64>> {
    let cols = blocks[0].cols();
    let data: Vec<f64> = blocks.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    Matrix::new(data.len() / cols, cols, data)
}

/// Histogram of the stacked `t_ob` samples preceding each blockage, or
/// `None` when the group has no such window or only a single power value.
fn group_histogram(pairs: &[&RawSequencePair<f64>], t_ob: usize) -> Result<Option<Histogram>> {
    let blocks: Vec<Matrix<f64>> = pairs
        .iter()
        .filter_map(|p| p.first_blocked().filter(|&f| f >= t_ob).map(|f| p.powers.row_range(f - t_ob, f)))
        .collect();
    if blocks.is_empty() {
        return Ok(None);
    }
    match power_histogram(&stack_rows(&blocks)?, HISTOGRAM_BINS) {
        Ok(h) => Ok(Some(h)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Pre-blockage statistics of the corpus: per-offset mean and std, the
/// near/far fluctuation contrast of each sequence and observation-power
/// histograms per object class and severity level.
pub fn cmd_analyze(cfg: &RunConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let (pairs, _) = load_sequences(cfg, layout)?;
    let dir = layout.analysis_dir();
    let stats = proximity_stats(&pairs, PROXIMITY_WINDOW)?;
    let offsets: Vec<String> = (1..=stats.window).map(|o| o.to_string()).collect();
    let mut written = vec![dir.join("proximity_mean.csv"), dir.join("proximity_std.csv")];
    write_file(&written[0], matrix_csv("offset", &offsets, &stats.mean))?;
    write_file(&written[1], matrix_csv("offset", &offsets, &stats.std))?;

    let mut sig = String::from("sequence,class,near_std,far_std\n");
    let (mut n, mut up) = (0usize, 0usize);
    for p in &pairs {
        let Ok((near, far)) = pre_blockage_std_contrast(p, PROXIMITY_WINDOW, CONTRAST_SAMPLES) else {
            continue;
        };
        sig.push_str(&format!("{},{},{near},{far}\n", p.metadata.id, p.metadata.class));
        n += 1;
        up += usize::from(near > far);
    }
    written.push(dir.join("signature.csv"));
    write_file(written.last().expect("pushed"), sig)?;

    let t_ob = cfg.pipeline.t_ob;
    let mut groups: Vec<(String, Histogram)> = Vec::new();
    let mut by_class: BTreeMap<&str, Vec<&RawSequencePair<f64>>> = BTreeMap::new();
    for p in &pairs {
        by_class.entry(&p.metadata.class).or_default().push(p);
    }
    for (class, members) in &by_class {
        if let Some(h) = group_histogram(members, t_ob)? {
            groups.push((format!("class:{class}"), h));
        }
    }
    let partition = corpus_partition(cfg, &pairs).ok();
    if let Some(part) = &partition {
        for (i, names) in part.groups().iter().enumerate() {
            let members: Vec<_> = names.iter().flat_map(|c| by_class.get(c.as_str()).into_iter().flatten().copied()).collect();
            if let Some(h) = group_histogram(&members, t_ob)? {
                groups.push((format!("level:{}", i + 1), h));
            }
        }
    }
    written.push(dir.join("power_histograms.csv"));
    write_file(written.last().expect("pushed"), histograms_csv(&groups))?;

    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.dataset_hash(),
        "window": stats.window,
        "sequences_used": stats.used,
        "sequences_skipped": stats.skipped,
        "contrast_samples": CONTRAST_SAMPLES,
        "contrast_sequences": n,
        "near_exceeds_far_fraction": if n > 0 { up as f64 / n as f64 } else { 0.0 },
        "severity_partition": partition,
    });
    written.push(dir.join("summary.json"));
    write_json(written.last().expect("pushed"), &summary)?;
    Ok(written)
}
