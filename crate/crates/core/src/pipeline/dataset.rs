use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::augment::{augment_awgn, center_beam_cut};
use super::balance::balance;
use super::severity::SeverityPartition;
use super::window::{slide_windows, DataPoint, Labeling, Task, WindowSpec};
use crate::channel::RawSequencePair;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, shuffle, substream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

/// Global scalar mean and standard deviation of the training entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> Standardization<T> {
    pub fn apply(&self, x: T) -> T {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, x: T) -> T {
        x * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentDataset<T> {
    pub task: Task,
    pub points: Vec<DataPoint<T>>,
    /// Label values of the classes, ascending; empty for regression.
    pub classes: Vec<i64>,
    pub standardization: Option<Standardization<T>>,
    pub splits: Option<Vec<Split>>,
}

impl<T: Scalar> DevelopmentDataset<T> {
    pub fn new(task: Task, points: Vec<DataPoint<T>>, classes: Vec<i64>) -> Result<Self> {
        let ds = Self { task, points, classes, standardization: None, splits: None };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.observation_shape();
        for p in &self.points {
            if p.label.task() != self.task {
                return Err(Error::InvalidInput(format!("{} label in a {} dataset", p.label.task(), self.task)));
            }
            if Some(p.observation.shape()) != shape {
                return Err(Error::Shape(format!(
                    "observation {:?} differs from {:?}",
                    p.observation.shape(),
                    shape.unwrap()
                )));
            }
            if self.task.is_classification() && !self.classes.contains(&p.label.value()) {
                return Err(Error::InvalidInput(format!("label {} is not a listed class", p.label.value())));
            }
        }
        if let Some(s) = &self.splits {
            if s.len() != self.points.len() {
                return Err(Error::Shape(format!("{} split tags for {} points", s.len(), self.points.len())));
            }
        }
        if let Some(st) = &self.standardization {
            if !(st.std > T::zero()) {
                return Err(Error::Degenerate("standard deviation must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn observation_shape(&self) -> Option<(usize, usize)> {
        self.points.first().map(|p| p.observation.shape())
    }

    pub fn label_counts(&self) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.points {
            *counts.entry(p.label.value()).or_insert(0) += 1;
        }
        counts
    }

    /// Indices of the points in `split`; every point when no split is assigned.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        match &self.splits {
            None => (0..self.len()).collect(),
            Some(s) => (0..self.len()).filter(|&i| s[i] == split).collect(),
        }
    }

    /// Position of a label value in `classes`.
    pub fn class_index(&self, label: i64) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }
}

/// Shared windowing settings of the dataset builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub window: WindowSpec,
    /// Central beams removed from 64-beam observations; 0 keeps all.
    pub center_cut: usize,
    pub snr_db: f64,
    /// Occurrence only: keep windows whose observed samples are all unblocked.
    pub clear_observation: bool,
}

impl BuildOptions {
    pub fn new(window: WindowSpec) -> Self {
        Self { window, center_cut: 0, snr_db: 10.0, clear_observation: true }
    }
}

fn windows<T: Scalar>(pairs: &[RawSequencePair<T>], opts: &BuildOptions, labeling: Labeling<'_>) -> Result<Vec<DataPoint<T>>> {
    let mut out = Vec::new();
    let t_ob = opts.window.t_ob;
    for pair in pairs {
        for mut p in slide_windows(pair, &opts.window, labeling)? {
            let observed = &pair.link_status[p.source.start..p.source.start + t_ob];
            if opts.clear_observation && matches!(labeling, Labeling::Occurrence) && observed.contains(&1) {
                continue;
            }
            if opts.center_cut > 0 {
                p.observation = center_beam_cut(&p.observation, opts.center_cut)?;
            }
            out.push(p);
        }
    }
    Ok(out)
}

fn distinct_labels<T>(points: &[DataPoint<T>]) -> Vec<i64> {
    let mut v: Vec<i64> = points.iter().map(|p| p.label.value()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Windows labeled by occurrence, then balanced by undersampling. With
/// `clear_observation` the positives are exactly the clear-to-blocked
/// transition windows.
pub fn build_occurrence_dataset<T: Scalar>(pairs: &[RawSequencePair<T>], opts: &BuildOptions, seed: u64) -> Result<DevelopmentDataset<T>> {
    let points = windows(pairs, opts, Labeling::Occurrence)?;
    let points = balance(points, 1, derive_seed(seed, "balance", opts.window.t_p as u64))?;
    DevelopmentDataset::new(Task::Occurrence, points, vec![0, 1])
}

/// Transition windows labeled with the first blocked future instance.
pub fn build_instance_dataset<T: Scalar>(pairs: &[RawSequencePair<T>], opts: &BuildOptions) -> Result<DevelopmentDataset<T>> {
    let points = windows(pairs, opts, Labeling::Instance)?;
    if points.is_empty() {
        return Err(Error::NoBlockage("no clear-to-blocked transition fits the window".into()));
    }
    DevelopmentDataset::new(Task::Instance, points, Vec::new())
}

/// Transition windows of severity 2 and above, with minority levels topped up
/// to the majority count by noisy copies (cycling through their points).
pub fn build_severity_dataset<T: Scalar>(
    pairs: &[RawSequencePair<T>],
    partition: &SeverityPartition,
    opts: &BuildOptions,
    seed: u64,
) -> Result<DevelopmentDataset<T>> {
    let points: Vec<_> = windows(pairs, opts, Labeling::Severity(partition))?
        .into_iter()
        .filter(|p| p.label.value() != 1)
        .collect();
    let classes = distinct_labels(&points);
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "severity needs at least two levels above 1, found {classes:?}"
        )));
    }
    let mut by_class: BTreeMap<i64, Vec<DataPoint<T>>> = BTreeMap::new();
    for p in points {
        by_class.entry(p.label.value()).or_default().push(p);
    }
    let majority = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut rng = substream(seed, "severity-awgn", opts.window.t_p as u64);
    let mut out = Vec::new();
    for group in by_class.values() {
        out.extend(group.iter().cloned());
        for i in 0..majority - group.len() {
            out.push(augment_awgn(&group[i % group.len()], opts.snr_db, &mut rng)?);
        }
    }
    DevelopmentDataset::new(Task::Severity, out, classes)
}

/// Transition windows labeled with the travel direction, each followed in
/// the output by one noisy copy (originals first, copies after).
pub fn build_direction_dataset<T: Scalar>(pairs: &[RawSequencePair<T>], opts: &BuildOptions, seed: u64) -> Result<DevelopmentDataset<T>> {
    if pairs.iter().any(|p| p.num_beams() < 2) {
        return Err(Error::NotApplicable("direction needs a multi-beam codebook".into()));
    }
    let mut points = windows(pairs, opts, Labeling::Direction)?;
    let classes = distinct_labels(&points);
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!("direction needs both directions, found {classes:?}")));
    }
    let mut rng = substream(seed, "direction-awgn", opts.window.t_p as u64);
    let copies = points
        .iter()
        .map(|p| augment_awgn(p, opts.snr_db, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    points.extend(copies);
    DevelopmentDataset::new(Task::Direction, points, classes)
}

/// Stratified split: per label value, `clamp(round(f·n), 1, n−1)` shuffled
/// points go to training.
pub fn split<T: Scalar>(mut dataset: DevelopmentDataset<T>, train_fraction: f64, seed: u64) -> Result<DevelopmentDataset<T>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} is outside (0, 1)")));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, p) in dataset.points.iter().enumerate() {
        groups.entry(p.label.value()).or_default().push(i);
    }
    let mut tags = vec![Split::Validation; dataset.len()];
    let mut rng = substream(seed, "split", 0);
    for (label, mut idx) in groups {
        if idx.len() < 2 {
            return Err(Error::InvalidInput(format!("label {label} has {} point(s); need 2 to split", idx.len())));
        }
        shuffle(&mut idx, &mut rng);
        let n = idx.len();
        let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        for &i in &idx[..n_train] {
            tags[i] = Split::Train;
        }
    }
    dataset.splits = Some(tags);
    Ok(dataset)
}

/// Replaces every entry by `(a − μ)/σ` with the population mean and standard
/// deviation of all training entries (all entries when no split is set).
pub fn standardize<T: Scalar>(mut dataset: DevelopmentDataset<T>) -> Result<DevelopmentDataset<T>> {
    if dataset.standardization.is_some() {
        return Err(Error::InvalidInput("dataset is already standardized".into()));
    }
    let train = dataset.indices(Split::Train);
    let entries = || {
        train
            .iter()
            .flat_map(|&i| dataset.points[i].observation.as_slice().iter().map(|x| x.to_f64_lossy()))
    };
    let count = entries().count();
    if count == 0 {
        return Err(Error::InvalidInput("no training entries to standardize with".into()));
    }
    let mean = entries().sum::<f64>() / count as f64;
    let std = (entries().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64).sqrt();
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::Degenerate(format!("training entries have standard deviation {std}")));
    }
    let st = Standardization { mean: T::of(mean), std: T::of(std) };
    for p in &mut dataset.points {
        for x in p.observation.as_mut_slice() {
            *x = st.apply(*x);
        }
    }
    dataset.standardization = Some(st);
    Ok(dataset)
}
