use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Architecture, Head};
use super::loss::{argmax, cross_entropy, cross_entropy_logit_grad, mse, mse_grad};
use super::model::{backward, forward, Mode};
use super::optim::{Adam, AdamConfig};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::pipeline::{DataPoint, DevelopmentDataset, Split};
use crate::rng::{shuffle, substream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Seeds batch order and dropout masks.
    pub seed: u64,
    pub init_seed: u64,
    /// Stratified cap on the training points used, for bounded run time.
    #[serde(default)]
    pub max_train_points: Option<usize>,
    /// Stratified cap on the validation points scored after every epoch.
    #[serde(default)]
    pub max_val_points: Option<usize>,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            learning_rate: 1e-3,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed,
            init_seed: seed,
            max_train_points: None,
            max_val_points: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.max_train_points == Some(0) || self.max_val_points == Some(0) {
            return Err(Error::Config("point caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Accuracy for classifiers, mean absolute error for the regressor.
    pub val_metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the best validation metric.
    pub params: ModelParams<T>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Predictions<T> {
    /// Predicted label values.
    Labels(Vec<i64>),
    Values(Vec<T>),
}

/// Checks that the head fits the dataset's task and classes.
pub fn check_compatible<T: Scalar>(arch: &Architecture, dataset: &DevelopmentDataset<T>) -> Result<()> {
    match (arch.head(), dataset.task.is_classification()) {
        (Head::Classifier { n_out }, true) if n_out == dataset.classes.len() => {}
        (Head::Regressor, false) => {}
        (head, _) => {
            return Err(Error::Config(format!(
                "{head:?} head does not fit the {} task with classes {:?}",
                dataset.task, dataset.classes
            )))
        }
    }
    if let Some(shape) = dataset.observation_shape() {
        if shape != arch.input_shape() {
            return Err(Error::Shape(format!("observations are {shape:?}, network expects {:?}", arch.input_shape())));
        }
    }
    Ok(())
}

fn target<T: Scalar>(dataset: &DevelopmentDataset<T>, p: &DataPoint<T>) -> Result<Target<T>> {
    let v = p.label.value();
    if dataset.task.is_classification() {
        dataset
            .class_index(v)
            .map(Target::Class)
            .ok_or_else(|| Error::InvalidInput(format!("label {v} is not a dataset class")))
    } else {
        Ok(Target::Value(T::of(v as f64)))
    }
}

enum Target<T> {
    Class(usize),
    Value(T),
}

/// Loss and logit gradient of one head output.
fn loss_and_grad<T: Scalar>(output: &[T], target: &Target<T>) -> (T, Vec<T>) {
    match *target {
        Target::Class(c) => (cross_entropy(output, c).0, cross_entropy_logit_grad(output, c)),
        Target::Value(v) => (mse(output[0], v), vec![mse_grad(output[0], v)]),
    }
}

/// Deterministic stratified subsample: each label keeps its share of `cap`,
/// drawn after a seeded shuffle, in original index order.
fn stratified_cap<T>(dataset: &DevelopmentDataset<T>, indices: Vec<usize>, cap: usize, seed: u64, stream: &str) -> Vec<usize> {
    if indices.len() <= cap {
        return indices;
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &i in &indices {
        groups.entry(dataset.points[i].label.value()).or_default().push(i);
    }
    let total = indices.len() as f64;
    let mut rng = substream(seed, stream, 0);
    let mut out = Vec::with_capacity(cap);
    for mut g in groups.into_values() {
        let keep = ((g.len() as f64 * cap as f64 / total).round() as usize).clamp(1, g.len());
        shuffle(&mut g, &mut rng);
        out.extend_from_slice(&g[..keep]);
    }
    out.sort_unstable();
    out
}

/// Mean loss and metric over `indices` in evaluation mode.
pub fn evaluate<T: Scalar>(params: &ModelParams<T>, dataset: &DevelopmentDataset<T>, indices: &[usize]) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    let mut loss = 0.0;
    let mut metric = 0.0;
    for &i in indices {
        let p = &dataset.points[i];
        let t = target(dataset, p)?;
        let (out, _) = forward(params, &p.observation, Mode::Eval)?;
        loss += loss_and_grad(&out, &t).0.to_f64_lossy();
        metric += match t {
            Target::Class(c) => f64::from(u8::from(argmax(&out) == c)),
            Target::Value(v) => (out[0] - v).abs().to_f64_lossy(),
        };
    }
    let n = indices.len() as f64;
    Ok((loss / n, metric / n))
}

/// Seeded mini-batch Adam training. Returns the parameters of the epoch with
/// the best validation metric (earliest on ties). Without a split assignment
/// every point serves for both training and validation.
pub fn train<T: Scalar>(dataset: &DevelopmentDataset<T>, arch: &Architecture, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    arch.validate()?;
    check_compatible(arch, dataset)?;
    if dataset.standardization.is_none() {
        return Err(Error::InvalidInput("training expects a standardized dataset".into()));
    }
    let mut train_idx = dataset.indices(Split::Train);
    if let Some(cap) = cfg.max_train_points {
        train_idx = stratified_cap(dataset, train_idx, cap, cfg.seed, "train-cap");
    }
    let mut val_idx = dataset.indices(Split::Validation);
    if let Some(cap) = cfg.max_val_points {
        val_idx = stratified_cap(dataset, val_idx, cap, cfg.seed, "val-cap");
    }
    if train_idx.is_empty() {
        return Err(Error::InvalidInput("no training points".into()));
    }
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }
    let targets = train_idx
        .iter()
        .map(|&i| target(dataset, &dataset.points[i]))
        .collect::<Result<Vec<_>>>()?;

    let classify = dataset.task.is_classification();
    let better = |a: f64, b: f64| if classify { a > b } else { a < b };
    let mut params = ModelParams::init(arch.clone(), cfg.init_seed)?;
    let mut opt = Adam::new(cfg.adam, params.len());
    let mut best: Option<(f64, usize, ModelParams<T>)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    for epoch in 1..=cfg.epochs {
        shuffle(&mut order, &mut substream(cfg.seed, "order", epoch as u64));
        let mut dropout_rng = substream(cfg.seed, "dropout", epoch as u64);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grad = vec![T::zero(); params.len()];
            let mut batch_loss = T::zero();
            for &k in batch {
                let p = &dataset.points[train_idx[k]];
                let (out, cache) = forward(&params, &p.observation, Mode::Train(&mut dropout_rng))?;
                let (l, dlogits) = loss_and_grad(&out, &targets[k]);
                batch_loss += l;
                for (g, d) in grad.iter_mut().zip(backward(&params, &cache, &dlogits)?) {
                    *g += d;
                }
            }
            let scale = T::one() / T::from_usize_lossy(batch.len());
            if !(batch_loss.is_finite() && grad.iter().all(|g| g.is_finite())) {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient (lr {}, epoch {epoch}, batch {b})",
                    cfg.learning_rate
                )));
            }
            grad.iter_mut().for_each(|g| *g *= scale);
            epoch_loss += batch_loss.to_f64_lossy();
            params.update(|v| opt.step(v, &grad, cfg.learning_rate));
        }
        let (val_loss, val_metric) = evaluate(&params, dataset, &val_idx)?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite validation loss (lr {}, epoch {epoch})",
                cfg.learning_rate
            )));
        }
        history.push(EpochRecord { epoch, train_loss: epoch_loss / train_idx.len() as f64, val_loss, val_metric });
        if best.as_ref().is_none_or(|(m, _, _)| better(val_metric, *m)) {
            best = Some((val_metric, epoch, params.clone()));
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome { params, history, best_epoch })
}

/// Predictions for the given points: label values (argmax, ties to the lower
/// class) or raw regression outputs.
pub fn predict_indices<T: Scalar>(params: &ModelParams<T>, dataset: &DevelopmentDataset<T>, indices: &[usize]) -> Result<Predictions<T>> {
    check_compatible(params.arch(), dataset)?;
    if dataset.task.is_classification() {
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let (out, _) = forward(params, &dataset.points[i].observation, Mode::Eval)?;
            labels.push(dataset.classes[argmax(&out)]);
        }
        Ok(Predictions::Labels(labels))
    } else {
        let mut values = Vec::with_capacity(indices.len());
        for &i in indices {
            values.push(forward(params, &dataset.points[i].observation, Mode::Eval)?.0[0]);
        }
        Ok(Predictions::Values(values))
    }
}

pub fn predict<T: Scalar>(params: &ModelParams<T>, dataset: &DevelopmentDataset<T>) -> Result<Predictions<T>> {
    predict_indices(params, dataset, &(0..dataset.len()).collect::<Vec<_>>())
}
