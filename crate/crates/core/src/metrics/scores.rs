use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{a} predictions for {b} labels")));
    }
    if a == 0 {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn top1_accuracy(predictions: &[i64], labels: &[i64]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean absolute error and the population standard deviation of the
/// absolute errors.
pub fn instance_error_stats(predictions: &[f64], labels: &[i64]) -> Result<(f64, f64)> {
    check_lengths(predictions.len(), labels.len())?;
    let errs: Vec<f64> = predictions.iter().zip(labels).map(|(&p, &l)| (l as f64 - p).abs()).collect();
    let n = errs.len() as f64;
    let mae = errs.iter().sum::<f64>() / n;
    let var = errs.iter().map(|e| (e - mae).powi(2)).sum::<f64>() / n;
    Ok((mae, var.sqrt()))
}

/// Counts indexed `[label][prediction]` over the listed class values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<i64>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Each row divided by its sum; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter().map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 }).collect()
            })
            .collect()
    }
}

/// Confusion matrix over arbitrary class values.
pub fn confusion_matrix_over(predictions: &[i64], labels: &[i64], classes: &[i64]) -> Result<ConfusionMatrix> {
    check_lengths(predictions.len(), labels.len())?;
    let pos = |v: i64| {
        classes
            .iter()
            .position(|&c| c == v)
            .ok_or_else(|| Error::InvalidInput(format!("class {v} is not one of {classes:?}")))
    };
    let mut counts = vec![vec![0; classes.len()]; classes.len()];
    for (&p, &l) in predictions.iter().zip(labels) {
        counts[pos(l)?][pos(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), counts })
}

/// Confusion matrix over classes `1..=n_class`.
pub fn confusion_matrix(predictions: &[i64], labels: &[i64], n_class: usize) -> Result<ConfusionMatrix> {
    let classes: Vec<i64> = (1..=n_class as i64).collect();
    confusion_matrix_over(predictions, labels, &classes)
}
