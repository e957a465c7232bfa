use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scores::{confusion_matrix_over, instance_error_stats, top1_accuracy, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::pipeline::Task;

/// Scores of one prediction horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEntry {
    pub t_p: usize,
    pub count: usize,
    pub top1: Option<f64>,
    pub mae: Option<f64>,
    pub std: Option<f64>,
    /// MAE of always predicting `(T_P + 1)/2`, on the same points.
    pub baseline_mae: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
}

impl HorizonEntry {
    pub fn classification(t_p: usize, predictions: &[i64], labels: &[i64], classes: &[i64]) -> Result<Self> {
        Ok(Self {
            t_p,
            count: labels.len(),
            top1: Some(top1_accuracy(predictions, labels)?),
            mae: None,
            std: None,
            baseline_mae: None,
            confusion: Some(confusion_matrix_over(predictions, labels, classes)?),
        })
    }

    pub fn regression(t_p: usize, predictions: &[f64], labels: &[i64]) -> Result<Self> {
        let (mae, std) = instance_error_stats(predictions, labels)?;
        let mid = vec![(t_p as f64 + 1.0) / 2.0; labels.len()];
        Ok(Self {
            t_p,
            count: labels.len(),
            top1: None,
            mae: Some(mae),
            std: Some(std),
            baseline_mae: Some(instance_error_stats(&mid, labels)?.0),
            confusion: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: Task,
    pub model: String,
    pub entries: Vec<HorizonEntry>,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            let bad = e.top1.is_some_and(|a| !(0.0..=1.0).contains(&a))
                || e.mae.is_some_and(|m| !(m >= 0.0))
                || e.std.is_some_and(|s| !(s >= 0.0));
            if bad {
                return Err(Error::InvalidInput(format!("out-of-range score at T_P={}", e.t_p)));
            }
            if let Some(cm) = &e.confusion {
                if cm.total() as usize != e.count {
                    return Err(Error::InvalidInput(format!("confusion total differs from count at T_P={}", e.t_p)));
                }
            }
        }
        Ok(())
    }

    /// One row per horizon: `t_p,count,top1,mae,std,baseline_mae`, blank
    /// where a score does not apply.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_default();
        let mut s = String::from("t_p,count,top1,mae,std,baseline_mae\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.t_p,
                e.count,
                opt(e.top1),
                opt(e.mae),
                opt(e.std),
                opt(e.baseline_mae)
            );
        }
        s
    }
}

impl ConfusionMatrix {
    /// Header row of predicted classes, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label");
        for c in &self.classes {
            let _ = write!(s, ",pred_{c}");
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(s, "{c}");
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_entry_has_midpoint_baseline() {
        let e = HorizonEntry::regression(3, &[1.0, 3.0], &[1, 3]).unwrap();
        assert_eq!(e.mae, Some(0.0));
        assert_eq!(e.baseline_mae, Some(1.0));
    }

    #[test]
    fn csv_layout() {
        let e = HorizonEntry::classification(1, &[0, 1, 1], &[0, 1, 0], &[0, 1]).unwrap();
        let r = MetricsReport { task: Task::Occurrence, model: "cnn".into(), entries: vec![e.clone()] };
        r.validate().unwrap();
        assert_eq!(r.to_csv().lines().nth(1).unwrap(), "1,3,0.666666666667,,,");
        assert_eq!(e.confusion.unwrap().to_csv(), "label,pred_0,pred_1\n0,1,1\n1,0,1\n");
    }
}
