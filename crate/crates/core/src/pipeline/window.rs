use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::labels::{label_instance, label_occurrence};
use super::severity::{label_severity, SeverityPartition};
use crate::channel::RawSequencePair;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Occurrence,
    Instance,
    Severity,
    Direction,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Occurrence, Task::Instance, Task::Severity, Task::Direction];

    pub fn is_classification(self) -> bool {
        self != Task::Instance
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Occurrence => "occurrence",
            Task::Instance => "instance",
            Task::Severity => "severity",
            Task::Direction => "direction",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

/// Task label of one data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", content = "value", rename_all = "lowercase")]
pub enum Label {
    /// Blockage within the next `T_P` instances.
    Occurrence(u8),
    /// First blocked future instance, 1..=T_P.
    Instance(u32),
    /// Severity index, 1..=N_class.
    Severity(u32),
    Direction(u8),
}

impl Label {
    pub fn task(self) -> Task {
        match self {
            Label::Occurrence(_) => Task::Occurrence,
            Label::Instance(_) => Task::Instance,
            Label::Severity(_) => Task::Severity,
            Label::Direction(_) => Task::Direction,
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Label::Occurrence(v) | Label::Direction(v) => i64::from(v),
            Label::Instance(v) | Label::Severity(v) => i64::from(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sequence: u64,
    /// Index of the first observation row in the source sequence.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint<T> {
    /// `T_ob × M'` received powers.
    pub observation: Matrix<T>,
    pub label: Label,
    /// Prediction horizon `T_P` the label was computed for.
    pub horizon: usize,
    pub source: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub t_ob: usize,
    pub t_p: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(t_ob: usize, t_p: usize, stride: usize) -> Result<Self> {
        if t_ob == 0 || t_p == 0 || stride == 0 {
            return Err(Error::Config(format!(
                "window needs t_ob, t_p, stride >= 1 (got {t_ob}, {t_p}, {stride})"
            )));
        }
        Ok(Self { t_ob, t_p, stride })
    }
}

/// How windows are selected and labeled.
#[derive(Debug, Clone, Copy)]
pub enum Labeling<'a> {
    /// Every window, labeled by blockage occurrence.
    Occurrence,
    /// Windows whose last observed instance is clear and whose future holds a
    /// blockage (a LOS-to-NLOS transition), labeled by its first instance.
    Instance,
    /// Transition windows labeled with the blocker's severity index.
    Severity(&'a SeverityPartition),
    /// Transition windows labeled with the blocker's travel direction.
    Direction,
}

/// Slides a `T_ob + T_P` window over the pair. For anchor `t` the observation
/// is rows `t−T_ob+1..=t` and the label comes from status `t+1..=t+T_P`.
///
/// Sequences shorter than `T_ob + T_P` produce no windows.
pub fn slide_windows<T: Scalar>(
    pair: &RawSequencePair<T>,
    spec: &WindowSpec,
    labeling: Labeling<'_>,
) -> Result<Vec<DataPoint<T>>> {
    let n = pair.len();
    if n < spec.t_ob + spec.t_p {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut anchor = spec.t_ob - 1;
    while anchor + spec.t_p < n {
        let future = &pair.link_status[anchor + 1..=anchor + spec.t_p];
        let transition = pair.link_status[anchor] == 0 && future.contains(&1);
        let label = match labeling {
            Labeling::Occurrence => Some(Label::Occurrence(label_occurrence(future)?)),
            Labeling::Instance if transition => Some(Label::Instance(label_instance(future)?)),
            Labeling::Severity(partition) if transition => {
                Some(Label::Severity(label_severity(&pair.metadata.class, partition)?))
            }
            Labeling::Direction if transition => {
                let dir = pair.metadata.direction.ok_or_else(|| {
                    Error::InvalidInput(format!("sequence {} has no direction tag", pair.metadata.id))
                })?;
                Some(Label::Direction(dir))
            }
            _ => None,
        };
        if let Some(label) = label {
            let start = anchor + 1 - spec.t_ob;
            out.push(DataPoint {
                observation: pair.powers.row_range(start, anchor + 1),
                label,
                horizon: spec.t_p,
                source: Provenance { sequence: pair.metadata.id, start },
            });
        }
        anchor += spec.stride;
    }
    Ok(out)
}
