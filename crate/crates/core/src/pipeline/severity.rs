use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::RawSequencePair;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Quantization of per-class average blockage durations into severity levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityPartition {
    /// `[min, max]` duration of each cluster, ascending; index `i` is level `i + 1`.
    pub intervals: Vec<[f64; 2]>,
    pub class_of: BTreeMap<String, u32>,
}

impl SeverityPartition {
    pub fn n_class(&self) -> usize {
        self.intervals.len()
    }

    /// Classes of each severity level, in name order.
    pub fn groups(&self) -> Vec<Vec<String>> {
        let mut groups = vec![Vec::new(); self.n_class()];
        for (name, &level) in &self.class_of {
            groups[level as usize - 1].push(name.clone());
        }
        groups
    }
}

/// Axis the durations are clustered on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationScale {
    Linear,
    /// Natural log: clusters by duration ratio rather than difference.
    #[default]
    Log,
}

// Relative slack when comparing partition costs, so that ties in exact
// arithmetic are not decided by rounding.
const TIE_TOLERANCE: f64 = 1e-12;

/// [`severity_partition_on`] with log-scaled durations.
pub fn severity_partition(avg_durations: &BTreeMap<String, f64>, n_class: usize) -> Result<SeverityPartition> {
    severity_partition_on(avg_durations, n_class, DurationScale::Log)
}

/// Optimal 1-D k-means over the distinct duration values (each weighted by the
/// number of classes sharing it), mapped through `scale`. Among equal-cost
/// partitions the one with the smallest first boundary wins, then the second,
/// and so on.
pub fn severity_partition_on(
    avg_durations: &BTreeMap<String, f64>,
    n_class: usize,
    scale: DurationScale,
) -> Result<SeverityPartition> {
    if n_class == 0 {
        return Err(Error::Config("n_class must be at least 1".into()));
    }
    if let Some((name, d)) = avg_durations.iter().find(|(_, d)| !d.is_finite()) {
        return Err(Error::InvalidInput(format!("duration of `{name}` is {d}")));
    }
    if scale == DurationScale::Log {
        if let Some((name, d)) = avg_durations.iter().find(|(_, d)| **d <= 0.0) {
            return Err(Error::InvalidInput(format!("log scale needs positive durations; `{name}` has {d}")));
        }
    }
    let axis = |d: f64| match scale {
        DurationScale::Linear => d,
        DurationScale::Log => d.ln(),
    };
    let mut values: Vec<f64> = avg_durations.values().copied().collect();
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for v in values {
        match distinct.last_mut() {
            Some((last, w)) if *last == v => *w += 1.0,
            _ => distinct.push((v, 1.0)),
        }
    }
    let n = distinct.len();
    if n_class > n {
        return Err(Error::InvalidInput(format!(
            "{n_class} severity classes requested but only {n} distinct durations"
        )));
    }

    let sse = |i: usize, j: usize| -> f64 {
        let pts = &distinct[i..j];
        let w: f64 = pts.iter().map(|p| p.1).sum();
        let mean = pts.iter().map(|p| axis(p.0) * p.1).sum::<f64>() / w;
        pts.iter().map(|p| p.1 * (axis(p.0) - mean).powi(2)).sum()
    };
    // best[k][i]: minimum cost of splitting values i.. into k clusters.
    let mut best = vec![vec![f64::INFINITY; n + 1]; n_class + 1];
    best[0][n] = 0.0;
    for k in 1..=n_class {
        for i in (0..n).rev() {
            for j in i + 1..=n {
                let c = sse(i, j) + best[k - 1][j];
                if c < best[k][i] {
                    best[k][i] = c;
                }
            }
        }
    }
    let mut ends = Vec::with_capacity(n_class);
    let mut i = 0;
    for k in (1..=n_class).rev() {
        let target = best[k][i];
        let slack = TIE_TOLERANCE * target.abs().max(1.0);
        let j = (i + 1..=n)
            .find(|&j| sse(i, j) + best[k - 1][j] <= target + slack)
            .expect("optimal split exists");
        ends.push(j);
        i = j;
    }

    let mut intervals = Vec::with_capacity(n_class);
    let mut start = 0;
    for &end in &ends {
        intervals.push([distinct[start].0, distinct[end - 1].0]);
        start = end;
    }
    let class_of = avg_durations
        .iter()
        .map(|(name, &d)| {
            let level = intervals.iter().position(|iv| d >= iv[0] && d <= iv[1]).unwrap() + 1;
            (name.clone(), level as u32)
        })
        .collect();
    Ok(SeverityPartition { intervals, class_of })
}

pub fn label_severity(class_tag: &str, partition: &SeverityPartition) -> Result<u32> {
    partition
        .class_of
        .get(class_tag)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("class `{class_tag}` has no severity level")))
}

/// Mean length (in samples) of the blocked runs of each class in a corpus.
pub fn average_blocked_durations<T: Scalar>(pairs: &[RawSequencePair<T>]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for pair in pairs {
        for (a, b) in pair.blocked_runs() {
            let e = acc.entry(pair.metadata.class.clone()).or_default();
            e.0 += (b - a) as f64;
            e.1 += 1.0;
        }
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c)).collect()
}
