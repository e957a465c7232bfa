use serde::{Deserialize, Serialize};

use crate::channel::RawSequencePair;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Window length of the proximity analysis.
pub const PROXIMITY_WINDOW: usize = 16;

/// Received-power statistics across sequences, aligned on the first blocked
/// instant. Row `o − 1` holds offset `o` (1 = the sample just before
/// blockage); columns are beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityStats {
    pub window: usize,
    pub mean: Matrix<f64>,
    pub std: Matrix<f64>,
    pub used: usize,
    /// Pairs without a blockage or with fewer than `window` clear samples before it.
    pub skipped: usize,
}

/// Pre-blockage rows `first − window .. first`, or `None` when unavailable.
fn pre_window<T: Scalar>(pair: &RawSequencePair<T>, window: usize) -> Option<Matrix<T>> {
    let first = pair.first_blocked()?;
    (first >= window).then(|| pair.powers.row_range(first - window, first))
}

pub fn proximity_stats<T: Scalar>(pairs: &[RawSequencePair<T>], window: usize) -> Result<ProximityStats> {
    if window == 0 {
        return Err(Error::Config("proximity window must be at least 1".into()));
    }
    let windows: Vec<Matrix<T>> = pairs.iter().filter_map(|p| pre_window(p, window)).collect();
    let Some(first) = windows.first() else {
        return Err(Error::NoBlockage(format!("no sequence has {window} clear samples before a blockage")));
    };
    let beams = first.cols();
    if windows.iter().any(|w| w.cols() != beams) {
        return Err(Error::Shape("sequences differ in beam count".into()));
    }
    let n = windows.len() as f64;
    let mut mean = Matrix::filled(window, beams, 0.0);
    let mut std = Matrix::filled(window, beams, 0.0);
    for o in 1..=window {
        let row = window - o;
        for b in 0..beams {
            let m = windows.iter().map(|w| w.get(row, b).to_f64_lossy()).sum::<f64>() / n;
            let v = windows.iter().map(|w| (w.get(row, b).to_f64_lossy() - m).powi(2)).sum::<f64>() / n;
            mean.set(o - 1, b, m);
            std.set(o - 1, b, v.sqrt());
        }
    }
    Ok(ProximityStats { window, mean, std, used: windows.len(), skipped: pairs.len() - windows.len() })
}

fn mean_beam_std<T: Scalar>(rows: &Matrix<T>) -> f64 {
    let n = rows.rows() as f64;
    let per_beam = (0..rows.cols()).map(|b| {
        let m = (0..rows.rows()).map(|r| rows.get(r, b).to_f64_lossy()).sum::<f64>() / n;
        ((0..rows.rows()).map(|r| (rows.get(r, b).to_f64_lossy() - m).powi(2)).sum::<f64>() / n).sqrt()
    });
    per_beam.sum::<f64>() / rows.cols() as f64
}

/// Temporal power fluctuation of one sequence just before its blockage:
/// `(near, far)` are the beam-averaged standard deviations over the `k`
/// samples nearest to and farthest from the blockage within the `window`
/// samples preceding it.
pub fn pre_blockage_std_contrast<T: Scalar>(pair: &RawSequencePair<T>, window: usize, k: usize) -> Result<(f64, f64)> {
    if k == 0 || k > window {
        return Err(Error::Config(format!("need 1 <= k <= window, got k={k}, window={window}")));
    }
    let w = pre_window(pair, window)
        .ok_or_else(|| Error::NoBlockage(format!("sequence {} lacks {window} clear samples before blockage", pair.metadata.id)))?;
    Ok((mean_beam_std(&w.row_range(window - k, window)), mean_beam_std(&w.row_range(0, k))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` edges, `P_min + n·δ`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width histogram between the smallest and largest entry. Bin `n`
/// covers `[nδ, (n+1)δ)` above the minimum; the last bin is closed.
pub fn power_histogram<T: Scalar>(observation: &Matrix<T>, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let vals: Vec<f64> = observation.as_slice().iter().map(|v| v.to_f64_lossy()).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite power".into()));
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("constant observation has no bin width".into()));
    }
    let span = hi - lo;
    let n = n_bins as f64;
    let mut counts = vec![0; n_bins];
    for v in vals {
        // Compare `off·N` with `idx·span` so that edges are decided without
        // dividing (exact for integer-valued data).
        let off = v - lo;
        let mut idx = ((off * n / span).floor() as usize).min(n_bins - 1);
        while idx > 0 && off * n < idx as f64 * span {
            idx -= 1;
        }
        while idx + 1 < n_bins && off * n >= (idx + 1) as f64 * span {
            idx += 1;
        }
        counts[idx] += 1;
    }
    let delta = span / n;
    let edges = (0..=n_bins).map(|n| lo + n as f64 * delta).collect();
    Ok(Histogram { edges, counts })
}
