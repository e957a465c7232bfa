use super::window::DataPoint;
use crate::channel::RawSequencePair;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{standard_normal, Rng};
use crate::scalar::Scalar;

/// Number of beams the center cut expects.
pub const CODEBOOK_WIDTH: usize = 64;

/// Keeps samples `0, d, 2d, …` of powers and link status, which emulates a
/// blocker moving `d` times faster.
pub fn augment_drop<T: Scalar>(pair: &RawSequencePair<T>, d: usize) -> Result<RawSequencePair<T>> {
    if d < 2 {
        return Err(Error::Config(format!("drop factor must be at least 2, got {d}")));
    }
    if pair.is_empty() {
        return Err(Error::EmptySequence("cannot decimate an empty sequence".into()));
    }
    let keep: Vec<usize> = (0..pair.len()).step_by(d).collect();
    // The nominal rate is kept: the decimated sequence stands in for a faster
    // blocker observed at the same rate.
    Ok(RawSequencePair {
        powers: pair.powers.select_rows(keep.iter().copied()),
        link_status: keep.iter().map(|&i| pair.link_status[i]).collect(),
        sample_rate: pair.sample_rate,
        metadata: pair.metadata.clone(),
    })
}

/// The originals followed by one decimated copy per factor; ids are
/// renumbered by position.
pub fn augment_drop_corpus<T: Scalar>(pairs: &[RawSequencePair<T>], factors: &[usize]) -> Result<Vec<RawSequencePair<T>>> {
    let mut out = pairs.to_vec();
    for &d in factors {
        for pair in pairs {
            out.push(augment_drop(pair, d)?);
        }
    }
    for (i, p) in out.iter_mut().enumerate() {
        p.metadata.id = i as u64;
    }
    Ok(out)
}

/// Adds real white Gaussian noise at `snr_db` relative to the mean squared
/// entry of the observation. `snr_db = +∞` returns the point unchanged.
pub fn augment_awgn<T: Scalar>(point: &DataPoint<T>, snr_db: f64, rng: &mut Rng) -> Result<DataPoint<T>> {
    if snr_db.is_nan() {
        return Err(Error::Config("SNR is NaN".into()));
    }
    let obs = point.observation.as_slice();
    let power = obs.iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>() / obs.len() as f64;
    if !(power > 0.0) {
        return Err(Error::Degenerate("observation has zero signal power".into()));
    }
    let mut out = point.clone();
    if snr_db == f64::INFINITY {
        return Ok(out);
    }
    let std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    for x in out.observation.as_mut_slice() {
        *x += T::of(std * standard_normal(rng));
    }
    Ok(out)
}

/// Drops the `n_discard` central beams of a 64-beam observation: columns
/// `32 − n/2 + 1 .. 32 + n/2` (0-based), i.e. 28..=37 for `n = 10`.
pub fn center_beam_cut<T: Scalar>(observation: &Matrix<T>, n_discard: usize) -> Result<Matrix<T>> {
    if observation.cols() != CODEBOOK_WIDTH {
        return Err(Error::Shape(format!(
            "center cut needs {CODEBOOK_WIDTH} beams, got {}",
            observation.cols()
        )));
    }
    if !n_discard.is_multiple_of(2) || n_discard >= CODEBOOK_WIDTH - 1 {
        return Err(Error::Config(format!("n_discard must be even and below {}, got {n_discard}", CODEBOOK_WIDTH - 1)));
    }
    if n_discard == 0 {
        return Ok(observation.clone());
    }
    let lo = CODEBOOK_WIDTH / 2 - n_discard / 2 + 1;
    let hi = lo + n_discard;
    let keep: Vec<usize> = (0..CODEBOOK_WIDTH).filter(|c| *c < lo || *c >= hi).collect();
    Ok(observation.select_cols(&keep))
}
