use serde::{Deserialize, Serialize};

use super::array::Codebook;
use super::scene::{link_blocked, received_power, Scene};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMetadata {
    pub id: u64,
    pub scenario: String,
    pub class: String,
    pub direction: Option<u8>,
}

/// Received-power sequence (`T × M`, linear scale) with aligned link status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSequencePair<T> {
    pub powers: Matrix<T>,
    pub link_status: Vec<u8>,
    pub sample_rate: T,
    pub metadata: SequenceMetadata,
}

impl<T: Scalar> RawSequencePair<T> {
    pub fn new(
        powers: Matrix<T>,
        link_status: Vec<u8>,
        sample_rate: T,
        metadata: SequenceMetadata,
    ) -> Result<Self> {
        let pair = Self { powers, link_status, sample_rate, metadata };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers.rows() != self.link_status.len() {
            return Err(Error::Shape(format!(
                "{} power rows but {} status entries",
                self.powers.rows(),
                self.link_status.len()
            )));
        }
        if self.link_status.iter().any(|&s| s > 1) {
            return Err(Error::InvalidInput("link status must be 0 or 1".into()));
        }
        if self.powers.as_slice().iter().any(|p| !(p.is_finite() && *p >= T::zero())) {
            return Err(Error::InvalidInput("powers must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.link_status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.link_status.is_empty()
    }

    pub fn num_beams(&self) -> usize {
        self.powers.cols()
    }

    pub fn first_blocked(&self) -> Option<usize> {
        self.link_status.iter().position(|&s| s == 1)
    }

    /// Half-open index ranges of each contiguous run of blocked samples.
    pub fn blocked_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &s) in self.link_status.iter().enumerate() {
            match (s, start) {
                (1, None) => start = Some(i),
                (0, Some(b)) => {
                    runs.push((b, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(b) = start {
            runs.push((b, self.link_status.len()));
        }
        runs
    }
}

/// Simulates `n_samples` instances of the scene on the block-fading grid
/// `t = n / sample_rate`.
pub fn simulate_samples<T: Scalar>(
    scene: &Scene<T>,
    n_samples: usize,
    codebook: &Codebook<T>,
    seed: u64,
) -> Result<RawSequencePair<T>> {
    scene.validate()?;
    if n_samples == 0 {
        return Err(Error::EmptySequence("zero samples requested".into()));
    }
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(n_samples * codebook.len());
    let mut status = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let t = T::from_usize_lossy(n) / scene.sample_rate;
        data.extend(received_power(scene, t, codebook, &mut rng));
        status.push(link_blocked(scene, t));
    }
    let metadata = SequenceMetadata {
        id: 0,
        scenario: scene.tags.scenario.clone(),
        class: scene.tags.class.clone(),
        direction: scene.tags.direction,
    };
    RawSequencePair::new(Matrix::new(n_samples, codebook.len(), data)?, status, scene.sample_rate, metadata)
}

/// Simulates `floor(duration × sample_rate)` samples. A 1e-9-sample guard
/// absorbs rounding when the duration was itself computed as `n / rate`.
pub fn simulate_sequence<T: Scalar>(
    scene: &Scene<T>,
    duration_seconds: T,
    codebook: &Codebook<T>,
    seed: u64,
) -> Result<RawSequencePair<T>> {
    if !(duration_seconds > T::zero()) {
        return Err(Error::EmptySequence(format!("duration {duration_seconds} s")));
    }
    let n = (duration_seconds * scene.sample_rate + T::of(1e-9)).floor();
    let n = n.to_usize().unwrap_or(0);
    simulate_samples(scene, n, codebook, seed)
}
