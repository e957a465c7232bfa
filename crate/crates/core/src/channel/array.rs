use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform linear array at the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig<T> {
    pub num_elements: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: T,
    /// Carrier frequency in Hz.
    pub carrier_frequency: T,
}

impl<T: Scalar> ArrayConfig<T> {
    pub fn new(num_elements: usize, element_spacing: T, carrier_frequency: T) -> Result<Self> {
        let config = Self { num_elements, element_spacing, carrier_frequency };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::Config("array needs at least one element".into()));
        }
        if !(self.element_spacing > T::zero()) {
            return Err(Error::Config("element spacing must be positive".into()));
        }
        if !(self.carrier_frequency > T::zero()) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Steering vector of the array toward `azimuth` (radians from broadside):
/// element `n` is `exp(j 2π d n sin(azimuth))`.
pub fn array_response<T: Scalar>(azimuth: T, config: &ArrayConfig<T>) -> Vec<Complex<T>> {
    let step = T::TAU() * config.element_spacing * azimuth.sin();
    (0..config.num_elements)
        .map(|n| Complex::from_polar(T::one(), step * T::from_usize_lossy(n)))
        .collect()
}

/// Fixed beam-steering codebook of phase-only beams.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    beams: Vec<Vec<Complex<T>>>,
    azimuth_angles: Vec<T>,
}

impl<T: Scalar> Codebook<T> {
    pub fn beams(&self) -> &[Vec<Complex<T>>] {
        &self.beams
    }

    pub fn azimuth_angles(&self) -> &[T] {
        &self.azimuth_angles
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Array gain `a(φ)ᴴ f_m` of every beam toward a ray arriving from `azimuth`.
    pub fn gains_toward(&self, azimuth: T, config: &ArrayConfig<T>) -> Vec<Complex<T>> {
        let response = array_response(azimuth, config);
        self.beams
            .iter()
            .map(|beam| response.iter().zip(beam).map(|(a, f)| a.conj() * f).sum())
            .collect()
    }
}

/// Builds `m` steering beams at azimuths uniformly spaced over `azimuth_range`,
/// endpoints included. A single beam sits at the range midpoint.
pub fn build_codebook<T: Scalar>(
    m: usize,
    azimuth_range: (T, T),
    config: &ArrayConfig<T>,
) -> Result<Codebook<T>> {
    config.validate()?;
    let (lo, hi) = azimuth_range;
    if m == 0 {
        return Err(Error::Config("codebook needs at least one beam".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid azimuth range [{lo}, {hi}]")));
    }
    let azimuth_angles: Vec<T> = if m == 1 {
        vec![(lo + hi) / T::of(2.0)]
    } else {
        let step = (hi - lo) / T::from_usize_lossy(m - 1);
        (0..m)
            .map(|i| if i == m - 1 { hi } else { lo + step * T::from_usize_lossy(i) })
            .collect()
    };
    let beams = azimuth_angles.iter().map(|&phi| array_response(phi, config)).collect();
    Ok(Codebook { beams, azimuth_angles })
}
