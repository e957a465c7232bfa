use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::Architecture;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::scalar::Scalar;

/// Flat parameter vector of one network.
///
/// Every mutation bumps `generation`; caches from older generations are
/// refused by the backward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    arch: Architecture,
    values: Vec<T>,
    init_seed: u64,
    #[serde(skip)]
    generation: u64,
}

impl<T: Scalar> ModelParams<T> {
    /// Uniform in `±1/√fan_in` per tensor, seeded.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seeded(derive_seed(seed, "init", 0));
        let mut values = Vec::with_capacity(arch.param_count());
        for (len, fan_in) in tensor_fan_ins(&arch) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            values.extend((0..len).map(|_| T::of(rng.random_range(-bound..=bound))));
        }
        debug_assert_eq!(values.len(), arch.param_count());
        Ok(Self { arch, values, init_seed: seed, generation: 0 })
    }

    pub fn from_values(arch: Architecture, values: Vec<T>, init_seed: u64) -> Result<Self> {
        arch.validate()?;
        let p = Self { arch, values, init_seed, generation: 0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.arch.param_count() {
            return Err(Error::Shape(format!(
                "{} parameters for an architecture with {}",
                self.values.len(),
                self.arch.param_count()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn update(&mut self, f: impl FnOnce(&mut [T])) {
        f(&mut self.values);
        self.generation += 1;
    }
}

/// `(length, fan_in)` of each parameter tensor in storage order.
fn tensor_fan_ins(arch: &Architecture) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    match arch {
        Architecture::Gru(c) => {
            let h = c.hidden_dim;
            for l in 0..c.num_layers {
                let i = c.layer_input(l);
                out.push((3 * h * i, i));
                out.push((3 * h * h, h));
                out.push((3 * h, h));
                out.push((3 * h, h));
            }
            out.push((c.head.n_out() * h, h));
            out.push((c.head.n_out(), h));
        }
        Architecture::Cnn(c) => {
            for conv in c.stacks.iter().flat_map(|s| &s.convs) {
                let fan = conv.in_ch * conv.kernel * conv.kernel;
                out.push((conv.out_ch * fan, fan));
                out.push((conv.out_ch, fan));
            }
            let flat = c.flatten_dim().unwrap_or(1);
            out.push((c.head.n_out() * flat, flat));
            out.push((c.head.n_out(), flat));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::config::{CnnConfig, Head};

    #[test]
    fn init_is_seeded_and_bounded() {
        let arch = Architecture::Cnn(CnnConfig::outdoor(Head::Classifier { n_out: 2 }));
        let a = ModelParams::<f64>::init(arch.clone(), 3).unwrap();
        assert_eq!(a.len(), 2422);
        assert_eq!(a, ModelParams::init(arch.clone(), 3).unwrap());
        assert_ne!(a.values(), ModelParams::<f64>::init(arch, 4).unwrap().values());
        // First tensor: 1 input channel × 3×3 kernel.
        assert!(a.values()[..36].iter().all(|v| v.abs() <= 1.0 / 3.0));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let arch = Architecture::Cnn(CnnConfig::outdoor(Head::Regressor));
        assert!(ModelParams::<f64>::from_values(arch, vec![0.0; 10], 0).is_err());
    }

    #[test]
    fn update_bumps_generation() {
        let arch = Architecture::Cnn(CnnConfig::outdoor(Head::Regressor));
        let mut p = ModelParams::<f64>::init(arch, 0).unwrap();
        p.update(|v| v[0] = 1.0);
        assert_eq!(p.generation(), 1);
    }
}
