//! Fleets of single-blockage sequences drawn from per-class blocker
//! distributions.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::array::{build_codebook, ArrayConfig, Codebook};
use super::scene::{Point2, Scene, SceneTags, Trajectory};
use super::sequence::{simulate_samples, RawSequencePair};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream, Rng};
use crate::scalar::Scalar;

/// One kind of moving object with uniform ranges for its physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockerClass<T> {
    pub name: String,
    /// Relative frequency of this class in the fleet.
    pub weight: T,
    /// meters
    pub radius: [T; 2],
    /// m/s
    pub speed: [T; 2],
    pub reflection_gain: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookConfig<T> {
    pub num_beams: usize,
    /// radians
    pub azimuth_range: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig<T> {
    pub name: String,
    pub array: ArrayConfig<T>,
    pub codebook: CodebookConfig<T>,
    pub tx: [T; 2],
    pub rx: [T; 2],
    pub sample_rate: T,
    pub num_subcarriers: usize,
    pub bandwidth: T,
    pub noise_power: T,
    pub blockage_attenuation_db: T,
    /// Where along the TX→RX segment blockers cross it (fractions of the link).
    pub crossing_fraction: [T; 2],
    /// Clear samples before the first blocked sample (inclusive range).
    pub pre_blockage_samples: [usize; 2],
    /// Clear samples kept after the blockage ends.
    pub post_blockage_samples: usize,
    pub classes: Vec<BlockerClass<T>>,
}

fn check_range<T: Scalar>(what: &str, r: [T; 2], min: T) -> Result<()> {
    if !(r[0] >= min && r[1] >= r[0] && r[1].is_finite()) {
        return Err(Error::Config(format!("{what} range [{}, {}] is invalid", r[0], r[1])));
    }
    Ok(())
}

fn uniform<T: Scalar>(rng: &mut Rng, r: [T; 2]) -> T {
    let u: f64 = rng.random();
    r[0] + (r[1] - r[0]) * T::of(u)
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.classes.is_empty() {
            return Err(Error::Config("scenario needs at least one blocker class".into()));
        }
        if self.tx == self.rx {
            return Err(Error::Config("transmitter and receiver coincide".into()));
        }
        if !(self.sample_rate > T::zero()) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if self.pre_blockage_samples[0] == 0 || self.pre_blockage_samples[1] < self.pre_blockage_samples[0] {
            return Err(Error::Config("pre_blockage_samples must be a range starting at >= 1".into()));
        }
        let f = self.crossing_fraction;
        if !(f[0] > T::zero() && f[1] >= f[0] && f[1] < T::one()) {
            return Err(Error::Config("crossing_fraction must lie inside (0, 1)".into()));
        }
        for c in &self.classes {
            check_range(&format!("class {} radius", c.name), c.radius, T::zero())?;
            if !(c.radius[0] > T::zero()) {
                return Err(Error::Config(format!("class {} radius must be positive", c.name)));
            }
            check_range(&format!("class {} speed", c.name), c.speed, T::zero())?;
            check_range(&format!("class {} reflection gain", c.name), c.reflection_gain, T::zero())?;
            if !(c.weight > T::zero()) {
                return Err(Error::Config(format!("class {} weight must be positive", c.name)));
            }
            if c.speed[1] == T::zero() {
                return Err(Error::NoBlockage(format!("class {} never moves (speed 0)", c.name)));
            }
        }
        Ok(())
    }

    pub fn codebook(&self) -> Result<Codebook<T>> {
        let r = self.codebook.azimuth_range;
        build_codebook(self.codebook.num_beams, (r[0], r[1]), &self.array)
    }

    fn pick_class(&self, rng: &mut Rng) -> &BlockerClass<T> {
        let total: T = self.classes.iter().map(|c| c.weight).sum();
        let mut u = T::of(rng.random::<f64>()) * total;
        for c in &self.classes {
            if u < c.weight {
                return c;
            }
            u -= c.weight;
        }
        self.classes.last().expect("validated non-empty")
    }

    /// Draws the scene for sequence `index` and the number of samples that
    /// covers the approach, the whole blockage and the trailing clear samples.
    pub fn sample_scene(&self, index: u64, seed: u64) -> Result<(Scene<T>, usize)> {
        let mut rng = substream(seed, "fleet-scene", index);
        let class = self.pick_class(&mut rng);
        let radius = uniform(&mut rng, class.radius);
        let speed = uniform(&mut rng, class.speed);
        let gain = uniform(&mut rng, class.reflection_gain);
        let lambda = uniform(&mut rng, self.crossing_fraction);
        let direction: u8 = rng.random_range(0..=1);
        let n_pre = rng.random_range(self.pre_blockage_samples[0]..=self.pre_blockage_samples[1]);
        if !(speed > T::zero()) {
            return Err(Error::NoBlockage(format!("class {} drew speed 0", class.name)));
        }

        let tx = Point2::new(self.tx[0], self.tx[1]);
        let rx = Point2::new(self.rx[0], self.rx[1]);
        let link = rx - tx;
        let u = link * link.norm().recip();
        // Motion is perpendicular to the link; tag 0 moves with positive x.
        let mut perp = Point2::new(u.y, -u.x);
        if perp.x < T::zero() || (perp.x == T::zero() && perp.y < T::zero()) {
            perp = perp * -T::one();
        }
        let heading = if direction == 0 { perp } else { perp * -T::one() };
        let crossing = tx + link * lambda;

        // Enter the occlusion zone a fraction `phase` of a sample before sample
        // `n_pre`, so that sample is the first blocked one even for short blockages.
        let fs = self.sample_rate;
        let occlusion_time = T::of(2.0) * radius / speed;
        let phase = T::of(0.5) * (occlusion_time * fs).min(T::one());
        let t_enter = (T::from_usize_lossy(n_pre) - phase) / fs;
        let offset0 = -radius - speed * t_enter;
        let start = crossing + heading * offset0;
        let last_blocked = ((t_enter + occlusion_time) * fs).floor().to_usize().unwrap_or(n_pre);
        let n_samples = last_blocked.max(n_pre) + 1 + self.post_blockage_samples;

        let scene = Scene {
            tx,
            rx,
            trajectory: Trajectory { start, direction: heading, speed },
            blocker_radius: radius,
            reflection_gain: gain,
            blockage_attenuation_db: self.blockage_attenuation_db,
            noise_power: self.noise_power,
            num_subcarriers: self.num_subcarriers,
            bandwidth: self.bandwidth,
            sample_rate: fs,
            array: self.array.clone(),
            tags: SceneTags {
                scenario: self.name.clone(),
                class: class.name.clone(),
                direction: Some(direction),
            },
        };
        Ok((scene, n_samples))
    }
}

/// Simulates `n_sequences` pairs, each with exactly one blockage event.
///
/// Sequence `i` depends only on `(config, seed, i)`.
pub fn make_fleet<T: Scalar>(
    config: &ScenarioConfig<T>,
    n_sequences: usize,
    seed: u64,
) -> Result<Vec<RawSequencePair<T>>> {
    config.validate()?;
    if n_sequences == 0 {
        return Err(Error::Config("n_sequences must be at least 1".into()));
    }
    let codebook = config.codebook()?;
    (0..n_sequences as u64)
        .map(|i| {
            let (scene, n) = config.sample_scene(i, seed)?;
            let mut pair = simulate_samples(&scene, n, &codebook, derive_seed(seed, "fleet-noise", i))?;
            pair.metadata.id = i;
            match pair.blocked_runs().len() {
                1 => Ok(pair),
                runs => Err(Error::NoBlockage(format!("sequence {i} has {runs} blockage runs"))),
            }
        })
        .collect()
}

/// Table of outdoor object classes: name, count, mean blocked duration
/// (instances at 12 samples/s) and a typical speed in m/s.
const OUTDOOR_OBJECTS: [(&str, f64, f64, f64); 14] = [
    ("campus_shuttle", 11.0, 12.36, 9.0),
    ("public_shuttle", 152.0, 11.43, 10.0),
    ("commercial_truck", 29.0, 11.31, 10.0),
    ("box_truck", 36.0, 7.08, 10.0),
    ("pickup_truck", 112.0, 6.92, 10.0),
    ("van", 51.0, 6.15, 10.0),
    ("suv", 370.0, 4.75, 10.0),
    ("sedan", 631.0, 4.16, 10.0),
    ("campus_cart", 15.0, 4.2, 5.0),
    ("bike", 79.0, 2.7, 5.0),
    ("scooter", 2.0, 2.0, 6.0),
    ("skateboard", 11.0, 1.82, 4.0),
    ("walking_human", 118.0, 2.85, 1.4),
    ("running_human", 14.0, 2.64, 3.0),
];

/// Mean blocked duration (in samples) of each outdoor object class.
pub fn outdoor_class_durations() -> Vec<(&'static str, f64)> {
    OUTDOOR_OBJECTS.iter().map(|&(n, _, d, _)| (n, d)).collect()
}

impl<T: Scalar> ScenarioConfig<T> {
    /// Built-in scenario by name: `indoor` or `outdoor`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "indoor" => Ok(Self::indoor()),
            "outdoor" => Ok(Self::outdoor()),
            other => Err(Error::Config(format!("unknown scenario preset `{other}` (expected indoor or outdoor)"))),
        }
    }

    /// Conference-room setup: 8 m link, one slow cylindrical blocker, a single
    /// fixed directional beam, about 1.13 samples/s.
    pub fn indoor() -> Self {
        let q = T::of(std::f64::consts::FRAC_PI_4);
        Self {
            name: "indoor".into(),
            array: ArrayConfig {
                num_elements: 8,
                element_spacing: T::of(0.5),
                carrier_frequency: T::of(60e9),
            },
            codebook: CodebookConfig { num_beams: 1, azimuth_range: [-q, q] },
            tx: [T::zero(), T::zero()],
            rx: [T::zero(), T::of(8.0)],
            sample_rate: T::of(1.13),
            num_subcarriers: 64,
            bandwidth: T::of(20e6),
            noise_power: T::of(1e-3),
            blockage_attenuation_db: T::of(30.0),
            crossing_fraction: [T::of(0.4375), T::of(0.5625)],
            pre_blockage_samples: [52, 60],
            post_blockage_samples: 8,
            classes: vec![BlockerClass {
                name: "cylinder".into(),
                weight: T::one(),
                radius: [T::of(0.2), T::of(0.3)],
                speed: [T::of(0.0625), T::of(0.0625)],
                reflection_gain: [T::of(0.5), T::of(1.0)],
            }],
        }
    }

    /// City-street setup: 15 m link across the street, 16-element ULA with a
    /// 64-beam codebook over ±45°, 12 samples/s, 14 object classes.
    ///
    /// Class radii are set so that a perpendicular crossing at the class's
    /// typical speed is blocked for its tabulated mean duration.
    pub fn outdoor() -> Self {
        let q = T::of(std::f64::consts::FRAC_PI_4);
        let fs = 12.0;
        let classes = OUTDOOR_OBJECTS
            .iter()
            .map(|&(name, count, duration, speed)| {
                let radius = speed * duration / (2.0 * fs);
                BlockerClass {
                    name: name.into(),
                    weight: T::of(count),
                    radius: [T::of(radius * 0.95), T::of(radius * 1.05)],
                    speed: [T::of(speed * 0.9), T::of(speed * 1.1)],
                    reflection_gain: [T::of(0.5 + 0.2 * radius), T::of(1.0 + 0.4 * radius)],
                }
            })
            .collect();
        Self {
            name: "outdoor".into(),
            array: ArrayConfig {
                num_elements: 16,
                element_spacing: T::of(0.5),
                carrier_frequency: T::of(60e9),
            },
            codebook: CodebookConfig { num_beams: 64, azimuth_range: [-q, q] },
            tx: [T::zero(), T::zero()],
            rx: [T::zero(), T::of(15.0)],
            sample_rate: T::of(fs),
            num_subcarriers: 64,
            bandwidth: T::of(20e6),
            noise_power: T::of(1e-4),
            blockage_attenuation_db: T::of(30.0),
            crossing_fraction: [T::of(0.25), T::of(0.75)],
            pre_blockage_samples: [30, 40],
            post_blockage_samples: 4,
            classes,
        }
    }
}
