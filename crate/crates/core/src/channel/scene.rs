//! Two-ray geometric channel: a LOS ray plus a ray scattered off the moving
//! blocker, observed through the receiver's beam codebook.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::array::{array_response, ArrayConfig, Codebook};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, Rng};
use crate::scalar::Scalar;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Straight-line constant-speed blocker path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub start: Point2<T>,
    /// Unit vector.
    pub direction: Point2<T>,
    /// m/s
    pub speed: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn position(&self, t_seconds: T) -> Point2<T> {
        self.start + self.direction * (self.speed * t_seconds)
    }
}

/// Tags copied into the metadata of simulated sequences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneTags {
    pub scenario: String,
    pub class: String,
    /// 0: blocker moves with positive x-component ("left to right"), 1: opposite.
    pub direction: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub tx: Point2<T>,
    /// The receiver array's broadside points at the transmitter.
    pub rx: Point2<T>,
    pub trajectory: Trajectory<T>,
    pub blocker_radius: T,
    /// Linear amplitude scale of the scattered ray.
    pub reflection_gain: T,
    /// Attenuation (dB) of the LOS ray while the blocker occludes it.
    pub blockage_attenuation_db: T,
    /// Linear noise power per subcarrier.
    pub noise_power: T,
    pub num_subcarriers: usize,
    /// Hz
    pub bandwidth: T,
    /// samples/s
    pub sample_rate: T,
    pub array: ArrayConfig<T>,
    pub tags: SceneTags,
}

/// One propagation path at a given instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub amplitude: T,
    /// Total path length in meters.
    pub path_length: T,
    /// Angle of arrival at the receiver, radians from broadside.
    pub azimuth: T,
}

impl<T: Scalar> Scene<T> {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        let finite = [self.tx.x, self.tx.y, self.rx.x, self.rx.y];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite transmitter/receiver position".into()));
        }
        if self.tx == self.rx {
            return Err(Error::Config("transmitter and receiver coincide".into()));
        }
        if !(self.trajectory.speed >= T::zero()) {
            return Err(Error::Config("blocker speed must be non-negative".into()));
        }
        if !(self.blocker_radius > T::zero()) {
            return Err(Error::Config("blocker radius must be positive".into()));
        }
        if self.num_subcarriers == 0 {
            return Err(Error::Config("need at least one subcarrier".into()));
        }
        if !(self.blockage_attenuation_db >= T::zero()) {
            return Err(Error::Config("blockage attenuation must be non-negative".into()));
        }
        if !(self.noise_power >= T::zero()) || !(self.reflection_gain >= T::zero()) {
            return Err(Error::Config("noise power and reflection gain must be non-negative".into()));
        }
        if !(self.sample_rate > T::zero()) || !(self.bandwidth > T::zero()) {
            return Err(Error::Config("sample rate and bandwidth must be positive".into()));
        }
        Ok(())
    }

    pub fn link_length(&self) -> T {
        self.tx.distance(self.rx)
    }

    /// Baseband offset of subcarrier `k`: `(k − K/2)·BW/K`.
    pub fn subcarrier_offset(&self, k: usize) -> T {
        let kk = T::from_usize_lossy(self.num_subcarriers);
        (T::from_usize_lossy(k) - kk / T::of(2.0)) * self.bandwidth / kk
    }

    /// Signed angle of `p` as seen from the receiver, measured from broadside.
    pub fn azimuth_from_rx(&self, p: Point2<T>) -> T {
        let broadside = self.tx - self.rx;
        let v = p - self.rx;
        broadside.cross(v).atan2(broadside.dot(v))
    }

    /// The LOS ray (attenuated while blocked) and the scattered ray at `t`.
    pub fn rays(&self, t_seconds: T) -> [Ray<T>; 2] {
        let d_los = self.link_length();
        let mut los_amp = d_los.recip();
        if link_blocked(self, t_seconds) == 1 {
            los_amp *= T::of(10.0).powf(-self.blockage_attenuation_db / T::of(20.0));
        }
        let blocker = self.trajectory.position(t_seconds);
        // Scattering happens at the blocker surface, so the center is never
        // closer than one radius to either terminal.
        let d1 = blocker.distance(self.tx).max(self.blocker_radius);
        let d2 = blocker.distance(self.rx).max(self.blocker_radius);
        [
            Ray { amplitude: los_amp, path_length: d_los, azimuth: T::zero() },
            Ray {
                amplitude: self.reflection_gain / (d1 * d2),
                path_length: d1 + d2,
                azimuth: self.azimuth_from_rx(blocker),
            },
        ]
    }

    /// Phasor `α·exp(−j2π(f_c + f_k)·ℓ/c)` of a ray on subcarrier `k`.
    fn ray_phasor(&self, ray: &Ray<T>, k: usize) -> Complex<T> {
        let freq = self.array.carrier_frequency + self.subcarrier_offset(k);
        let cycles = freq * ray.path_length / T::of(SPEED_OF_LIGHT);
        let frac = cycles - cycles.floor();
        Complex::from_polar(ray.amplitude, -T::TAU() * frac)
    }
}

/// Euclidean distance from `p` to the segment `a`–`b`.
pub fn point_segment_distance<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return p.distance(a);
    }
    let s = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.distance(a + ab * s)
}

/// 1 when the blocker disk touches the TX–RX segment at `t_seconds`.
pub fn link_blocked<T: Scalar>(scene: &Scene<T>, t_seconds: T) -> u8 {
    let center = scene.trajectory.position(t_seconds);
    u8::from(point_segment_distance(center, scene.tx, scene.rx) <= scene.blocker_radius)
}

/// Channel vector `h_k[t]` (length `M_A`) on subcarrier `k`:
/// `Σ_rays α·e^{−j2π(f_c+f_k)τ}·conj(a(φ))`.
pub fn channel_at<T: Scalar>(scene: &Scene<T>, t_seconds: T, k: usize) -> Result<Vec<Complex<T>>> {
    if k >= scene.num_subcarriers {
        return Err(Error::Index { index: k, len: scene.num_subcarriers });
    }
    let mut h = vec![Complex::new(T::zero(), T::zero()); scene.array.num_elements];
    for ray in scene.rays(t_seconds) {
        let phasor = scene.ray_phasor(&ray, k);
        for (hn, an) in h.iter_mut().zip(array_response(ray.azimuth, &scene.array)) {
            *hn += phasor * an.conj();
        }
    }
    Ok(h)
}

/// Received power per beam: `Σ_k |h_kᵀ f_m + n_k|²` with `n_k ~ CN(0, σ²)`.
///
/// Noise is drawn beam-major, subcarrier-minor from `rng`; nothing is drawn when
/// the noise power is zero.
pub fn received_power<T: Scalar>(
    scene: &Scene<T>,
    t_seconds: T,
    codebook: &Codebook<T>,
    rng: &mut Rng,
) -> Vec<T> {
    let rays = scene.rays(t_seconds);
    // hᵀf factorizes per ray into (subcarrier phasor) × (beam gain).
    let gains: Vec<Vec<Complex<T>>> =
        rays.iter().map(|r| codebook.gains_toward(r.azimuth, &scene.array)).collect();
    let phasors: Vec<Vec<Complex<T>>> = rays
        .iter()
        .map(|r| (0..scene.num_subcarriers).map(|k| scene.ray_phasor(r, k)).collect())
        .collect();
    let noise_std = (scene.noise_power / T::of(2.0)).sqrt();
    let noisy = scene.noise_power > T::zero();

    (0..codebook.len())
        .map(|m| {
            let mut total = T::zero();
            for k in 0..scene.num_subcarriers {
                let mut r = Complex::new(T::zero(), T::zero());
                for (p, g) in phasors.iter().zip(&gains) {
                    r += p[k] * g[m];
                }
                if noisy {
                    let re = T::of(standard_normal(rng));
                    let im = T::of(standard_normal(rng));
                    r += Complex::new(re, im) * noise_std;
                }
                total += r.norm_sqr();
            }
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::array::build_codebook;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    pub(crate) fn scene_with(
        tx: (f64, f64),
        rx: (f64, f64),
        start: (f64, f64),
        dir: (f64, f64),
        speed: f64,
        radius: f64,
    ) -> Scene<f64> {
        let n = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        Scene {
            tx: Point2::new(tx.0, tx.1),
            rx: Point2::new(rx.0, rx.1),
            trajectory: Trajectory {
                start: Point2::new(start.0, start.1),
                direction: Point2::new(dir.0 / n, dir.1 / n),
                speed,
            },
            blocker_radius: radius,
            reflection_gain: 1.0,
            blockage_attenuation_db: 30.0,
            noise_power: 0.0,
            num_subcarriers: 8,
            bandwidth: 20e6,
            sample_rate: 10.0,
            array: ArrayConfig::new(4, 0.5, 60e9).unwrap(),
            tags: SceneTags::default(),
        }
    }

    #[test]
    fn blocker_far_from_segment_is_clear() {
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 3.0), (1.0, 0.0), 0.0, 0.5);
        assert_eq!(link_blocked(&s, 0.0), 0);
    }

    #[test]
    fn blocker_on_midpoint_blocks() {
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 0.0), (1.0, 0.0), 0.0, 0.5);
        assert_eq!(link_blocked(&s, 0.0), 1);
    }

    #[test]
    fn crossing_time_matches_analytic_solution() {
        // Moving straight down toward the segment from y = 5 at 2 m/s with
        // radius 0.5: contact when 5 − 2t = 0.5, i.e. t* = 2.25 s.
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (3.0, 5.0), (0.0, -1.0), 2.0, 0.5);
        let t_star = 2.25;
        let rate = 10.0;
        let first = (0..100).find(|&n| link_blocked(&s, n as f64 / rate) == 1).unwrap();
        let t_first = first as f64 / rate;
        assert!(t_first >= t_star && t_first - t_star <= 1.0 / rate + 1e-12);
        assert_eq!(link_blocked(&s, t_star - 1e-9), 0);
    }

    #[test]
    fn subcarrier_out_of_range_is_an_index_error() {
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 3.0), (1.0, 0.0), 0.0, 0.5);
        assert!(matches!(channel_at(&s, 0.0, 8), Err(Error::Index { index: 8, len: 8 })));
    }

    #[test]
    fn los_only_channel_has_constant_magnitude() {
        let mut s = scene_with((0.0, 0.0), (1.0, 0.0), (0.5, 3.0), (1.0, 0.0), 1.0, 0.1);
        s.reflection_gain = 0.0;
        for t in [0.0, 0.3, 1.7, 4.0] {
            for k in 0..8 {
                for hn in channel_at(&s, t, k).unwrap() {
                    assert!((hn.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    /// Independent phasor sum for the (0,0)/(8,0)/(4,1) geometry, written out
    /// with plain f64 arithmetic.
    #[test]
    fn channel_matches_hand_phasor_sum() {
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 1.0), (1.0, 0.0), 0.0, 0.2);
        let k = 3;
        let fc = 60e9;
        let fk = (3.0 - 4.0) * 20e6 / 8.0;
        let lam = SPEED_OF_LIGHT / (fc + fk);
        let d_los = 8.0_f64;
        let d1 = (16.0_f64 + 1.0).sqrt();
        let d2 = d1;
        let los_amp = 1.0 / d_los;
        let sc_amp = 1.0 / (d1 * d2);
        let los_phase = -2.0 * std::f64::consts::PI * (d_los / lam);
        let sc_phase = -2.0 * std::f64::consts::PI * ((d1 + d2) / lam);
        // RX at (8,0) looks toward TX along −x; the blocker at (4,1) sits
        // at a clockwise angle of atan(1/4) from broadside.
        let az = -(1.0_f64 / 4.0).atan();
        let h = channel_at(&s, 0.0, k).unwrap();
        for (n, hn) in h.iter().enumerate() {
            let los = Complex::from_polar(los_amp, los_phase);
            let arr = 2.0 * std::f64::consts::PI * 0.5 * n as f64 * az.sin();
            let sc = Complex::from_polar(sc_amp, sc_phase - arr);
            let want = los + sc;
            assert!((hn - want).norm() < 1e-9 * want.norm(), "element {n}: {hn} vs {want}");
        }
    }

    #[test]
    fn aligned_rays_add_in_amplitude() {
        let mut s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 1.0), (1.0, 0.0), 0.0, 0.2);
        s.array = ArrayConfig::new(1, 0.5, 60e9).unwrap();
        s.num_subcarriers = 1;
        // Pick a carrier for which the path difference is an integer number of
        // wavelengths on subcarrier 0 (offset −BW/2).
        let diff = 2.0 * 17.0_f64.sqrt() - 8.0;
        let f0 = (diff * 60e9 / SPEED_OF_LIGHT).round() * SPEED_OF_LIGHT / diff;
        s.array.carrier_frequency = f0 + s.bandwidth / 2.0;
        let h = channel_at(&s, 0.0, 0).unwrap()[0];
        let [los, sc] = s.rays(0.0);
        assert!((h.norm() - (los.amplitude + sc.amplitude)).abs() < 1e-6 * h.norm());
    }

    #[test]
    fn noiseless_single_beam_power_is_k_times_amplitude_squared() {
        let mut s = scene_with((0.0, 0.0), (2.0, 0.0), (1.0, 50.0), (1.0, 0.0), 0.0, 0.1);
        s.reflection_gain = 0.0;
        s.array = ArrayConfig::new(1, 0.5, 60e9).unwrap();
        s.num_subcarriers = 64;
        let cb = build_codebook(1, (-FRAC_PI_4, FRAC_PI_4), &s.array).unwrap();
        let p = received_power(&s, 0.0, &cb, &mut seeded(0));
        assert!((p[0] - 64.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn blocked_power_drops_by_the_attenuation() {
        let mut s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 0.0), (0.0, 1.0), 1.0, 0.3);
        s.reflection_gain = 0.0;
        let cb = build_codebook(5, (-FRAC_PI_4, FRAC_PI_4), &s.array).unwrap();
        let blocked = received_power(&s, 0.0, &cb, &mut seeded(0));
        let clear = received_power(&s, 10.0, &cb, &mut seeded(0));
        for (b, c) in blocked.iter().zip(&clear) {
            assert!((b - c * 1e-3).abs() <= 1e-12 * c);
        }
    }

    /// Brute-force oracle: evaluate h_k per subcarrier, project on each beam,
    /// accumulate |·|² naively.
    #[test]
    fn two_ray_power_matches_per_subcarrier_oracle() {
        let s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 2.0), (0.3, -1.0), 0.7, 0.4);
        let cb = build_codebook(7, (-FRAC_PI_4, FRAC_PI_4), &s.array).unwrap();
        for t in [0.0, 0.9, 2.1, 2.6] {
            let fast = received_power(&s, t, &cb, &mut seeded(0));
            for (m, beam) in cb.beams().iter().enumerate() {
                let mut naive = 0.0;
                for k in 0..s.num_subcarriers {
                    let h = channel_at(&s, t, k).unwrap();
                    let r: Complex<f64> = h.iter().zip(beam).map(|(a, b)| a * b).sum();
                    naive += r.norm_sqr();
                }
                assert!((fast[m] - naive).abs() <= 1e-10 * naive.max(1e-30), "t={t} m={m}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn powers_are_finite_and_non_negative(
            bx in -10.0..10.0f64, by in -10.0..10.0f64, noise in 0.0..1.0f64, t in 0.0..5.0f64
        ) {
            let mut s = scene_with((0.0, 0.0), (8.0, 0.0), (bx, by), (1.0, 0.2), 1.5, 0.4);
            s.noise_power = noise;
            let cb = build_codebook(6, (-FRAC_PI_4, FRAC_PI_4), &s.array).unwrap();
            for p in received_power(&s, t, &cb, &mut seeded(3)) {
                prop_assert!(p.is_finite() && p >= 0.0);
            }
        }

        /// With the scatterer and the noise switched off, more attenuation
        /// never raises blocked-instant power.
        #[test]
        fn attenuation_is_monotone_for_the_los_ray(att in 0.0..60.0f64, extra in 0.0..30.0f64) {
            let mut s = scene_with((0.0, 0.0), (8.0, 0.0), (4.0, 0.0), (0.0, 1.0), 0.0, 0.3);
            s.reflection_gain = 0.0;
            s.blockage_attenuation_db = att;
            let cb = build_codebook(4, (-FRAC_PI_4, FRAC_PI_4), &s.array).unwrap();
            let lo = received_power(&s, 0.0, &cb, &mut seeded(1));
            s.blockage_attenuation_db = att + extra;
            let hi = received_power(&s, 0.0, &cb, &mut seeded(1));
            for (a, b) in lo.iter().zip(&hi) {
                prop_assert!(b <= a);
            }
        }
    }

    /// Sampling 1000 points along the segment and testing point-in-disk agrees
    /// with the analytic distance test.
    #[test]
    fn link_blocked_matches_sampled_segment_oracle() {
        use rand::Rng as _;
        let mut rng = seeded(2024);
        for _ in 0..1000 {
            let tx = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let rx = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let c = (rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            let r = rng.random_range(0.05..3.0);
            let s = scene_with(tx, rx, c, (1.0, 0.0), 0.0, r);
            let oracle = (0..1000).any(|i| {
                let f = i as f64 / 999.0;
                let px = tx.0 + f * (rx.0 - tx.0);
                let py = tx.1 + f * (rx.1 - tx.1);
                (px - c.0).hypot(py - c.1) <= r
            });
            assert_eq!(link_blocked(&s, 0.0), u8::from(oracle), "tx={tx:?} rx={rx:?} c={c:?} r={r}");
        }
    }
}
