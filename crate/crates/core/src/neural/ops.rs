//! Small dense kernels shared by the networks.

use rand::Rng as _;

use crate::rng::Rng;
use crate::scalar::Scalar;

/// `out = b + W x` with `W` row-major `out.len() × x.len()`.
pub(crate) fn affine<T: Scalar>(w: &[T], b: &[T], x: &[T], out: &mut [T]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * n..(i + 1) * n];
        *o = b[i] + row.iter().zip(x).map(|(&a, &c)| a * c).sum::<T>();
    }
}

/// Accumulates the gradients of [`affine`] given `dout`.
pub(crate) fn affine_backward<T: Scalar>(
    w: &[T],
    x: &[T],
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    dx: Option<&mut [T]>,
) {
    let n = x.len();
    for (i, &g) in dout.iter().enumerate() {
        db[i] += g;
        if g == T::zero() {
            continue;
        }
        for (d, &c) in dw[i * n..(i + 1) * n].iter_mut().zip(x) {
            *d += g * c;
        }
    }
    if let Some(dx) = dx {
        for (i, &g) in dout.iter().enumerate() {
            if g == T::zero() {
                continue;
            }
            for (d, &a) in dx.iter_mut().zip(&w[i * n..(i + 1) * n]) {
                *d += g * a;
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// `1/(1 − rate)`.
pub(crate) fn dropout_mask<T: Scalar>(len: usize, rate: f64, rng: &mut Rng) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

/// Dropout then the fully connected head, shared by both networks.
#[derive(Debug, Clone)]
pub(crate) struct HeadCache<T> {
    pub features: Vec<T>,
    pub dropped: Vec<T>,
    pub mask: Option<Vec<T>>,
}

pub(crate) fn head_forward<T: Scalar>(
    w: &[T],
    b: &[T],
    features: Vec<T>,
    dropout: f64,
    rng: Option<&mut Rng>,
) -> (Vec<T>, HeadCache<T>) {
    let mask = match rng {
        Some(rng) if dropout > 0.0 => Some(dropout_mask(features.len(), dropout, rng)),
        _ => None,
    };
    let dropped = match &mask {
        Some(m) => features.iter().zip(m).map(|(&f, &k)| f * k).collect(),
        None => features.clone(),
    };
    let mut logits = vec![T::zero(); b.len()];
    affine(w, b, &dropped, &mut logits);
    (logits, HeadCache { features, dropped, mask })
}

/// Returns the gradient with respect to the pre-dropout features.
pub(crate) fn head_backward<T: Scalar>(
    w: &[T],
    cache: &HeadCache<T>,
    dlogits: &[T],
    dw: &mut [T],
    db: &mut [T],
) -> Vec<T> {
    let mut d = vec![T::zero(); cache.features.len()];
    affine_backward(w, &cache.dropped, dlogits, dw, db, Some(&mut d));
    if let Some(m) = &cache.mask {
        for (g, &k) in d.iter_mut().zip(m) {
            *g *= k;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn affine_by_hand() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 2];
        affine(&w, &[0.5, -1.0], &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [0.5 - 2.0, -1.0 - 2.0]);
    }

    #[test]
    fn sigmoid_is_symmetric_and_saturates_cleanly() {
        for x in [-30.0, -1.0, 0.0, 2.5, 800.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0f64).abs() < 1e-15);
        }
        assert_eq!(sigmoid(-800.0f64), 0.0);
    }

    #[test]
    fn dropout_keeps_expected_fraction() {
        let m: Vec<f64> = dropout_mask(20_000, 0.2, &mut seeded(1));
        let kept = m.iter().filter(|&&v| v > 0.0).count() as f64 / 20_000.0;
        assert!((kept - 0.8).abs() < 0.01);
        assert!(m.iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
    }
}
