use crate::scalar::Scalar;

/// Smallest probability fed to the logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Numerically stable softmax (shifted by the maximum logit).
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−ln p̂[target]`. The flag is set when the probability had to be clamped
/// at [`PROBABILITY_FLOOR`].
pub fn cross_entropy<T: Scalar>(probabilities: &[T], target: usize) -> (T, bool) {
    let p = probabilities[target];
    let floor = T::of(PROBABILITY_FLOOR);
    if p < floor {
        (-floor.ln(), true)
    } else {
        (-p.ln(), false)
    }
}

/// Gradient of softmax followed by cross-entropy with respect to the logits.
pub fn cross_entropy_logit_grad<T: Scalar>(probabilities: &[T], target: usize) -> Vec<T> {
    probabilities
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == target { p - T::one() } else { p })
        .collect()
}

pub fn mse<T: Scalar>(predicted: T, target: T) -> T {
    (target - predicted) * (target - predicted)
}

pub fn mse_grad<T: Scalar>(predicted: T, target: T) -> T {
    T::of(2.0) * (predicted - target)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn ce_examples() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0), (0.0, false));
        assert!((cross_entropy(&[0.5, 0.5], 1).0 - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, clamped) = cross_entropy(&[1.0, 0.0], 1);
        assert!(clamped);
        assert!((l - 1e-12f64.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn ce_matches_direct_formula() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let t = rng.random_range(0..4);
            // −Σ_k onehot_k ln p_k
            let want: f64 = -(0..4).map(|k| if k == t { p[k].ln() } else { 0.0 }).sum::<f64>();
            assert!((cross_entropy(&p, t).0 - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(3.0, 3.0), 0.0);
        assert_eq!(mse(1.0, 4.0), 9.0);
        assert_eq!(mse_grad(1.0, 4.0), -6.0);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.9, 0.1]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn ce_grad_closed_form_against_differences() {
        let logits = [0.3f64, -1.2, 2.0];
        let p = softmax(&logits);
        let g = cross_entropy_logit_grad(&p, 2);
        for k in 0..3 {
            let mut a = logits;
            let mut b = logits;
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (cross_entropy(&softmax(&a), 2).0 - cross_entropy(&softmax(&b), 2).0) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(logits in prop::collection::vec(-50.0f64..50.0, 2..8), shift in -100.0f64..100.0) {
            let p = softmax(&logits);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            prop_assert_eq!(argmax(&softmax(&shifted)), argmax(&p));
        }
    }
}
