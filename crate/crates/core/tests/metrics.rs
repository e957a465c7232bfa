use blocksig::channel::{RawSequencePair, SequenceMetadata};
use blocksig::metrics::*;
use blocksig::rng::seeded;
use blocksig::Matrix;
use proptest::prelude::*;
use rand::Rng as _;

/// Counting loop.
fn oracle_top1(pred: &[i64], labels: &[i64]) -> f64 {
    let mut hits = 0u64;
    for i in 0..labels.len() {
        if pred[i] == labels[i] {
            hits += 1;
        }
    }
    hits as f64 / labels.len() as f64
}

/// Two passes: mean, then mean squared deviation.
fn oracle_error_stats(pred: &[f64], labels: &[i64]) -> (f64, f64) {
    let n = labels.len() as f64;
    let mut total = 0.0;
    for i in 0..labels.len() {
        total += (pred[i] - labels[i] as f64).abs();
    }
    let mae = total / n;
    let mut sq = 0.0;
    for i in 0..labels.len() {
        let d = (pred[i] - labels[i] as f64).abs() - mae;
        sq += d * d;
    }
    (mae, (sq / n).sqrt())
}

#[test]
fn scores_match_loop_oracles_on_random_sets() {
    let mut rng = seeded(2024);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let k = rng.random_range(2..6i64);
        let labels: Vec<i64> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        let pred: Vec<i64> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        assert!((top1_accuracy(&pred, &labels).unwrap() - oracle_top1(&pred, &labels)).abs() < 1e-12);

        let values: Vec<f64> = labels.iter().map(|&l| l as f64 + rng.random_range(-4.0..4.0)).collect();
        let (mae, std) = instance_error_stats(&values, &labels).unwrap();
        let (omae, ostd) = oracle_error_stats(&values, &labels);
        assert!((mae - omae).abs() < 1e-12 && (std - ostd).abs() < 1e-12);

        let cm = confusion_matrix(&pred, &labels, k as usize).unwrap();
        assert_eq!(cm.total(), n as u64);
        assert!((cm.trace() as f64 / n as f64 - oracle_top1(&pred, &labels)).abs() < 1e-12);
    }
}

#[test]
fn perfect_predictor_gives_a_diagonal() {
    let labels = [1, 2, 3, 3, 2];
    let cm = confusion_matrix(&labels, &labels, 3).unwrap();
    assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
    let single = confusion_matrix(&[3], &[2], 3).unwrap();
    assert_eq!(single.counts[1][2], 1);
    assert_eq!(single.total(), 1);
}

fn pair(powers: Matrix<f64>, first_blocked: usize) -> RawSequencePair<f64> {
    let status = (0..powers.rows()).map(|i| u8::from(i >= first_blocked)).collect();
    RawSequencePair::new(powers, status, 12.0, SequenceMetadata::default()).unwrap()
}

#[test]
fn constant_corpus_has_zero_proximity_std() {
    let pairs: Vec<_> = (0..5).map(|k| pair(Matrix::filled(30, 3, 2.5), 18 + k)).collect();
    let stats = proximity_stats(&pairs, PROXIMITY_WINDOW).unwrap();
    assert_eq!(stats.used, 5);
    assert!(stats.std.as_slice().iter().all(|&s| s == 0.0));
    assert!(stats.mean.as_slice().iter().all(|&m| m == 2.5));
    let (near, far) = pre_blockage_std_contrast(&pairs[0], PROXIMITY_WINDOW, 5).unwrap();
    assert_eq!((near, far), (0.0, 0.0));
}

#[test]
fn proximity_stats_match_a_direct_computation() {
    let mut rng = seeded(7);
    let pairs: Vec<_> = (0..9)
        .map(|k| {
            let rows = 25 + k;
            let data = (0..rows * 2).map(|_| rng.random::<f64>()).collect();
            pair(Matrix::new(rows, 2, data).unwrap(), 17 + k)
        })
        .collect();
    let stats = proximity_stats(&pairs, 16).unwrap();
    for o in 1..=16 {
        for b in 0..2 {
            let vals: Vec<f64> = pairs.iter().map(|p| p.powers.get(p.first_blocked().unwrap() - o, b)).collect();
            let m = vals.iter().sum::<f64>() / 9.0;
            let s = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9.0).sqrt();
            assert!((stats.mean.get(o - 1, b) - m).abs() < 1e-12);
            assert!((stats.std.get(o - 1, b) - s).abs() < 1e-12);
        }
    }
}

#[test]
fn report_csv_has_one_row_per_horizon() {
    let entries = (1..=4)
        .map(|t_p| HorizonEntry::classification(t_p, &[0, 1, 1], &[0, 1, 0], &[0, 1]).unwrap())
        .collect();
    let report = MetricsReport { task: blocksig::pipeline::Task::Occurrence, model: "gru".into(), entries };
    report.validate().unwrap();
    assert_eq!(report.to_csv().lines().count(), 5);
}

proptest! {
    #[test]
    fn histogram_conserves_counts(data in prop::collection::vec(-50.0f64..50.0, 2..300), bins in 1usize..40) {
        prop_assume!(data.iter().any(|&v| v != data[0]));
        let m = Matrix::new(1, data.len(), data.clone()).unwrap();
        let h = power_histogram(&m, bins).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), data.len() as u64);
        prop_assert_eq!(h.edges.len(), bins + 1);
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(h.edges[0], lo);
        prop_assert!((h.edges[bins] - hi).abs() <= 1e-9 * hi.abs().max(1.0));
        prop_assert!(h.counts[0] >= 1 && h.counts[bins - 1] >= 1);
    }

    #[test]
    fn confusion_rows_sum_to_label_counts(
        pairs in prop::collection::vec((1i64..5, 1i64..5), 1..100),
    ) {
        let (pred, labels): (Vec<i64>, Vec<i64>) = pairs.into_iter().unzip();
        let cm = confusion_matrix(&pred, &labels, 4).unwrap();
        for c in 1..=4i64 {
            let row: u64 = cm.counts[c as usize - 1].iter().sum();
            prop_assert_eq!(row, labels.iter().filter(|&&l| l == c).count() as u64);
        }
        for row in cm.row_normalized() {
            let s: f64 = row.iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn accuracy_is_a_fraction(pairs in prop::collection::vec((0i64..3, 0i64..3), 1..100)) {
        let (pred, labels): (Vec<i64>, Vec<i64>) = pairs.into_iter().unzip();
        let a = top1_accuracy(&pred, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a, oracle_top1(&pred, &labels));
    }
}
