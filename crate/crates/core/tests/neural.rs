use blocksig::matrix::Matrix;
use blocksig::neural::*;
use blocksig::pipeline::{split, standardize, DataPoint, DevelopmentDataset, Label, Provenance, Task};
use blocksig::rng::{seeded, Rng};
use blocksig::Error;
use rand::Rng as _;

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<f64> {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

fn small_gru(head: Head, layers: usize) -> Architecture {
    Architecture::Gru(GruConfig { input_dim: 3, hidden_dim: 4, num_layers: layers, seq_len: 5, head, dropout: 0.3 })
}

fn small_cnn(head: Head) -> Architecture {
    Architecture::Cnn(CnnConfig {
        input_shape: (6, 9),
        stacks: vec![
            Stack { convs: vec![ConvSpec::new(1, 2, 3, 1), ConvSpec::new(2, 3, 3, 1)], pool: (2, 3) },
            Stack { convs: vec![ConvSpec::new(3, 2, 2, 0)], pool: (1, 1) },
        ],
        head,
        dropout: 0.3,
    })
}

/// Loss with a fixed dropout mask (the generator is re-seeded per call).
fn loss_at(params: &ModelParams<f64>, x: &Matrix<f64>, target: usize, mask_seed: u64) -> f64 {
    let mut rng = seeded(mask_seed);
    let (out, _) = forward(params, x, Mode::Train(&mut rng)).unwrap();
    match params.arch().head() {
        Head::Classifier { .. } => cross_entropy(&out, target).0,
        Head::Regressor => mse(out[0], target as f64),
    }
}

fn analytic(params: &ModelParams<f64>, x: &Matrix<f64>, target: usize, mask_seed: u64) -> Vec<f64> {
    let mut rng = seeded(mask_seed);
    let (out, cache) = forward(params, x, Mode::Train(&mut rng)).unwrap();
    let d = match params.arch().head() {
        Head::Classifier { .. } => cross_entropy_logit_grad(&out, target),
        Head::Regressor => vec![mse_grad(out[0], target as f64)],
    };
    backward(params, &cache, &d).unwrap()
}

/// Central differences (h = 1e-5) on `which`; returns the worst relative error.
fn worst_relative_error(arch: Architecture, seed: u64, which: Option<usize>) -> f64 {
    let mut rng = seeded(seed);
    let mut params = ModelParams::<f64>::init(arch.clone(), seed).unwrap();
    // Larger weights than the default init, so gates leave their linear range.
    params.update(|v| v.iter_mut().for_each(|p| *p *= 2.0));
    let (rows, cols) = arch.input_shape();
    let x = random_matrix(rows, cols, &mut rng);
    let target = 1;
    let g = analytic(&params, &x, target, seed);
    let idx: Vec<usize> = match which {
        None => (0..params.len()).collect(),
        Some(n) => (0..n).map(|_| rng.random_range(0..params.len())).collect(),
    };
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for i in idx {
        let mut plus = params.clone();
        plus.update(|v| v[i] += h);
        let mut minus = params.clone();
        minus.update(|v| v[i] -= h);
        let fd = (loss_at(&plus, &x, target, seed) - loss_at(&minus, &x, target, seed)) / (2.0 * h);
        let scale = fd.abs().max(g[i].abs());
        if scale > 1e-7 {
            worst = worst.max((fd - g[i]).abs() / scale);
        } else {
            assert!((fd - g[i]).abs() < 1e-9, "param {i}: fd {fd} vs {}", g[i]);
        }
    }
    worst
}

#[test]
fn gru_gradients_match_finite_differences() {
    for (seed, head, layers) in [
        (1, Head::Classifier { n_out: 3 }, 1),
        (2, Head::Regressor, 1),
        (3, Head::Classifier { n_out: 2 }, 2),
    ] {
        let e = worst_relative_error(small_gru(head, layers), seed, None);
        assert!(e < 1e-4, "seed {seed}: {e}");
    }
}

#[test]
fn cnn_gradients_match_finite_differences() {
    for (seed, head) in [(4, Head::Classifier { n_out: 2 }), (5, Head::Regressor)] {
        let e = worst_relative_error(small_cnn(head), seed, None);
        assert!(e < 1e-4, "seed {seed}: {e}");
    }
}

#[test]
fn outdoor_networks_gradients_on_sampled_parameters() {
    let cnn = Architecture::Cnn(CnnConfig::outdoor(Head::Classifier { n_out: 2 }));
    assert!(worst_relative_error(cnn, 6, Some(40)) < 1e-4);
    let gru = Architecture::Gru(GruConfig {
        input_dim: 54,
        hidden_dim: 20,
        num_layers: 1,
        seq_len: 16,
        head: Head::Classifier { n_out: 2 },
        dropout: 0.2,
    });
    assert!(worst_relative_error(gru, 7, Some(40)) < 1e-4);
}

#[test]
fn zero_loss_gradient_gives_zero_parameter_gradient() {
    let params = ModelParams::<f64>::init(small_cnn(Head::Classifier { n_out: 2 }), 1).unwrap();
    let x = random_matrix(6, 9, &mut seeded(1));
    let (_, cache) = forward(&params, &x, Mode::Eval).unwrap();
    assert!(backward(&params, &cache, &[0.0, 0.0]).unwrap().iter().all(|&g| g == 0.0));
}

#[test]
fn stale_cache_is_refused() {
    let mut params = ModelParams::<f64>::init(small_gru(Head::Regressor, 1), 1).unwrap();
    let x = random_matrix(5, 3, &mut seeded(1));
    let (_, cache) = forward(&params, &x, Mode::Eval).unwrap();
    params.update(|v| v[0] += 0.1);
    assert!(matches!(backward(&params, &cache, &[1.0]), Err(Error::StaleCache(_))));
}

#[test]
fn zero_network_is_uniform() {
    let arch = small_gru(Head::Classifier { n_out: 4 }, 1);
    let n = arch.param_count();
    let params = ModelParams::<f64>::from_values(arch, vec![0.0; n], 0).unwrap();
    let (out, _) = forward(&params, &Matrix::filled(5, 3, 0.0), Mode::Eval).unwrap();
    assert_eq!(out, vec![0.25; 4]);
}

#[test]
fn cnn_zero_input_gives_fc_bias() {
    let arch = Architecture::Cnn(CnnConfig::outdoor(Head::Classifier { n_out: 2 }));
    let mut values = ModelParams::<f64>::init(arch.clone(), 9).unwrap().values().to_vec();
    // Zero every conv bias; convolution of zeros then stays zero.
    let mut off = 0;
    for (cin, cout) in [(1, 4), (4, 4), (4, 8), (8, 16)] {
        off += cout * cin * 9;
        values[off..off + cout].iter_mut().for_each(|b| *b = 0.0);
        off += cout;
    }
    let n = values.len();
    values[n - 2] = 0.7;
    values[n - 1] = -0.4;
    let params = ModelParams::from_values(arch, values, 9).unwrap();
    let (_, cache) = forward(&params, &Matrix::filled(16, 54, 0.0), Mode::Eval).unwrap();
    assert_eq!(cache.logits(), &[0.7, -0.4]);
}

#[test]
fn scalar_gru_two_steps_by_hand() {
    let arch = Architecture::Gru(GruConfig { input_dim: 1, hidden_dim: 1, num_layers: 1, seq_len: 2, head: Head::Regressor, dropout: 0.0 });
    // W_i (r,z,n), W_h (r,z,n), b_i, b_h, FC w, FC b.
    let v = vec![0.5, -0.3, 0.8, 0.2, 0.4, -0.6, 0.1, 0.05, -0.2, 0.0, 0.1, 0.3, 1.5, -0.25];
    let params = ModelParams::from_values(arch, v, 0).unwrap();
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut h = 0.0;
    for x in [0.7, -1.1] {
        let r = sig(0.5 * x + 0.1 + 0.2 * h + 0.0);
        let z = sig(-0.3 * x + 0.05 + 0.4 * h + 0.1);
        let n = (0.8 * x - 0.2 + r * (-0.6 * h + 0.3)).tanh();
        h = (1.0 - z) * n + z * h;
    }
    let (out, _) = forward(&params, &Matrix::new(2, 1, vec![0.7, -1.1]).unwrap(), Mode::Eval).unwrap();
    assert!((out[0] - (1.5 * h - 0.25)).abs() < 1e-15);
}

#[test]
fn classifier_outputs_are_distributions_and_eval_is_repeatable() {
    let mut rng = seeded(3);
    for arch in [small_gru(Head::Classifier { n_out: 3 }, 2), small_cnn(Head::Classifier { n_out: 2 })] {
        let params = ModelParams::<f64>::init(arch.clone(), 11).unwrap();
        let (r, c) = arch.input_shape();
        for _ in 0..20 {
            let x = random_matrix(r, c, &mut rng);
            let (a, _) = forward(&params, &x, Mode::Eval).unwrap();
            let (b, _) = forward(&params, &x, Mode::Eval).unwrap();
            assert_eq!(a, b);
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn bad_inputs() {
    let params = ModelParams::<f64>::init(small_cnn(Head::Regressor), 0).unwrap();
    assert!(matches!(forward(&params, &Matrix::filled(6, 8, 1.0), Mode::Eval), Err(Error::Shape(_))));
    let mut x = Matrix::filled(6, 9, 1.0);
    x.set(0, 0, f64::NAN);
    assert!(forward(&params, &x, Mode::Eval).is_err());
    assert!(gru_forward(&params, &Matrix::filled(6, 9, 1.0), Mode::Eval).is_err());
    assert!(cnn_forward(&params, &Matrix::filled(6, 9, 1.0), Mode::Eval).is_ok());
}

/// Two classes whose sign of mean power differs.
fn toy_dataset(n: usize, rows: usize, cols: usize, seed: u64) -> DevelopmentDataset<f64> {
    let mut rng = seeded(seed);
    let points = (0..n)
        .map(|i| {
            let class = (i % 2) as u8;
            let shift = if class == 1 { 0.6 } else { -0.6 };
            let obs = Matrix::new(rows, cols, (0..rows * cols).map(|_| shift + rng.random_range(-1.0..1.0)).collect()).unwrap();
            DataPoint { observation: obs, label: Label::Occurrence(class), horizon: 1, source: Provenance { sequence: i as u64, start: 0 } }
        })
        .collect();
    let ds = DevelopmentDataset::new(Task::Occurrence, points, vec![0, 1]).unwrap();
    standardize(split(ds, 0.7, seed).unwrap()).unwrap()
}

#[test]
fn gru_learns_a_separable_toy() {
    let ds = toy_dataset(200, 5, 3, 1);
    let arch = small_gru(Head::Classifier { n_out: 2 }, 1);
    let mut cfg = TrainConfig::new(200, 4);
    cfg.learning_rate = 1e-2;
    let out = train(&ds, &arch, &cfg).unwrap();
    let train_idx = ds.indices(blocksig::pipeline::Split::Train);
    let (_, acc) = evaluate(&out.params, &ds, &train_idx).unwrap();
    assert!(acc >= 0.99, "train accuracy {acc}");
    assert!(out.history.len() == 200 && out.best_epoch >= 1);
}

#[test]
fn training_is_bit_reproducible() {
    let ds = toy_dataset(60, 6, 9, 2);
    let arch = small_cnn(Head::Classifier { n_out: 2 });
    let cfg = TrainConfig::new(5, 8);
    let a = train(&ds, &arch, &cfg).unwrap();
    let b = train(&ds, &arch, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.params.values(), b.params.values());
    let c = train(&ds, &arch, &TrainConfig::new(5, 9)).unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn training_rejects_bad_configs() {
    let ds = toy_dataset(40, 5, 3, 3);
    let arch = small_gru(Head::Classifier { n_out: 2 }, 1);
    assert!(train(&ds, &arch, &TrainConfig::new(0, 1)).is_err());
    assert!(train(&ds, &small_gru(Head::Regressor, 1), &TrainConfig::new(1, 1)).is_err());
    // A regressor whose first Adam step is enormous overflows the MSE.
    let mut reg = ds.clone();
    reg.task = Task::Instance;
    reg.classes.clear();
    for p in &mut reg.points {
        p.label = Label::Instance(1 + p.label.value() as u32);
    }
    let mut cfg = TrainConfig::new(2, 1);
    cfg.learning_rate = 1e300;
    cfg.batch_size = 4;
    let err = train(&reg, &small_gru(Head::Regressor, 1), &cfg).unwrap_err();
    assert!(matches!(&err, Error::Numeric(m) if m.contains("lr") && m.contains("epoch 1")), "{err}");
}

#[test]
fn batch_predict_equals_pointwise() {
    let ds = toy_dataset(30, 5, 3, 4);
    let params = ModelParams::<f64>::init(small_gru(Head::Classifier { n_out: 2 }, 1), 2).unwrap();
    let Predictions::Labels(all) = predict(&params, &ds).unwrap() else { panic!() };
    for (i, &l) in all.iter().enumerate() {
        let (out, _) = forward(&params, &ds.points[i].observation, Mode::Eval).unwrap();
        assert_eq!(l, ds.classes[argmax(&out)]);
    }
}

/// Plain gradient descent on one fixed batch, halving the step until the
/// loss does not increase.
#[test]
fn fixed_batch_descent() {
    let mut rng = seeded(6);
    for arch in [small_gru(Head::Classifier { n_out: 2 }, 1), small_cnn(Head::Regressor)] {
        let (r, c) = arch.input_shape();
        let xs: Vec<Matrix<f64>> = (0..8).map(|_| random_matrix(r, c, &mut rng)).collect();
        let ys: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let batch_loss = |p: &ModelParams<f64>| -> (f64, Vec<f64>) {
            let mut g = vec![0.0; p.len()];
            let mut l = 0.0;
            for (x, &y) in xs.iter().zip(&ys) {
                let (out, cache) = forward(p, x, Mode::Eval).unwrap();
                let d = match p.arch().head() {
                    Head::Classifier { .. } => {
                        l += cross_entropy(&out, y).0;
                        cross_entropy_logit_grad(&out, y)
                    }
                    Head::Regressor => {
                        l += mse(out[0], y as f64);
                        vec![mse_grad(out[0], y as f64)]
                    }
                };
                for (a, b) in g.iter_mut().zip(backward(p, &cache, &d).unwrap()) {
                    *a += b;
                }
            }
            (l, g)
        };
        let mut params = ModelParams::<f64>::init(arch, 3).unwrap();
        let (mut loss, mut grad) = batch_loss(&params);
        for _ in 0..10 {
            let mut lr = 0.5;
            loop {
                let mut next = params.clone();
                next.update(|v| v.iter_mut().zip(&grad).for_each(|(p, g)| *p -= lr * g));
                let (l, g) = batch_loss(&next);
                if l <= loss {
                    assert!(l <= loss);
                    params = next;
                    loss = l;
                    grad = g;
                    break;
                }
                lr /= 2.0;
                assert!(lr > 1e-12, "no descent direction");
            }
        }
    }
}
