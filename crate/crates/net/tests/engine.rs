//! Layer kernels against naive oracles, optimiser behaviour and training
//! sanity on small problems.

use doa_core::array::{CovarianceInput, GridSpec, UlaGeometry};
use doa_net::dataset::{build_fixed_k_dataset, Dataset, Example, KPolicy, Provenance};
use doa_net::layers::*;
use doa_net::network::{apply_running_stats, batch_tensor, loss_and_gradients};
use doa_net::train::evaluate_loss;
use doa_net::{adam_step, predict_topk, train, AdamState, ModelParams, NetError, NetworkSpec, Tensor, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn convolution_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (b, h, w, c) = (rng.random_range(1..3), rng.random_range(3..8), rng.random_range(3..8), rng.random_range(1..4));
        let kernel = rng.random_range(1..=3usize.min(h).min(w));
        let stride = rng.random_range(1..3);
        let filters = rng.random_range(1..5);
        let x = random(b * h * w * c, rng.random());
        let k = random(filters * kernel * kernel * c, rng.random());
        let bias = random(filters, rng.random());
        let y = conv2d_forward(&Tensor::new(vec![b, h, w, c], x.clone()).unwrap(), &k, &bias, kernel, stride).unwrap();
        let (ho, wo) = ((h - kernel) / stride + 1, (w - kernel) / stride + 1);
        assert_eq!(y.shape(), &[b, ho, wo, filters]);
        for bi in 0..b {
            for m in 0..ho {
                for n in 0..wo {
                    for q in 0..filters {
                        let mut s = bias[q];
                        for i in 0..kernel {
                            for j in 0..kernel {
                                for ch in 0..c {
                                    s += k[((q * kernel + i) * kernel + j) * c + ch]
                                        * x[((bi * h + m * stride + i) * w + n * stride + j) * c + ch];
                                }
                            }
                        }
                        let got = y.values()[((bi * ho + m) * wo + n) * filters + q];
                        assert!((got - s).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn batchnorm_running_statistics_match_batch_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let means = [3.0, -1.0, 0.5];
    let stds = [2.0, 0.5, 1.0];
    let mut draw = |rows: usize| {
        let v: Vec<f64> = (0..rows * 3)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                means[i % 3] + stds[i % 3] * z
            })
            .collect();
        Tensor::new(vec![rows, 3], v).unwrap()
    };
    let gain = [1.5, 0.8, 1.0];
    let shift = [0.2, 0.0, -0.3];
    let cfg = BatchNormConfig::default();
    let mut stats = RunningStats::new(3);
    for _ in 0..200 {
        batchnorm_forward(&draw(32), &gain, &shift, Mode::Train, &mut stats, cfg).unwrap();
    }
    let x = draw(4096);
    let (yt, _) = batchnorm_forward(&x, &gain, &shift, Mode::Train, &mut stats.clone(), cfg).unwrap();
    let (ye, _) = batchnorm_forward(&x, &gain, &shift, Mode::Eval, &mut stats, cfg).unwrap();
    let diff: f64 = yt.values().iter().zip(ye.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = yt.values().iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(diff / norm < 0.05, "relative difference {}", diff / norm);
}

fn tiny_spec() -> NetworkSpec {
    NetworkSpec::standard(6, 7, 8, 1, [32, 32, 32])
}

#[test]
fn adam_zero_and_constant_gradients() {
    let spec = tiny_spec();
    let start = ModelParams::<f64>::init(&spec, 3).unwrap();
    let mut p = start.clone();
    let mut state = AdamState::new(&p, 1e-3);
    let zero = p.zeros_like();
    for _ in 0..5 {
        adam_step(&mut state, &mut p, &zero).unwrap();
    }
    assert_eq!(p, start);

    // A constant gradient moves every weight by lr per step (bias-corrected).
    let mut g = p.zeros_like();
    for b in g.trainable_mut() {
        b.iter_mut().for_each(|v| *v = -0.37);
    }
    let mut p = start.clone();
    let mut state = AdamState::new(&p, 1e-3);
    for _ in 0..10 {
        adam_step(&mut state, &mut p, &g).unwrap();
    }
    for (a, b) in p.trainable().iter().zip(start.trainable()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y - 10.0 * 1e-3).abs() < 1e-9);
        }
    }
    // Running statistics are not optimised.
    for (a, b) in p.layers.iter().zip(&start.layers) {
        if let (LayerParamsRef::Bn(ra), LayerParamsRef::Bn(rb)) = (bn(a), bn(b)) {
            assert_eq!(ra, rb);
        }
    }
}

enum LayerParamsRef<'a> {
    Bn(&'a RunningStats<f64>),
    Other,
}

fn bn(l: &doa_net::LayerParams<f64>) -> LayerParamsRef<'_> {
    match l {
        doa_net::LayerParams::BatchNorm { running, .. } => LayerParamsRef::Bn(running),
        _ => LayerParamsRef::Other,
    }
}

#[test]
fn adam_descends_a_quadratic_bowl() {
    let spec = tiny_spec();
    let mut p = ModelParams::<f64>::init(&spec, 5).unwrap();
    let target = ModelParams::<f64>::init(&spec, 6).unwrap();
    let dist = |p: &ModelParams<f64>| -> f64 {
        p.trainable()
            .iter()
            .zip(target.trainable())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)))
            .sum()
    };
    let initial = dist(&p);
    let mut state = AdamState::new(&p, 0.05);
    for _ in 0..600 {
        let mut g = p.zeros_like();
        for ((gb, pb), tb) in g.trainable_mut().into_iter().zip(p.trainable()).zip(target.trainable()) {
            for ((gi, pi), ti) in gb.iter_mut().zip(pb.iter()).zip(tb.iter()) {
                *gi = 2.0 * (pi - ti);
            }
        }
        adam_step(&mut state, &mut p, &g).unwrap();
    }
    assert!(dist(&p) < 1e-4 * initial, "{} -> {}", initial, dist(&p));
}

fn small_problem() -> (GridSpec, UlaGeometry, Dataset) {
    let grid = GridSpec::new(3, 20.0).unwrap();
    let geom = UlaGeometry::half_wavelength(6).unwrap();
    let data = build_fixed_k_dataset(&grid, &geom, 2, &[10.0]).unwrap();
    assert_eq!(data.len(), 21);
    (grid, geom, data)
}

#[test]
fn one_step_reduces_the_loss() {
    let (_, _, data) = small_problem();
    let spec = tiny_spec();
    let mut params = ModelParams::<f64>::init(&spec, 11).unwrap();
    let ex: Vec<&Example> = data.examples.iter().take(20).collect();
    let inputs: Vec<&CovarianceInput> = ex.iter().map(|e| &e.input).collect();
    let x = batch_tensor::<f64>(&inputs).unwrap();
    let z: Vec<f64> = ex.iter().flat_map(|e| e.label.as_f64()).collect();
    let run = |p: &ModelParams<f64>| loss_and_gradients(&spec, p, &x, &z, Mode::Train, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let (before, grads, pass) = run(&params);
    let mut state = AdamState::new(&params, 1e-4);
    adam_step(&mut state, &mut params, &grads).unwrap();
    apply_running_stats(&mut params, &pass);
    let (after, _, _) = run(&params);
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn desk_profile_overfits_ten_examples() {
    let grid = GridSpec::new(30, 1.0).unwrap();
    let geom = UlaGeometry::half_wavelength(8).unwrap();
    let mut data = build_fixed_k_dataset(&grid, &geom, 2, &[-10.0]).unwrap();
    let step = data.len() / 10;
    data.examples = data.examples.into_iter().step_by(step).take(10).collect();
    let spec = NetworkSpec::small(8, 30);
    let config = TrainConfig {
        batch_size: 5,
        epochs: 200,
        initial_lr: 1e-3,
        lr_halving_period: 100,
        validation_fraction: 0.0,
        seed: 2,
    };
    let refs: Vec<&Example> = data.examples.iter().collect();
    let initial = evaluate_loss(&spec, &ModelParams::<f64>::init(&spec, config.seed).unwrap(), &refs).unwrap();
    let (params, history) = train::<f64>(&spec, &data, &config).unwrap();
    let last = evaluate_loss(&spec, &params, &refs).unwrap();
    assert_eq!(history.train_loss.len(), 200);
    assert_eq!(history.learning_rate.len(), 200);
    assert!(history.validation_loss.is_empty());
    assert!(last < 0.01 * initial, "loss {initial} -> {last}");
    for ex in &data.examples {
        let est = predict_topk(&spec, &params, &grid, &ex.input, 2).unwrap();
        let truth: Vec<f64> = ex.label.ones().map(|i| grid.angle(i)).collect();
        assert_eq!(est.angles_deg(), truth.as_slice());
    }
}

#[test]
fn training_is_deterministic() {
    let (_, _, data) = small_problem();
    let spec = tiny_spec();
    let config = TrainConfig { epochs: 3, batch_size: 4, seed: 9, ..TrainConfig::default() };
    let (a, ha) = train::<f64>(&spec, &data, &config).unwrap();
    let (b, hb) = train::<f64>(&spec, &data, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_eq!(ha.validation_loss.len(), 3);
    let (c, _) = train::<f64>(&spec, &data, &TrainConfig { seed: 10, ..config }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn non_finite_inputs_abort_training() {
    let (_, _, mut data) = small_problem();
    let mut v = data.examples[0].input.values().to_vec();
    v[0] = f64::NAN;
    for e in data.examples.iter_mut() {
        e.input = CovarianceInput::from_values(6, v.clone()).unwrap();
    }
    let config = TrainConfig { epochs: 1, batch_size: 4, ..TrainConfig::default() };
    let r = train::<f64>(&tiny_spec(), &data, &config);
    assert!(matches!(r, Err(NetError::Diverged(_))), "{:?}", r.err());
}

#[test]
fn mismatched_dataset_is_rejected() {
    let (_, _, data) = small_problem();
    let wrong = NetworkSpec::standard(6, 9, 8, 1, [32, 32, 32]);
    assert!(train::<f64>(&wrong, &data, &TrainConfig::default()).is_err());
    let bad = Dataset {
        examples: data.examples[..1].to_vec(),
        provenance: Provenance { k_policy: KPolicy::Fixed(2), ..data.provenance.clone() },
    };
    assert!(train::<f64>(&tiny_spec(), &bad, &TrainConfig::default()).is_err());
}

#[test]
fn single_precision_forward_tracks_double() {
    let (_, _, data) = small_problem();
    let spec = tiny_spec();
    let p64 = ModelParams::<f64>::init(&spec, 4).unwrap();
    let p32 = ModelParams {
        layers: p64
            .layers
            .iter()
            .map(|l| match l {
                doa_net::LayerParams::None => doa_net::LayerParams::None,
                doa_net::LayerParams::Conv { kernels, biases } => doa_net::LayerParams::Conv {
                    kernels: kernels.iter().map(|&v| v as f32).collect(),
                    biases: biases.iter().map(|&v| v as f32).collect(),
                },
                doa_net::LayerParams::Dense { weights, biases } => doa_net::LayerParams::Dense {
                    weights: weights.iter().map(|&v| v as f32).collect(),
                    biases: biases.iter().map(|&v| v as f32).collect(),
                },
                doa_net::LayerParams::BatchNorm { gain, shift, running } => doa_net::LayerParams::BatchNorm {
                    gain: gain.iter().map(|&v| v as f32).collect(),
                    shift: shift.iter().map(|&v| v as f32).collect(),
                    running: RunningStats {
                        mean: running.mean.iter().map(|&v| v as f32).collect(),
                        var: running.var.iter().map(|&v| v as f32).collect(),
                    },
                },
            })
            .collect(),
    };
    let a = doa_net::forward(&spec, &p64, &data.examples[0].input).unwrap();
    let b = doa_net::forward(&spec, &p32, &data.examples[0].input).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - f64::from(*y)).abs() < 1e-4);
    }
}
