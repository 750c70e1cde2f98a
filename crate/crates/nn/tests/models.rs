use daem_nn::loss::Loss;
use daem_nn::params::Layout;
use daem_nn::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_example(
    rng: &mut ChaCha8Rng,
    obs: usize,
    p: usize,
    out: usize,
    softmax: bool,
) -> Example {
    let mut label: Vec<f64> = (0..out).map(|_| rng.random_range(-0.9..0.9)).collect();
    if softmax {
        label.iter_mut().for_each(|v| *v = v.abs() + 0.05);
        let s: f64 = label.iter().sum();
        label.iter_mut().for_each(|v| *v /= s);
    }
    Example {
        g: rng.random_range(0.0..2.0),
        observable: (0..obs).map(|_| rng.random_range(-1.0..1.0)).collect(),
        p: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
        label,
    }
}

fn mlp(head: Head, out: usize) -> Mlp {
    Mlp::new(MlpSpec {
        observable_dim: 5,
        p_dim: 6,
        embed: 8,
        hidden: vec![12, 10],
        out_dim: out,
        head,
    })
    .unwrap()
}

/// `y = w·p + b`, used to validate the checker itself.
struct Linear {
    layout: Layout,
    n: usize,
}

impl Model for Linear {
    fn layout(&self) -> &Layout {
        &self.layout
    }
    fn loss(&self) -> Loss {
        Loss::L2
    }
    fn check_example(&self, _: &Example) -> daem_nn::Result<()> {
        Ok(())
    }
    fn forward(&self, params: &[f64], batch: &[&Example]) -> Vec<Vec<f64>> {
        batch
            .iter()
            .map(|ex| {
                vec![ex.p.iter().zip(params).map(|(a, b)| a * b).sum::<f64>() + params[self.n]]
            })
            .collect()
    }
    fn loss_and_grad(&self, params: &[f64], batch: &[&Example]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.n + 1];
        let mut total = 0.0;
        for (ex, y) in batch.iter().zip(self.forward(params, batch)) {
            let r = y[0] - ex.label[0];
            total += r * r;
            for i in 0..self.n {
                grad[i] += 2.0 * r * ex.p[i] / batch.len() as f64;
            }
            grad[self.n] += 2.0 * r / batch.len() as f64;
        }
        (total / batch.len() as f64, grad)
    }
}

#[test]
fn grad_check_is_exact_for_linear_model() {
    let mut layout = Layout::default();
    layout.add("w", vec![4], 4);
    layout.add("b", vec![1], 4);
    let model = Linear { layout, n: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let exs: Vec<Example> = (0..3)
        .map(|_| random_example(&mut rng, 1, 4, 1, false))
        .collect();
    let refs: Vec<&Example> = exs.iter().collect();
    let params = Params::init(model.layout(), 1);
    let r = grad_check(&model, &params.values, &refs, 200, 2);
    assert!(r.max_rel_error < 1e-9, "{r:?}");
}

#[test]
fn mlp_heads_pass_grad_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (head, out) in [(Head::ScalarTanh, 1), (Head::Softmax, 4)] {
        let model = mlp(head, out);
        let exs: Vec<Example> = (0..5)
            .map(|_| random_example(&mut rng, 5, 6, out, head == Head::Softmax))
            .collect();
        let refs: Vec<&Example> = exs.iter().collect();
        let params = Params::init(model.layout(), 7);
        let r = grad_check(&model, &params.values, &refs, 200, 11);
        assert!(r.checked == 200 && r.max_rel_error < 1e-4, "{head:?} {r:?}");
    }
}

#[test]
fn conv_passes_grad_check() {
    let model = UNet::new(ConvSpec {
        in_grids: 2,
        size: 8,
        widths: [2, 3, 3, 4],
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let exs: Vec<Example> = (0..2)
        .map(|_| random_example(&mut rng, 1, 128, 64, false))
        .collect();
    let refs: Vec<&Example> = exs.iter().collect();
    let params = Params::init(model.layout(), 9);
    let r = grad_check(&model, &params.values, &refs, 200, 13);
    assert!(r.max_rel_error < 1e-4, "{r:?}");
}

#[test]
fn zero_weights_give_neutral_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ex = random_example(&mut rng, 5, 6, 4, true);
    let scalar = mlp(Head::ScalarTanh, 1);
    assert_eq!(
        scalar.forward(&Params::zeros(scalar.layout()).values, &[&ex])[0],
        vec![0.0]
    );
    let dist = mlp(Head::Softmax, 4);
    for v in &dist.forward(&Params::zeros(dist.layout()).values, &[&ex])[0] {
        assert!((v - 0.25).abs() < 1e-15);
    }
}

#[test]
fn permuting_levels_changes_prediction() {
    let model = mlp(Head::ScalarTanh, 1);
    let params = Params::init(model.layout(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ex = random_example(&mut rng, 5, 6, 1, false);
    let mut swapped = ex.clone();
    swapped.p.swap(0, 5);
    let a = model.forward(&params.values, &[&ex]);
    let b = model.forward(&params.values, &[&swapped]);
    assert_ne!(a, b);
}

fn identity_task(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut ex = random_example(&mut rng, 5, 6, 1, false);
            ex.label = vec![ex.p[0] * 0.9];
            ex
        })
        .collect()
}

#[test]
fn identity_task_is_learned_and_deterministic() {
    let model = mlp(Head::ScalarTanh, 1);
    let train_set = identity_task(100, 1);
    let val_set = identity_task(50, 2);
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 16,
        adam: AdamConfig {
            learning_rate: 3e-3,
            ..Default::default()
        },
        seed: 5,
    };
    let out = train(
        &model,
        &train_set,
        &val_set,
        &cfg,
        Params::init(model.layout(), 0),
    )
    .unwrap();
    assert!(out.best_val_loss() < 1e-3, "{}", out.best_val_loss());
    assert!(out.history.last().unwrap().train_loss < out.history[0].train_loss);
    let again = train(
        &model,
        &train_set,
        &val_set,
        &cfg,
        Params::init(model.layout(), 0),
    )
    .unwrap();
    assert_eq!(out.params, again.params);
    assert_eq!(out.history, again.history);

    // mitigation reproduces the first row
    let preds = mitigate(&model, &out.params.values, &val_set);
    let mae: f64 = preds
        .iter()
        .zip(&val_set)
        .map(|(p, ex)| (p[0] - 0.9 * ex.p[0]).abs())
        .sum::<f64>()
        / 50.0;
    assert!(mae < 0.03, "{mae}");
    // batched equals one by one
    for (ex, p) in val_set.iter().zip(&preds).take(20) {
        assert_eq!(&model.forward(&out.params.values, &[ex])[0], p);
    }

    // shuffled labels cannot be fit as well
    let mut shuffled = train_set.clone();
    let labels: Vec<Vec<f64>> = shuffled.iter().map(|e| e.label.clone()).collect();
    for (i, ex) in shuffled.iter_mut().enumerate() {
        ex.label = labels[(i * 37 + 11) % labels.len()].clone();
    }
    let ctrl = train(
        &model,
        &shuffled,
        &val_set,
        &cfg,
        Params::init(model.layout(), 0),
    )
    .unwrap();
    assert!(ctrl.best_val_loss() > out.best_val_loss());
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let spec = MlpSpec {
        observable_dim: 5,
        p_dim: 6,
        embed: 8,
        hidden: vec![12],
        out_dim: 1,
        head: Head::ScalarTanh,
    };
    let arch = Architecture::Mlp(spec);
    let model = arch.build().unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 8,
        adam: AdamConfig::default(),
        seed: 1,
    };
    let data = identity_task(20, 3);
    let out = train(
        model.as_ref(),
        &data,
        &[],
        &cfg,
        Params::init(model.layout(), 0),
    )
    .unwrap();
    let ck = Checkpoint::new(arch, cfg, out.params.clone(), out.adam.clone());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let refs: Vec<&Example> = data.iter().collect();
    assert_eq!(
        model.forward(&back.params.values, &refs),
        model.forward(&out.params.values, &refs)
    );
    assert!(back.require_hash("deadbeef").is_err());

    // tampering with the architecture breaks the hash
    let mut text: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    text["architecture"]["embed"] = serde_json::json!(9);
    std::fs::write(&path, serde_json::to_vec(&text).unwrap()).unwrap();
    assert!(Checkpoint::load(&path).is_err());
}

#[test]
fn nan_loss_aborts() {
    let model = mlp(Head::ScalarTanh, 1);
    let mut data = identity_task(4, 1);
    data[0].p[0] = f64::NAN;
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        adam: AdamConfig::default(),
        seed: 0,
    };
    assert!(matches!(
        train(&model, &data, &[], &cfg, Params::init(model.layout(), 0)),
        Err(NnError::NonFinite(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn softmax_head_outputs_distributions(seed in 0u64..1000) {
        let model = mlp(Head::Softmax, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = random_example(&mut rng, 5, 6, 4, true);
        let params = Params::init(model.layout(), seed);
        let out = &model.forward(&params.values, &[&ex])[0];
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn scalar_head_is_bounded_and_deterministic(seed in 0u64..1000) {
        let model = mlp(Head::ScalarTanh, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = random_example(&mut rng, 5, 6, 1, false);
        let params = Params::init(model.layout(), seed);
        let a = model.forward(&params.values, &[&ex]);
        prop_assert!(a[0][0].abs() < 1.0);
        prop_assert_eq!(a, model.forward(&params.values, &[&ex]));
    }

    #[test]
    fn losses_are_non_negative(a in proptest::collection::vec(0.01f64..1.0, 3), b in proptest::collection::vec(0.01f64..1.0, 3)) {
        let na: f64 = a.iter().sum();
        let nb: f64 = b.iter().sum();
        let pa: Vec<f64> = a.iter().map(|v| v / na).collect();
        let pb: Vec<f64> = b.iter().map(|v| v / nb).collect();
        for l in [Loss::L2, Loss::L1, Loss::Kl] {
            prop_assert!(l.value(&pa, &pb) >= -1e-15);
        }
    }
}
