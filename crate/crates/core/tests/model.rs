use gesture_autograd::gradcheck::{check_graph, check_parameters, check_smooth_instances};
use gesture_autograd::{Graph, Mode, Tensor};
use gesture_core::annotation::Stream;
use gesture_core::model::*;
use gesture_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn bundle(base: usize, window: usize, seed: u64) -> ModelBundle {
    ModelBundle::new(
        GeneratorConfig { base_channels: base },
        DiscriminatorConfig { base_channels: base, window_length: window },
        "subject",
        seed,
    )
    .unwrap()
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

#[test]
fn generator_shapes_for_various_lengths() {
    let mut m = bundle(4, 64, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (n, t) in [(1, 64), (2, 100), (1, 128), (3, 8), (1, 13)] {
        let mut g = Graph::new();
        let x = g.constant(random(&mut rng, &[n, 28, t]));
        let out = m.generator.forward(&mut g, x, Mode::Train).unwrap();
        assert_eq!(g.shape(out.face), [n, 64, t]);
        assert_eq!(g.shape(out.body), [n, 42, t]);
        assert_eq!(g.shape(out.hand), [n, 126, t]);
    }
}

#[test]
fn generator_rejects_bad_inputs() {
    let mut m = bundle(2, 64, 1);
    let mut g = Graph::new();
    let x = g.constant(Tensor::zeros(&[1, 27, 64]));
    assert!(matches!(m.generator.forward(&mut g, x, Mode::Train), Err(Error::Autograd(_))));
    let x = g.constant(Tensor::zeros(&[2, 28, 7]));
    assert!(m.generator.forward(&mut g, x, Mode::Train).is_err());
    let x = g.constant(Tensor::zeros(&[28, 64]));
    assert!(m.generator.forward(&mut g, x, Mode::Train).is_err());
}

#[test]
fn eval_mode_is_deterministic_and_needs_statistics() {
    let mut m = bundle(4, 64, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let input = random(&mut rng, &[2, 28, 64]);
    let mut g = Graph::new();
    let x = g.constant(input.clone());
    assert!(m.generator.forward(&mut g, x, Mode::Eval).is_err());
    m.generator.forward(&mut g, x, Mode::Train).unwrap();
    let run = |m: &mut ModelBundle| {
        let mut g = Graph::new();
        let x = g.constant(input.clone());
        let out = m.generator.forward(&mut g, x, Mode::Eval).unwrap();
        g.value(out.hand).clone()
    };
    assert_eq!(run(&mut m), run(&mut m));
}

#[test]
fn encoder_is_shared_and_every_head_is_reachable() {
    let mut m = bundle(2, 64, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut g = Graph::new();
    let x = g.constant(random(&mut rng, &[2, 28, 16]));
    let out = m.generator.forward(&mut g, x, Mode::Train).unwrap();
    let mut loss = None;
    for s in Stream::ALL {
        let v = g.sum(out.get(s)).unwrap();
        let zero = g_zero(&mut g, out.get(s));
        let sq = g.l2_loss(out.get(s), zero).unwrap();
        let v = g.add(v, sq).unwrap();
        loss = Some(match loss {
            None => v,
            Some(l) => g.add(l, v).unwrap(),
        });
    }
    let grads = g.backward(loss.unwrap()).unwrap();
    m.generator.store.accumulate(&grads);
    for p in m.generator.store.params() {
        let grad = p.grad.as_ref().unwrap_or_else(|| panic!("{} disconnected", p.name));
        assert!(grad.iter().any(|v| *v != 0.0), "{} has an all-zero gradient", p.name);
    }
}

fn g_zero(g: &mut Graph, like: gesture_autograd::Var) -> gesture_autograd::Var {
    let shape = g.shape(like).to_vec();
    g.constant(Tensor::zeros(&shape))
}

#[test]
fn generator_parameter_naming() {
    let m = bundle(2, 64, 1);
    let names: Vec<&str> = m.generator.store.params().iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("gen.enc")).count(), 8 * 4);
    for s in Stream::ALL {
        let prefix = Generator::head_prefix(s);
        assert_eq!(names.iter().filter(|n| n.starts_with(&prefix)).count(), 7 * 4 + 2);
    }
    assert_eq!(m.generator.store.batchnorms().len(), 8 + 3 * 7);
    assert_eq!(m.discriminator.store.batchnorms().len(), 6);
}

#[test]
fn discriminator_contract() {
    assert_eq!(DISCRIMINATOR_INPUT_CHANNELS, 196);
    let mut m = bundle(4, 64, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut g = Graph::new();
    let f = g.constant(random(&mut rng, &[3, 28, 64]));
    let b = g.constant(random(&mut rng, &[3, 42, 64]));
    let h = g.constant(random(&mut rng, &[3, 126, 64]));
    let p = m.discriminator.forward(&mut g, f, b, h, Mode::Train).unwrap();
    assert_eq!(g.shape(p), [3]);
    assert!(g.value(p).data().iter().all(|&v| v > 0.0 && v < 1.0));

    let face = g.constant(random(&mut rng, &[3, 64, 64]));
    assert!(matches!(m.discriminator.forward(&mut g, f, face, h, Mode::Train), Err(Error::Contract(_))));
    let f2 = g.constant(random(&mut rng, &[3, 28, 32]));
    let b2 = g.constant(random(&mut rng, &[3, 42, 32]));
    let h2 = g.constant(random(&mut rng, &[3, 126, 32]));
    assert!(matches!(m.discriminator.forward(&mut g, f2, b2, h2, Mode::Train), Err(Error::Autograd(_))));
}

#[test]
fn discriminator_window_lengths() {
    for (l, pools, fin) in [(16, 2, 4), (32, 3, 4), (64, 3, 8)] {
        let c = DiscriminatorConfig { base_channels: 2, window_length: l };
        assert_eq!(c.pool_after().len(), pools);
        assert_eq!(c.final_length(), fin);
        let mut m = bundle(2, l, 1);
        let mut g = Graph::new();
        let f = g.constant(Tensor::full(&[2, 28, l], 0.1));
        let b = g.constant(Tensor::full(&[2, 42, l], 0.2));
        let h = g.constant(Tensor::full(&[2, 126, l], 0.3));
        assert!(m.discriminator.forward(&mut g, f, b, h, Mode::Train).is_ok());
    }
    let bad = DiscriminatorConfig { base_channels: 2, window_length: 48 };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

fn stacked(g: &mut Graph, out: GeneratorOutput) -> gesture_autograd::Var {
    let a = g.concat_channels(out.face, out.body).unwrap();
    g.concat_channels(a, out.hand).unwrap()
}

#[test]
fn generator_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (report, discarded) = check_smooth_instances(20, 60, |i| {
        let t = [16, 12, 24][i % 3];
        let mut m = bundle(2, 64, 100 + i as u64);
        let x = random(&mut rng, &[2, 28, t]);
        let mut r = check_graph(
            |g, v| {
                let out = m.generator.forward(g, v[0], Mode::Train).unwrap();
                stacked(g, out)
            },
            std::slice::from_ref(&x),
            &mut rng,
        );
        let p = check_parameters(
            &mut m,
            |m| &mut m.generator.store,
            |m, g| {
                let xv = g.constant(x.clone());
                let out = m.generator.forward(g, xv, Mode::Train).unwrap();
                stacked(g, out)
            },
            &mut rng,
        );
        r.worst = r.worst.max(p.worst);
        r.kinks += p.kinks;
        r.checked += p.checked;
        r
    });
    assert!(report.worst < TOL, "worst relative error {} ({discarded} instances discarded)", report.worst);
}

#[test]
fn discriminator_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (report, discarded) = check_smooth_instances(20, 60, |i| {
        let mut m = bundle(2, [16, 32, 64][i % 3], 200 + i as u64);
        let l = m.discriminator.config().window_length;
        let inputs = [random(&mut rng, &[2, 28, l]), random(&mut rng, &[2, 42, l]), random(&mut rng, &[2, 126, l])];
        let mut r =
            check_graph(|g, v| m.discriminator.forward(g, v[0], v[1], v[2], Mode::Train).unwrap(), &inputs, &mut rng);
        let p = check_parameters(
            &mut m,
            |m| &mut m.discriminator.store,
            |m, g| {
                let v: Vec<_> = inputs.iter().map(|t| g.constant(t.clone())).collect();
                m.discriminator.forward(g, v[0], v[1], v[2], Mode::Train).unwrap()
            },
            &mut rng,
        );
        r.worst = r.worst.max(p.worst);
        r.kinks += p.kinks;
        r.checked += p.checked;
        r
    });
    assert!(report.worst < TOL, "worst relative error {} ({discarded} instances discarded)", report.worst);
}

fn probe(m: &mut ModelBundle) -> (Vec<f64>, Vec<f64>) {
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_fn(&[1, 28, 64], |i| (i as f64 * 0.37).sin()));
    let out = m.generator.forward(&mut g, x, Mode::Eval).unwrap();
    let b = g.constant(Tensor::from_fn(&[1, 42, 64], |i| (i as f64 * 0.11).cos()));
    let p = m.discriminator.forward(&mut g, x, b, out.hand, Mode::Eval).unwrap();
    (g.value(out.face).data().to_vec(), g.value(p).data().to_vec())
}

fn warm(m: &mut ModelBundle) {
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_fn(&[2, 28, 64], |i| (i as f64 * 0.05).cos()));
    let out = m.generator.forward(&mut g, x, Mode::Train).unwrap();
    m.discriminator.forward(&mut g, x, out.body, out.hand, Mode::Train).unwrap();
    for p in m.generator.store.params_mut() {
        p.adam_m.iter_mut().for_each(|v| *v = 0.25);
        p.step_count = 3;
    }
    m.iteration = 17;
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.gck");
    let mut m = bundle(4, 64, 9);
    warm(&mut m);
    save_checkpoint(&m, &path).unwrap();
    let mut back = load_checkpoint(&path).unwrap();
    assert_eq!(back.iteration, 17);
    assert_eq!(back.subject_id, "subject");
    assert_eq!(back.generator.store.params(), m.generator.store.params());
    assert_eq!(back.generator.store.batchnorms(), m.generator.store.batchnorms());
    assert_eq!(back.discriminator.store.params(), m.discriminator.store.params());
    assert_eq!(probe(&mut back), probe(&mut m));
    let path2 = dir.path().join("m2.gck");
    save_checkpoint(&back, &path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}

#[test]
fn checkpoint_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.gck");
    let m = bundle(2, 64, 9);
    save_checkpoint(&m, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();

    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

    let mut bad = bytes.clone();
    bad[4] = 9;
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

    std::fs::write(&path, &bytes).unwrap();
    let other = DiscriminatorConfig { base_channels: 2, window_length: 32 };
    let r = load_checkpoint_expecting(&path, &GeneratorConfig { base_channels: 4 }, &other);
    assert!(matches!(r, Err(Error::Checkpoint(_))));
    assert!(load_checkpoint_expecting(&path, m.generator.config(), m.discriminator.config()).is_ok());
    assert!(load_checkpoint(dir.path().join("missing.gck")).is_err());
}
