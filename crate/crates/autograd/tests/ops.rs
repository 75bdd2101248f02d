mod common;

use common::{random_tensor, rng};
use gesture_autograd::{AutogradError, BatchNormState, Graph, Mode, ParamStore, Tensor};
use proptest::prelude::*;

fn t(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
}

#[test]
fn identity_kernel_reproduces_input() {
    let mut g = Graph::new();
    let x = g.constant(t(&[1, 5], &[0.3, -1.0, 2.0, 4.5, 0.0]));
    let w = g.constant(t(&[1, 1, 3], &[0.0, 1.0, 0.0]));
    let b = g.constant(t(&[1], &[0.0]));
    let y = g.conv1d(x, w, b).unwrap();
    assert_eq!(g.value(y).data(), g.value(x).data());
    assert_eq!(g.shape(y), &[1, 5]);
}

#[test]
fn averaging_kernel_is_a_zero_padded_moving_average() {
    let data = [1.0, 4.0, -2.0, 3.0, 5.0, 0.5];
    let mut g = Graph::new();
    let x = g.constant(t(&[1, 6], &data));
    let w = g.constant(t(&[1, 1, 3], &[1.0 / 3.0; 3]));
    let b = g.constant(t(&[1], &[0.0]));
    let y = g.conv1d(x, w, b).unwrap();
    for (i, v) in g.value(y).data().iter().enumerate() {
        let mut s = 0.0;
        for j in [i as isize - 1, i as isize, i as isize + 1] {
            if j >= 0 && (j as usize) < data.len() {
                s += data[j as usize];
            }
        }
        assert!((v - s / 3.0).abs() < 1e-12);
    }
}

#[test]
fn conv_channel_mismatch_is_a_shape_error() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::zeros(&[1, 2, 4]));
    let w = g.constant(Tensor::zeros(&[1, 3, 3]));
    let b = g.constant(Tensor::zeros(&[1]));
    assert!(matches!(g.conv1d(x, w, b), Err(AutogradError::Shape(_))));
}

#[test]
fn batchnorm_leaves_standardized_channel_alone() {
    let data = [-1.5, -0.5, 0.5, 1.5];
    let var: f64 = data.iter().map(|v| v * v).sum::<f64>() / 4.0;
    let scaled: Vec<f64> = data.iter().map(|v| v / var.sqrt()).collect();
    let mut g = Graph::new();
    let x = g.constant(t(&[1, 1, 4], &scaled));
    let gamma = g.constant(t(&[1], &[1.0]));
    let beta = g.constant(t(&[1], &[0.0]));
    let mut state = BatchNormState::new("bn", 1);
    let y = g.batchnorm1d(x, gamma, beta, &mut state, Mode::Train).unwrap();
    for (a, b) in g.value(y).data().iter().zip(&scaled) {
        assert!((a - b).abs() < 1e-5);
    }
    assert_eq!(state.batches_tracked, 1);
}

#[test]
fn batchnorm_constant_channel_normalizes_to_beta() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::full(&[2, 1, 3], 7.25));
    let gamma = g.constant(t(&[1], &[3.0]));
    let beta = g.constant(t(&[1], &[0.0]));
    let mut state = BatchNormState::new("bn", 1);
    let y = g.batchnorm1d(x, gamma, beta, &mut state, Mode::Train).unwrap();
    assert!(g.value(y).data().iter().all(|v| *v == 0.0));
}

#[test]
fn batchnorm_running_stats_and_eval_guard() {
    let mut state = BatchNormState::new("bn", 1);
    let mut g = Graph::new();
    let x = g.constant(t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]));
    let gamma = g.constant(t(&[1], &[1.0]));
    let beta = g.constant(t(&[1], &[0.0]));
    let err = g.batchnorm1d(x, gamma, beta, &mut state, Mode::Eval).unwrap_err();
    assert!(matches!(err, AutogradError::State(_)));

    g.batchnorm1d(x, gamma, beta, &mut state, Mode::Train).unwrap();
    // momentum 0.1 towards mean 2.5 and unbiased variance 5/3
    assert!((state.running_mean[0] - 0.25).abs() < 1e-12);
    assert!((state.running_var[0] - (0.9 + 0.1 * 5.0 / 3.0)).abs() < 1e-12);
    let y = g.batchnorm1d(x, gamma, beta, &mut state, Mode::Eval).unwrap();
    let expected = (1.0 - 0.25) / (state.running_var[0] + 1e-5).sqrt();
    assert!((g.value(y).data()[0] - expected).abs() < 1e-12);
}

#[test]
fn batchnorm_train_needs_two_values() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::zeros(&[1, 1, 1]));
    let gamma = g.constant(t(&[1], &[1.0]));
    let beta = g.constant(t(&[1], &[0.0]));
    let mut state = BatchNormState::new("bn", 1);
    assert!(g.batchnorm1d(x, gamma, beta, &mut state, Mode::Train).is_err());
}

#[test]
fn maxpool_and_upsample_definitions() {
    let mut g = Graph::new();
    let x = g.input(t(&[1, 4], &[1.0, 3.0, 2.0, 4.0]));
    let p = g.maxpool1d(x).unwrap();
    assert_eq!(g.value(p).data(), &[3.0, 4.0]);
    let c = g.constant(t(&[1, 2], &[1.0, 2.0]));
    let u = g.upsample_nearest(c).unwrap();
    assert_eq!(g.value(u).data(), &[1.0, 1.0, 2.0, 2.0]);
}

#[test]
fn maxpool_tie_routes_gradient_to_earlier_frame() {
    let mut g = Graph::new();
    let x = g.input(t(&[1, 2], &[5.0, 5.0]));
    let p = g.maxpool1d(x).unwrap();
    let s = g.sum(p).unwrap();
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(x).unwrap(), &[1.0, 0.0]);
}

#[test]
fn maxpool_rejects_odd_length() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::zeros(&[2, 5]));
    assert!(matches!(g.maxpool1d(x), Err(AutogradError::Shape(_))));
}

#[test]
fn activation_values() {
    let mut g = Graph::new();
    let x = g.input(t(&[3], &[0.0, -2.0, 0.0]));
    let s = g.sigmoid(x).unwrap();
    assert_eq!(g.value(s).data()[0], 0.5);
    let r = g.relu(x).unwrap();
    assert_eq!(g.value(r).data(), &[0.0, 0.0, 0.0]);
    // relu gradient at exactly zero is zero
    let total = g.sum(r).unwrap();
    let grads = g.backward(total).unwrap();
    assert_eq!(grads.get(x).unwrap(), &[0.0, 0.0, 0.0]);
}

#[test]
fn concat_rejects_temporal_mismatch() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::zeros(&[1, 2, 4]));
    let b = g.constant(Tensor::zeros(&[1, 3, 5]));
    assert!(matches!(g.concat_channels(a, b), Err(AutogradError::Shape(_))));
}

#[test]
fn zero_residual_losses_and_bce_at_half() {
    let mut g = Graph::new();
    let p = g.constant(t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0]));
    let l1 = g.l1_loss(p, p).unwrap();
    let l2 = g.l2_loss(p, p).unwrap();
    assert_eq!(g.item(l1).unwrap(), 0.0);
    assert_eq!(g.item(l2).unwrap(), 0.0);
    for label in [0.0, 1.0] {
        let half = g.constant(t(&[1], &[0.5]));
        let bce = g.bce_loss(half, &[label]).unwrap();
        assert!((g.item(bce).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn losses_match_direct_summation() {
    let mut r = rng(42);
    let (n, c, tt) = (3, 4, 5);
    let pred = random_tensor(&mut r, &[n, c, tt], -2.0, 2.0);
    let target = random_tensor(&mut r, &[n, c, tt], -2.0, 2.0);
    let (pd, yd) = (pred.data(), target.data());
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for b in 0..n {
        for ti in 0..tt {
            let mut sq = 0.0;
            for ch in 0..c {
                let i = (b * c + ch) * tt + ti;
                l1 += (pd[i] - yd[i]).abs();
                sq += (pd[i] - yd[i]).powi(2);
            }
            l2 += sq.sqrt();
        }
    }
    let mut g = Graph::new();
    let (p, y) = (g.constant(pred.clone()), g.constant(target.clone()));
    let a = g.l1_loss(p, y).unwrap();
    let b = g.l2_loss(p, y).unwrap();
    assert!((g.item(a).unwrap() - l1 / n as f64).abs() < 1e-9);
    assert!((g.item(b).unwrap() - l2 / n as f64).abs() < 1e-9);

    let probs = [0.1, 0.8, 0.35, 0.999];
    let labels = [0.0, 1.0, 1.0, 0.0];
    let expected: f64 =
        probs.iter().zip(labels).map(|(p, y): (&f64, f64)| -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())).sum::<f64>()
            / 4.0;
    let pv = g.constant(t(&[4], &probs));
    let bce = g.bce_loss(pv, &labels).unwrap();
    assert!((g.item(bce).unwrap() - expected).abs() < 1e-9);
}

#[test]
fn loss_shape_mismatch_is_rejected() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::zeros(&[1, 2, 3]));
    let b = g.constant(Tensor::zeros(&[1, 3, 2]));
    assert!(matches!(g.l1_loss(a, b), Err(AutogradError::Shape(_))));
    assert!(matches!(g.l2_loss(a, b), Err(AutogradError::Shape(_))));
}

#[test]
fn sum_gradient_is_all_ones() {
    let mut g = Graph::new();
    let x = g.input(t(&[2, 3], &[1.0, -2.0, 3.0, 4.0, 5.0, -6.0]));
    let s = g.sum(x).unwrap();
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(x).unwrap(), &[1.0; 6]);
}

#[test]
fn single_frame_l2_gradient_is_unit_residual() {
    let x0 = [3.0, -4.0, 12.0];
    let norm = 13.0;
    let mut g = Graph::new();
    let x = g.input(t(&[3, 1], &x0));
    let zero = g.constant(Tensor::zeros(&[3, 1]));
    let loss = g.l2_loss(x, zero).unwrap();
    assert_eq!(g.item(loss).unwrap(), norm);
    let grads = g.backward(loss).unwrap();
    for (a, b) in grads.get(x).unwrap().iter().zip(x0) {
        assert!((a - b / norm).abs() < 1e-15);
    }
}

#[test]
fn backward_needs_scalar() {
    let mut g = Graph::new();
    let x = g.input(Tensor::zeros(&[2]));
    let y = g.relu(x).unwrap();
    assert!(matches!(g.backward(y), Err(AutogradError::Contract(_))));
}

#[test]
fn repeated_accumulation_adds_up() {
    let mut store = ParamStore::new();
    let w = store.add_param("w", t(&[2], &[1.0, 2.0]));
    for _ in 0..2 {
        let mut g = Graph::new();
        let v = store.bind(&mut g, w);
        let s = g.sum(v).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(store.accumulate(&grads), 1);
    }
    assert_eq!(store.param(w).grad.as_deref(), Some(&[2.0, 2.0][..]));
    store.zero_grad();
    assert!(store.param(w).grad.is_none());
}

#[test]
fn gradients_route_only_to_owning_store() {
    let mut a = ParamStore::new();
    let mut b = ParamStore::new();
    let pa = a.add_param("a", Tensor::scalar(2.0));
    let pb = b.add_param("b", Tensor::scalar(3.0));
    let mut g = Graph::new();
    let va = a.bind(&mut g, pa);
    let vb = b.bind(&mut g, pb);
    let s = g.add(va, vb).unwrap();
    let d = g.scale(s, 4.0).unwrap();
    let grads = g.backward(d).unwrap();
    assert_eq!(a.accumulate(&grads), 1);
    let mut c = b.clone();
    assert_eq!(c.accumulate(&grads), 0);
    assert_eq!(b.accumulate(&grads), 1);
    assert_eq!(a.param(pa).grad.as_deref(), Some(&[4.0][..]));
    assert_eq!(b.param(pb).grad.as_deref(), Some(&[4.0][..]));
}

#[test]
fn non_finite_results_are_reported() {
    let mut g = Graph::new();
    let x = g.constant(t(&[1], &[f64::MAX]));
    assert!(matches!(g.scale(x, 10.0), Err(AutogradError::NonFinite("scale"))));
}

proptest! {
    #[test]
    fn concat_then_slice_recovers_parts(
        n in 1usize..3, ca in 1usize..4, cb in 1usize..4, tt in 1usize..6, seed in 0u64..1000
    ) {
        let mut r = rng(seed);
        let a = random_tensor(&mut r, &[n, ca, tt], -5.0, 5.0);
        let b = random_tensor(&mut r, &[n, cb, tt], -5.0, 5.0);
        let mut g = Graph::new();
        let (va, vb) = (g.constant(a.clone()), g.constant(b.clone()));
        let cat = g.concat_channels(va, vb).unwrap();
        let a2 = g.slice_channels(cat, 0, ca).unwrap();
        let b2 = g.slice_channels(cat, ca, cb).unwrap();
        prop_assert_eq!(g.value(a2), &a);
        prop_assert_eq!(g.value(b2), &b);
    }

    #[test]
    fn forward_is_deterministic(seed in 0u64..1000) {
        let mut r = rng(seed);
        let x = random_tensor(&mut r, &[2, 3, 8], -1.0, 1.0);
        let w = random_tensor(&mut r, &[4, 3, 3], -1.0, 1.0);
        let b = random_tensor(&mut r, &[4], -1.0, 1.0);
        let run = || {
            let mut g = Graph::new();
            let (xv, wv, bv) = (g.constant(x.clone()), g.constant(w.clone()), g.constant(b.clone()));
            let y = g.conv1d(xv, wv, bv).unwrap();
            let p = g.maxpool1d(y).unwrap();
            g.value(p).clone()
        };
        prop_assert_eq!(run(), run());
    }
}
