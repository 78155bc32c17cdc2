mod support;

use affect_core::autodiff::{Graph, Tensor};
use affect_core::layers::{
    apply_dropout, conv1d_same, dense_sigmoid, lstm_sequence, lstm_step, max_pool_over_time, ConvParams, Dense,
    LstmParams,
};
use affect_core::Rng;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use support::oracles;

fn vecs(n: usize, d: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect()
}

fn lstm(d: usize, u: usize, rng: &mut Rng) -> LstmParams {
    let mut p = LstmParams::init(d, u, rng);
    for b in p.tensors_mut().into_iter().skip(8) {
        for v in b.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    p
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn two_unit_cell_matches_direct_formula() {
    let mut rng = Rng::seed_from_u64(17);
    let p = lstm(3, 2, &mut rng);
    let v = vecs(3, 3, &mut rng);
    let (x, h, c) = (v[0].clone(), v[1][..2].to_vec(), v[2][..2].to_vec());
    let (h1, c1) = lstm_step(&p, &x, &h, &c).unwrap();
    let (h2, c2) = oracles::lstm_step(&p, &x, &h, &c);
    assert!(close(&h1, &h2, 1e-12) && close(&c1, &c2, 1e-12));
}

#[test]
fn three_steps_chain() {
    let mut rng = Rng::seed_from_u64(4);
    let p = lstm(4, 3, &mut rng);
    let xs = vecs(3, 4, &mut rng);
    let seq = lstm_sequence(&p, &xs, 0.0, false, &mut rng).unwrap();
    let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
    for (t, x) in xs.iter().enumerate() {
        (h, c) = lstm_step(&p, x, &h, &c).unwrap();
        assert_eq!(seq.row(t), &h[..]);
    }
}

#[test]
fn seeded_conv_matches_sliding_window() {
    let mut rng = Rng::seed_from_u64(9);
    let p = ConvParams::init(5, 2, 3, &mut rng);
    let seq = vecs(6, 3, &mut rng);
    let out = conv1d_same(&p, &Tensor::from_rows(&seq).unwrap()).unwrap();
    for (t, row) in oracles::conv_same(&p, &seq).iter().enumerate() {
        assert!(close(out.row(t), row, 1e-12));
    }
}

#[test]
fn seeded_dense_matches_formula() {
    let mut rng = Rng::seed_from_u64(10);
    let mut layer = Dense::init(4, 6, &mut rng);
    for b in layer.bias.data_mut() {
        *b = rng.gen_range(-1.0..1.0);
    }
    let x = &vecs(1, 6, &mut rng)[0];
    assert!(close(&dense_sigmoid(&layer, x).unwrap(), &oracles::dense_sigmoid(&layer, x), 1e-12));
}

#[test]
fn inverted_dropout_keeps_expectation() {
    let (n, rate) = (20_000, 0.5);
    let mut rng = Rng::seed_from_u64(3);
    let mut g = Graph::new();
    let x = g.constant(Tensor::filled(&[1, n], 0.7));
    let d = apply_dropout(&mut g, x, rate, &mut rng).unwrap();
    let mean = g.value(d).data().iter().sum::<f64>() / n as f64;
    let sigma = 0.7 * (rate / (1.0 - rate)).sqrt() / (n as f64).sqrt();
    assert!((mean - 0.7).abs() <= 3.0 * sigma, "{mean}");
}

proptest! {
    #[test]
    fn lstm_hidden_state_is_bounded(seed in any::<u64>(), d in 1usize..5, u in 1usize..5, t in 1usize..6) {
        let mut rng = Rng::seed_from_u64(seed);
        let p = lstm(d, u, &mut rng);
        let xs: Vec<Vec<f64>> = (0..t).map(|_| (0..d).map(|_| rng.gen_range(-50.0..50.0)).collect()).collect();
        let seq = lstm_sequence(&p, &xs, 0.0, false, &mut rng).unwrap();
        prop_assert!(seq.data().iter().all(|h| h.abs() <= 1.0));
        prop_assert!(close(seq.data(), &oracles::lstm_sequence(&p, &xs).concat(), 1e-12));
    }

    #[test]
    fn conv_preserves_length(seed in any::<u64>(), t in 1usize..12, k in 1usize..4, d in 1usize..4) {
        let mut rng = Rng::seed_from_u64(seed);
        let p = ConvParams::init(3, k, d, &mut rng);
        let seq = vecs(t, d, &mut rng);
        let out = conv1d_same(&p, &Tensor::from_rows(&seq).unwrap()).unwrap();
        prop_assert_eq!(out.shape(), &[t, 3]);
        prop_assert!(close(out.data(), &oracles::conv_same(&p, &seq).concat(), 1e-12));
    }

    #[test]
    fn max_pool_conserves_gradient(seed in any::<u64>(), t in 1usize..6, f in 1usize..6, ties in any::<bool>()) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut rows = vecs(t, f, &mut rng);
        if ties {
            let first = rows[0].clone();
            rows.iter_mut().for_each(|r| *r = first.clone());
        }
        let x = Tensor::from_rows(&rows).unwrap();
        prop_assert_eq!(max_pool_over_time(&x).unwrap(), oracles::max_pool(&rows));
        let mut g = Graph::new();
        let xv = g.param(x);
        let m = g.max_over_rows(xv).unwrap();
        let w: Vec<f64> = (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wv = g.constant(Tensor::matrix(1, f, w.clone()).unwrap());
        let prod = g.mul(m, wv).unwrap();
        let l = g.sum(prod).unwrap();
        g.backward(l).unwrap();
        let grad = g.grad(xv).unwrap();
        for c in 0..f {
            let col: Vec<f64> = (0..t).map(|r| grad.get(r, c)).collect();
            prop_assert_eq!(col.iter().sum::<f64>(), w[c]);
            prop_assert_eq!(col.iter().filter(|&&v| v != 0.0).count(), (w[c] != 0.0) as usize);
            if ties {
                prop_assert_eq!(col[0], w[c]);
            }
        }
    }
}
