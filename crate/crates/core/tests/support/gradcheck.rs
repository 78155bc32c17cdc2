//! Central finite differences against the tape's backward pass.

use affect_core::autodiff::{Graph, Tensor, Var};
use affect_core::layers::{apply_dropout, conv1d_same_graph, dense_sigmoid_graph, EmbeddingTable, LstmVars};
use affect_core::models::{default_labels, ModelBundle, ModelConfig, ModelKind};
use affect_core::Rng;
use rand::seq::index::sample;
use rand::{Rng as _, SeedableRng};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely; central differences
/// cannot resolve them relative to the function value.
pub const FLOOR: f64 = 1e-6;
/// Entries probed per input tensor.
const PROBES: usize = 24;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

pub fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn probes(n: usize, rng: &mut Rng) -> Vec<usize> {
    if n <= PROBES {
        (0..n).collect()
    } else {
        sample(rng, n, PROBES).into_vec()
    }
}

/// Max relative error over probed entries of every input. The output of
/// `f` is reduced to a scalar with fixed random weights.
pub fn check<F>(inputs: &[Tensor], rng: &mut Rng, f: F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars);
    let weights = uniform(g.value(out).shape(), -1.0, 1.0, rng);
    let w = g.constant(weights.clone());
    let prod = g.mul(out, w).unwrap();
    let loss = g.sum(prod).unwrap();
    g.backward(loss).unwrap();
    let grads: Vec<Tensor> = vars.iter().map(|&v| g.grad_or_zeros(v)).collect();

    let eval = |xs: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|t| g.constant(t.clone())).collect();
        let out = f(&mut g, &vars);
        let w = g.constant(weights.clone());
        let prod = g.mul(out, w).unwrap();
        let loss = g.sum(prod).unwrap();
        g.value(loss).item()
    };
    let mut worst: f64 = 0.0;
    let mut xs = inputs.to_vec();
    for i in 0..inputs.len() {
        for j in probes(inputs[i].numel(), rng) {
            let x0 = inputs[i].data()[j];
            xs[i].data_mut()[j] = x0 + H;
            let up = eval(&xs);
            xs[i].data_mut()[j] = x0 - H;
            let down = eval(&xs);
            xs[i].data_mut()[j] = x0;
            worst = worst.max(rel_err(grads[i].data()[j], (up - down) / (2.0 * H)));
        }
    }
    worst
}

/// Same check over the parameters of a whole network and a scalar loss of
/// its output. Frozen tensors are skipped.
pub fn check_model<L>(model: &ModelBundle, ids: &[u32], rng: &mut Rng, loss: L) -> f64
where
    L: Fn(&mut Graph, Var) -> Var,
{
    let mut g = Graph::new();
    let bound = model.bind(&mut g, true).unwrap();
    let (_, ve) = model.forward_graph(&mut g, &bound, ids, None).unwrap();
    let l = loss(&mut g, ve);
    g.backward(l).unwrap();
    let grads: Vec<Tensor> = bound.leaves.iter().map(|&v| g.grad_or_zeros(v)).collect();

    let eval = |m: &ModelBundle| -> f64 {
        let mut g = Graph::new();
        let bound = m.bind(&mut g, false).unwrap();
        let (_, ve) = m.forward_graph(&mut g, &bound, ids, None).unwrap();
        let l = loss(&mut g, ve);
        g.value(l).item()
    };
    let mut worst: f64 = 0.0;
    let mut m = model.clone();
    for (i, grad) in grads.iter().enumerate() {
        if !model.is_trainable(i) {
            continue;
        }
        for j in probes(grad.numel(), rng) {
            let x0 = model.params()[i].data()[j];
            m.params_mut()[i].data_mut()[j] = x0 + H;
            let up = eval(&m);
            m.params_mut()[i].data_mut()[j] = x0 - H;
            let down = eval(&m);
            m.params_mut()[i].data_mut()[j] = x0;
            worst = worst.max(rel_err(grad.data()[j], (up - down) / (2.0 * H)));
        }
    }
    worst
}

pub fn case_rng(op: &str, case: u64) -> Rng {
    let salt = op.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    Rng::seed_from_u64(salt ^ (case << 20))
}

fn dim(rng: &mut Rng) -> usize {
    rng.gen_range(1..=4)
}

fn tiny_model(kind: ModelKind, rng: &mut Rng) -> ModelBundle {
    let cfg = ModelConfig {
        kind,
        embedding_dim: 3,
        lstm_units: 3,
        lstm_dropout: 0.0,
        conv_filters: 3,
        kernel_size: 2,
        post_pool_dropout: 0.0,
        trainable_embeddings: true,
        max_seq_len: 8,
    };
    let table = EmbeddingTable::random(6, 3, 0.5, true, rng);
    let labels = default_labels(kind, Some("anger"));
    let mut m = ModelBundle::new(cfg, table, labels, "h".into(), rng).unwrap();
    for t in m.params_mut() {
        for v in t.data_mut() {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    // the padding row is a constant zero by contract
    for v in &mut m.params_mut()[0].data_mut()[..3] {
        *v = 0.0;
    }
    m
}

fn lstm_inputs(d: usize, u: usize, rng: &mut Rng) -> Vec<Tensor> {
    let mut v = Vec::new();
    for _ in 0..4 {
        v.push(uniform(&[u, d], -1.0, 1.0, rng));
    }
    for _ in 0..4 {
        v.push(uniform(&[u, u], -1.0, 1.0, rng));
    }
    for _ in 0..4 {
        v.push(uniform(&[u], -1.0, 1.0, rng));
    }
    v
}

pub type Case = fn(&mut Rng) -> f64;

/// One entry per differentiable op, layer and loss.
pub fn cases() -> Vec<(&'static str, Case)> {
    vec![
        ("matmul", |r| {
            let (m, k, n) = (dim(r), dim(r), dim(r));
            let xs = [uniform(&[m, k], -1.0, 1.0, r), uniform(&[k, n], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.matmul(v[0], v[1]).unwrap())
        }),
        ("matmul_nt", |r| {
            let (m, k, n) = (dim(r), dim(r), dim(r));
            let xs = [uniform(&[m, k], -1.0, 1.0, r), uniform(&[n, k], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.matmul_nt(v[0], v[1]).unwrap())
        }),
        ("add", |r| {
            let s = [dim(r), dim(r)];
            let xs = [uniform(&s, -1.0, 1.0, r), uniform(&s, -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.add(v[0], v[1]).unwrap())
        }),
        ("sub", |r| {
            let s = [dim(r), dim(r)];
            let xs = [uniform(&s, -1.0, 1.0, r), uniform(&s, -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.sub(v[0], v[1]).unwrap())
        }),
        ("mul", |r| {
            let s = [dim(r), dim(r)];
            let xs = [uniform(&s, -1.0, 1.0, r), uniform(&s, -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.mul(v[0], v[1]).unwrap())
        }),
        ("add_row_bias", |r| {
            let (m, n) = (dim(r), dim(r));
            let xs = [uniform(&[m, n], -1.0, 1.0, r), uniform(&[n], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.add_row_bias(v[0], v[1]).unwrap())
        }),
        ("scale", |r| {
            let c = r.gen_range(-2.0..2.0);
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.scale(v[0], c).unwrap())
        }),
        ("sigmoid", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -3.0, 3.0, r)];
            check(&xs, r, |g, v| g.sigmoid(v[0]).unwrap())
        }),
        ("tanh", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -3.0, 3.0, r)];
            check(&xs, r, |g, v| g.tanh(v[0]).unwrap())
        }),
        ("relu", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.relu(v[0]).unwrap())
        }),
        ("slice_rows", |r| {
            let (m, n) = (dim(r), dim(r));
            let start = r.gen_range(0..m);
            let len = r.gen_range(1..=m - start);
            let xs = [uniform(&[m, n], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.slice_rows(v[0], start, len).unwrap())
        }),
        ("slice_cols", |r| {
            let (m, n) = (dim(r), dim(r));
            let start = r.gen_range(0..n);
            let len = r.gen_range(1..=n - start);
            let xs = [uniform(&[m, n], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.slice_cols(v[0], start, len).unwrap())
        }),
        ("concat_rows", |r| {
            let n = dim(r);
            let xs: Vec<Tensor> = (0..r.gen_range(1..=3)).map(|_| uniform(&[dim(r), n], -1.0, 1.0, r)).collect();
            check(&xs, r, |g, v| g.concat_rows(v).unwrap())
        }),
        ("concat_cols", |r| {
            let m = dim(r);
            let xs: Vec<Tensor> = (0..r.gen_range(1..=3)).map(|_| uniform(&[m, dim(r)], -1.0, 1.0, r)).collect();
            check(&xs, r, |g, v| g.concat_cols(v).unwrap())
        }),
        ("gather_rows", |r| {
            let (rows, c) = (dim(r), dim(r));
            let ids: Vec<usize> = (0..r.gen_range(1..=6)).map(|_| r.gen_range(0..rows)).collect();
            let xs = [uniform(&[rows, c], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.gather_rows(v[0], &ids).unwrap())
        }),
        ("max_over_rows", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.max_over_rows(v[0]).unwrap())
        }),
        ("sum", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.sum(v[0]).unwrap())
        }),
        ("mean", |r| {
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.mean(v[0]).unwrap())
        }),
        ("reshape", |r| {
            let (m, n) = (dim(r), dim(r));
            let xs = [uniform(&[m, n], -1.0, 1.0, r)];
            check(&xs, r, |g, v| g.reshape(v[0], &[n, m]).unwrap())
        }),
        ("bce", |r| {
            let k = r.gen_range(1..=11);
            let y: Vec<f64> = (0..k).map(|_| r.gen_range(0..2) as f64).collect();
            let xs = [uniform(&[1, k], 0.05, 0.95, r)];
            check(&xs, r, |g, v| g.bce(v[0], &y).unwrap())
        }),
        ("mse", |r| {
            let k = dim(r);
            let y: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..1.0)).collect();
            let xs = [uniform(&[1, k], 0.0, 1.0, r)];
            check(&xs, r, |g, v| g.mse(v[0], &y).unwrap())
        }),
        ("lstm_step", |r| {
            let (d, u) = (r.gen_range(1..=3), r.gen_range(1..=3));
            let mut xs = vec![
                uniform(&[1, d], -1.0, 1.0, r),
                uniform(&[1, u], -1.0, 1.0, r),
                uniform(&[1, u], -1.0, 1.0, r),
            ];
            xs.extend(lstm_inputs(d, u, r));
            check(&xs, r, |g, v| {
                let lv = LstmVars::stack(g, &v[3..]).unwrap();
                let xp = lv.project_inputs(g, v[0]).unwrap();
                let (h, c) = lv.step(g, xp, v[1], v[2]).unwrap();
                g.concat_cols(&[h, c]).unwrap()
            })
        }),
        ("lstm_sequence", |r| {
            let (d, u, t) = (r.gen_range(1..=3), r.gen_range(1..=3), dim(r));
            let mut xs = vec![uniform(&[t, d], -1.0, 1.0, r)];
            xs.extend(lstm_inputs(d, u, r));
            check(&xs, r, |g, v| {
                let lv = LstmVars::stack(g, &v[1..]).unwrap();
                lv.sequence(g, v[0], None).unwrap()
            })
        }),
        ("lstm_sequence_dropout", |r| {
            let (d, u, t) = (r.gen_range(1..=3), r.gen_range(1..=3), dim(r));
            let seed = r.gen();
            let mut xs = vec![uniform(&[t, d], -1.0, 1.0, r)];
            xs.extend(lstm_inputs(d, u, r));
            check(&xs, r, move |g, v| {
                let mut mask_rng = Rng::seed_from_u64(seed);
                let lv = LstmVars::stack(g, &v[1..]).unwrap();
                lv.sequence(g, v[0], Some((0.5, &mut mask_rng))).unwrap()
            })
        }),
        ("conv1d_same", |r| {
            let (f, k, d, t) = (dim(r), r.gen_range(1..=3), dim(r), dim(r));
            let xs = [
                uniform(&[f, k, d], -1.0, 1.0, r),
                uniform(&[f], -1.0, 1.0, r),
                uniform(&[t, d], -1.0, 1.0, r),
            ];
            check(&xs, r, |g, v| conv1d_same_graph(g, v[0], v[1], v[2]).unwrap())
        }),
        ("dense_sigmoid", |r| {
            let (o, i) = (dim(r), dim(r));
            let xs = [
                uniform(&[o, i], -1.0, 1.0, r),
                uniform(&[o], -1.0, 1.0, r),
                uniform(&[1, i], -1.0, 1.0, r),
            ];
            check(&xs, r, |g, v| dense_sigmoid_graph(g, v[0], v[1], v[2]).unwrap())
        }),
        ("dropout", |r| {
            let seed = r.gen();
            let rate = r.gen_range(0.0..0.9);
            let xs = [uniform(&[dim(r), dim(r)], -1.0, 1.0, r)];
            check(&xs, r, move |g, v| apply_dropout(g, v[0], rate, &mut Rng::seed_from_u64(seed)).unwrap())
        }),
        ("eccu_multilabel_xent", |r| {
            let m = tiny_model(ModelKind::Eccu, r);
            let ids: Vec<u32> = (0..r.gen_range(1..=5)).map(|_| r.gen_range(0..6)).collect();
            let y: Vec<f64> = (0..11).map(|_| r.gen_range(0..2) as f64).collect();
            check_model(&m, &ids, r, |g, ve| g.bce(ve, &y).unwrap())
        }),
        ("eipu_mse", |r| {
            let m = tiny_model(ModelKind::Eipu, r);
            let ids: Vec<u32> = (0..r.gen_range(1..=5)).map(|_| r.gen_range(0..6)).collect();
            let y = [r.gen_range(0.0..1.0)];
            check_model(&m, &ids, r, |g, ve| g.mse(ve, &y).unwrap())
        }),
    ]
}
