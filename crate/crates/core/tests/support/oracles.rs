//! Plain-loop transcriptions of the layer formulas, written without the tape.

use affect_core::autodiff::Tensor;
use affect_core::layers::{ConvParams, Dense, LstmParams};
use affect_core::models::ModelBundle;

fn sigma(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `W x + U h + b` for one gate.
fn gate(w: &Tensor, u: &Tensor, b: &Tensor, x: &[f64], h: &[f64]) -> Vec<f64> {
    let units = b.numel();
    (0..units)
        .map(|r| {
            let mut z = b.data()[r];
            for (c, xv) in x.iter().enumerate() {
                z += w.get(r, c) * xv;
            }
            for (c, hv) in h.iter().enumerate() {
                z += u.get(r, c) * hv;
            }
            z
        })
        .collect()
}

/// f, i, o = σ(Wx + Uh + b); c = f∘c_prev + i∘tanh(W_c x + U_c h + b_c);
/// h = o∘tanh(c).
pub fn lstm_step(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f: Vec<f64> = gate(&p.w_f, &p.u_f, &p.b_f, x, h).into_iter().map(sigma).collect();
    let i: Vec<f64> = gate(&p.w_i, &p.u_i, &p.b_i, x, h).into_iter().map(sigma).collect();
    let o: Vec<f64> = gate(&p.w_o, &p.u_o, &p.b_o, x, h).into_iter().map(sigma).collect();
    let cand: Vec<f64> = gate(&p.w_c, &p.u_c, &p.b_c, x, h).into_iter().map(f64::tanh).collect();
    let c_t: Vec<f64> = (0..f.len()).map(|k| f[k] * c[k] + i[k] * cand[k]).collect();
    let h_t: Vec<f64> = (0..f.len()).map(|k| o[k] * c_t[k].tanh()).collect();
    (h_t, c_t)
}

pub fn lstm_sequence(p: &LstmParams, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let units = p.b_f.numel();
    let (mut h, mut c) = (vec![0.0; units], vec![0.0; units]);
    xs.iter()
        .map(|x| {
            (h, c) = lstm_step(p, x, &h, &c);
            h.clone()
        })
        .collect()
}

/// Window at t covers rows t..t+k, reading zeros past the end; then ReLU.
pub fn conv_same(p: &ConvParams, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = p.weights.shape();
    let (filters, k, d) = (s[0], s[1], s[2]);
    let w = |f: usize, j: usize, c: usize| p.weights.data()[(f * k + j) * d + c];
    (0..seq.len())
        .map(|t| {
            (0..filters)
                .map(|f| {
                    let mut z = p.bias.data()[f];
                    for j in 0..k {
                        if let Some(row) = seq.get(t + j) {
                            for c in 0..d {
                                z += w(f, j, c) * row[c];
                            }
                        }
                    }
                    z.max(0.0)
                })
                .collect()
        })
        .collect()
}

pub fn max_pool(seq: &[Vec<f64>]) -> Vec<f64> {
    (0..seq[0].len())
        .map(|c| seq.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

pub fn dense_sigmoid(layer: &Dense, x: &[f64]) -> Vec<f64> {
    (0..layer.bias.numel())
        .map(|r| sigma(layer.bias.data()[r] + x.iter().enumerate().map(|(c, v)| layer.weights.get(r, c) * v).sum::<f64>()))
        .collect()
}

/// `(v0, ve)` chained from the oracles above, inference mode.
pub fn model_forward(m: &ModelBundle, ids: &[u32]) -> (Vec<f64>, Vec<f64>) {
    let ids = &ids[..ids.len().min(m.config.max_seq_len)];
    let xs: Vec<Vec<f64>> = ids.iter().map(|&i| m.embedding.row(i as usize).to_vec()).collect();
    let hs = lstm_sequence(&m.lstm, &xs);
    let v0 = max_pool(&conv_same(&m.conv, &hs));
    let ve = dense_sigmoid(&m.dense, &v0);
    (v0, ve)
}
