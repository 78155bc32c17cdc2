//! Token-level Shapley attributions for intensity predictions and their
//! HTML heatmap rendering.
//!
//! The value of a coalition is the model prediction with every token outside
//! it replaced by PAD, so positions are preserved and the empty coalition is
//! the all-PAD baseline.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::models::{ModelBundle, ModelKind};
use crate::preprocess::PAD_ID;
use crate::Rng;

/// Longest input exact enumeration accepts.
pub const EXACT_MAX_TOKENS: usize = 12;
/// Longest input any mode accepts (coalitions are `u64` masks).
pub const MAX_TOKENS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapleyMode {
    Exact,
    /// Mean marginal contribution over `permutations` seeded orderings.
    Sampled { permutations: usize, seed: u64 },
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Shapley values of an `n`-player game given by `value(mask)`, where bit
/// `i` of `mask` marks player `i` as present.
pub fn shapley_values(n: usize, mode: ShapleyMode, mut value: impl FnMut(u64) -> Result<f64>) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_TOKENS {
        return Err(Error::contract(format!("{n} players, expected 1..={MAX_TOKENS}")));
    }
    match mode {
        ShapleyMode::Exact => {
            if n > EXACT_MAX_TOKENS {
                return Err(Error::contract(format!(
                    "exact Shapley enumeration supports at most {EXACT_MAX_TOKENS} tokens, got {n}; use sampled mode"
                )));
            }
            let v = (0..1u64 << n).map(&mut value).collect::<Result<Vec<f64>>>()?;
            let fact = factorials(n);
            let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();
            let mut s = vec![0.0; n];
            for (i, si) in s.iter_mut().enumerate() {
                let bit = 1u64 << i;
                for mask in 0..1u64 << n {
                    if mask & bit == 0 {
                        *si += weight[mask.count_ones() as usize] * (v[(mask | bit) as usize] - v[mask as usize]);
                    }
                }
            }
            Ok(s)
        }
        ShapleyMode::Sampled { permutations, seed } => {
            if permutations == 0 {
                return Err(Error::contract("sampled Shapley needs at least one permutation"));
            }
            let mut memo: HashMap<u64, f64> = HashMap::new();
            let mut eval = |mask: u64| -> Result<f64> {
                if let Some(&v) = memo.get(&mask) {
                    return Ok(v);
                }
                let v = value(mask)?;
                memo.insert(mask, v);
                Ok(v)
            };
            let mut rng = Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..n).collect();
            let mut s = vec![0.0; n];
            for _ in 0..permutations {
                order.shuffle(&mut rng);
                let mut mask = 0u64;
                let mut prev = eval(0)?;
                for &i in &order {
                    mask |= 1 << i;
                    let cur = eval(mask)?;
                    s[i] += cur - prev;
                    prev = cur;
                }
            }
            for v in &mut s {
                *v /= permutations as f64;
            }
            Ok(s)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyResult {
    pub s: Vec<f64>,
    pub prediction: f64,
    pub baseline: f64,
}

/// Shapley values of each token id for a regressor's output.
pub fn shapley_attribute(model: &ModelBundle, ids: &[u32], mode: ShapleyMode) -> Result<ShapleyResult> {
    if model.config.kind != ModelKind::Eipu {
        return Err(Error::contract("attributions are defined for intensity regressors"));
    }
    let limit = MAX_TOKENS.min(model.config.max_seq_len);
    if ids.is_empty() || ids.len() > limit {
        return Err(Error::contract(format!("{} tokens, expected 1..={limit}", ids.len())));
    }
    let mut predictor = model.predictor()?;
    let mut masked = vec![PAD_ID; ids.len()];
    let mut value = |mask: u64| -> Result<f64> {
        for (j, slot) in masked.iter_mut().enumerate() {
            *slot = if mask >> j & 1 == 1 { ids[j] } else { PAD_ID };
        }
        Ok(predictor.forward(&masked)?.ve[0])
    };
    let full = if ids.len() == 64 { u64::MAX } else { (1u64 << ids.len()) - 1 };
    let prediction = value(full)?;
    let baseline = value(0)?;
    let s = shapley_values(ids.len(), mode, &mut value)?;
    Ok(ShapleyResult { s, prediction, baseline })
}

/// `I_i = S_i / max |S|`; all-zero input stays all-zero.
pub fn normalize(s: &[f64]) -> Vec<f64> {
    let m = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return vec![0.0; s.len()];
    }
    s.iter().map(|v| v / m).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    pub id: String,
    pub tokens: Vec<String>,
    pub s: Vec<f64>,
    pub importance: Vec<f64>,
    pub predicted: f64,
    pub baseline: f64,
    pub gold: Option<f64>,
}

impl Attribution {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, result: ShapleyResult, gold: Option<f64>) -> Result<Self> {
        if tokens.len() != result.s.len() {
            return Err(Error::dimension(format!("{} tokens, {} attributions", tokens.len(), result.s.len())));
        }
        Ok(Attribution {
            id: id.into(),
            tokens,
            importance: normalize(&result.s),
            s: result.s,
            predicted: result.prediction,
            baseline: result.baseline,
            gold,
        })
    }
}

/// Tokenizes, encodes and attributes one tweet.
pub fn explain_tokens(
    model: &ModelBundle,
    id: &str,
    tokens: Vec<String>,
    ids: &[u32],
    mode: ShapleyMode,
    gold: Option<f64>,
) -> Result<Attribution> {
    let r = shapley_attribute(model, ids, mode)?;
    Attribution::new(id, tokens, r, gold)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Inline style for one token. Blue raises the prediction, red lowers it.
pub fn token_style(importance: f64) -> Option<String> {
    if importance == 0.0 {
        return None;
    }
    let (r, b) = if importance > 0.0 { (0, 255) } else { (255, 0) };
    Some(format!("background-color: rgba({r}, 0, {b}, {:.3})", importance.abs().min(1.0)))
}

/// One table row per tweet with its tokens shaded by importance, next to
/// gold and predicted intensity.
pub fn render_heatmap(attributions: &[Attribution]) -> Result<String> {
    if attributions.is_empty() {
        return Err(Error::contract("nothing to render"));
    }
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<head>\n");
    h.push_str("<meta charset=\"utf-8\"/>\n<title>Token importance</title>\n<style>\n");
    h.push_str("table { border-collapse: collapse; font-family: sans-serif; }\n");
    h.push_str("td, th { border: 1px solid #ccc; padding: 4px 8px; }\n");
    h.push_str(".tok { padding: 1px 3px; margin: 0 1px; border-radius: 2px; }\n");
    h.push_str("</style>\n</head>\n<body>\n<table>\n");
    h.push_str("<thead><tr><th>id</th><th>tweet</th><th>gold</th><th>predicted</th></tr></thead>\n<tbody>\n");
    for a in attributions {
        let _ = write!(h, "<tr><td>{}</td><td>", escape(&a.id));
        for (k, (tok, &imp)) in a.tokens.iter().zip(&a.importance).enumerate() {
            if k > 0 {
                h.push(' ');
            }
            match token_style(imp) {
                Some(style) => {
                    let _ = write!(h, "<span class=\"tok\" style=\"{style}\">{}</span>", escape(tok));
                }
                None => {
                    let _ = write!(h, "<span class=\"tok\">{}</span>", escape(tok));
                }
            }
        }
        let gold = a.gold.map_or(String::new(), |g| format!("{g:.3}"));
        let _ = writeln!(h, "</td><td>{gold}</td><td>{:.3}</td></tr>", a.predicted);
    }
    h.push_str("</tbody>\n</table>\n</body>\n</html>\n");
    Ok(h)
}

/// CSV with one `id,token,S,I` row per token.
pub fn write_attributions_csv(w: impl Write, attributions: &[Attribution]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::format("attribution csv", e.to_string());
    out.write_record(["id", "token", "S", "I"]).map_err(csv_err)?;
    for a in attributions {
        for ((tok, s), i) in a.tokens.iter().zip(&a.s).zip(&a.importance) {
            out.write_record([a.id.as_str(), tok.as_str(), &s.to_string(), &i.to_string()])
                .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::format("attribution csv", e.to_string()))
}
