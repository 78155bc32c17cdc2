use crate::error::{Error, Result};

/// Multi-label decision threshold on sigmoid outputs.
pub const THRESHOLD: f64 = 0.5;

/// Sample Pearson correlation.
pub fn pearson(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::contract(format!("{} predictions for {} gold values", pred.len(), gold.len())));
    }
    if pred.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mg = gold.iter().sum::<f64>() / n;
    let (mut cov, mut vp, mut vg) = (0.0, 0.0, 0.0);
    for (p, g) in pred.iter().zip(gold) {
        let (dp, dg) = (p - mp, g - mg);
        cov += dp * dg;
        vp += dp * dp;
        vg += dg * dg;
    }
    if vp == 0.0 || vg == 0.0 {
        return Err(Error::UndefinedCorrelation(
            if vp == 0.0 { "predictions are constant" } else { "gold values are constant" }.into(),
        ));
    }
    Ok((cov / (vp * vg).sqrt()).clamp(-1.0, 1.0))
}

pub fn binarize(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| (p >= THRESHOLD) as u8).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiLabelScores {
    pub jaccard: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Jaccard accuracy (both-empty rows score 1), micro and macro F1 (an
/// undefined F1 counts as 0).
pub fn multilabel_metrics(pred: &[Vec<u8>], gold: &[Vec<u8>]) -> Result<MultiLabelScores> {
    if pred.len() != gold.len() || pred.is_empty() {
        return Err(Error::contract(format!("{} predictions for {} gold rows", pred.len(), gold.len())));
    }
    let k = gold[0].len();
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fn_ = vec![0usize; k];
    let mut jaccard = 0.0;
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != k || g.len() != k {
            return Err(Error::contract(format!("label rows must all have {k} entries")));
        }
        let (mut inter, mut union) = (0, 0);
        for j in 0..k {
            let (a, b) = (p[j] != 0, g[j] != 0);
            inter += (a && b) as usize;
            union += (a || b) as usize;
            tp[j] += (a && b) as usize;
            fp[j] += (a && !b) as usize;
            fn_[j] += (!a && b) as usize;
        }
        jaccard += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_f1 = (0..k).map(|j| f1(tp[j], fp[j], fn_[j])).sum::<f64>() / k as f64;
    Ok(MultiLabelScores {
        jaccard: jaccard / pred.len() as f64,
        micro_f1,
        macro_f1,
    })
}
