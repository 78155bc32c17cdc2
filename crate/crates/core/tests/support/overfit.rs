//! Sixteen-example memorization runs on tiny networks.

use affect_core::labels::EC_LABELS;
use affect_core::layers::EmbeddingTable;
use affect_core::models::{default_labels, ModelBundle, ModelConfig, ModelKind};
use affect_core::training::{train, AdamConfig, Example, LossKind, Target, TrainOutcome, TrainPlan};
use affect_core::Rng;
use rand::{Rng as _, SeedableRng};

pub const EPOCHS: usize = 200;

pub fn tiny(kind: ModelKind, seed: u64) -> ModelBundle {
    let mut rng = Rng::seed_from_u64(seed);
    let mut cfg = match kind {
        ModelKind::Eccu => ModelConfig::eccu(8),
        ModelKind::Eipu => ModelConfig::eipu(8),
    };
    cfg.lstm_units = 16;
    cfg.conv_filters = 16;
    cfg.lstm_dropout = 0.0;
    cfg.post_pool_dropout = 0.0;
    let emb = EmbeddingTable::random(24, 8, 0.5, false, &mut rng);
    ModelBundle::new(cfg, emb, default_labels(kind, Some("joy")), "h".into(), &mut rng).unwrap()
}

pub fn sequences(rng: &mut Rng) -> Vec<Vec<u32>> {
    (0..16)
        .map(|_| {
            let n = rng.gen_range(3..9);
            (0..n).map(|_| rng.gen_range(2..24)).collect()
        })
        .collect()
}

pub fn plan(loss: LossKind, epochs: usize) -> TrainPlan {
    TrainPlan {
        epochs,
        batch_size: 8,
        loss,
        seed: 5,
        shuffle: true,
        adam: AdamConfig { lr: 0.01, ..AdamConfig::default() },
    }
}

pub fn label_data(seed: u64) -> Vec<Example> {
    let mut rng = Rng::seed_from_u64(seed);
    sequences(&mut rng)
        .into_iter()
        .map(|ids| Example {
            ids,
            target: Target::Labels((0..EC_LABELS.len()).map(|_| rng.gen_bool(0.3) as u8 as f64).collect()),
        })
        .collect()
}

pub fn intensity_data(seed: u64, lo: f64, hi: f64) -> Vec<Example> {
    let mut rng = Rng::seed_from_u64(seed);
    sequences(&mut rng)
        .into_iter()
        .map(|ids| Example { ids, target: Target::Intensity(rng.gen_range(lo..hi)) })
        .collect()
}

/// Examples whose every label is on the right side of 0.5.
pub fn exact_matches(out: &TrainOutcome, data: &[Example]) -> usize {
    let mut p = out.model.predictor().unwrap();
    data.iter()
        .filter(|ex| {
            let ve = p.forward(&ex.ids).unwrap().ve;
            let Target::Labels(y) = &ex.target else { unreachable!() };
            ve.iter().zip(y).all(|(&v, &t)| (v >= 0.5) == (t == 1.0))
        })
        .count()
}

pub fn training_mse(out: &TrainOutcome, data: &[Example]) -> f64 {
    let mut p = out.model.predictor().unwrap();
    data.iter()
        .map(|ex| {
            let Target::Intensity(y) = ex.target else { unreachable!() };
            (p.forward(&ex.ids).unwrap().ve[0] - y).powi(2)
        })
        .sum::<f64>()
        / data.len() as f64
}

pub fn classifier_run() -> (TrainOutcome, Vec<Example>) {
    let data = label_data(1);
    (train(&tiny(ModelKind::Eccu, 2), &data, &plan(LossKind::MultiLabelXent, EPOCHS)).unwrap(), data)
}

pub fn regressor_run() -> (TrainOutcome, Vec<Example>) {
    let data = intensity_data(3, 0.05, 0.95);
    (train(&tiny(ModelKind::Eipu, 4), &data, &plan(LossKind::Mse, EPOCHS)).unwrap(), data)
}
