//! End-to-end stages shared by the command-line tool and the tests: encode
//! tweets, train both networks, tap their features, and fit the fusion
//! regressor on top.

use rand::SeedableRng;

use crate::config::{Config, FusionPreset};
use crate::error::{Error, Result};
use crate::eval::{Annotation, TweetRecord};
use crate::fusion::{fuse, FeatureSet, GbtModel, FusionManifest};
use crate::labels::Emotion;
use crate::layers::EmbeddingTable;
use crate::models::{default_labels, ModelBundle, ModelKind};
use crate::preprocess::{Tokenizer, Vocabulary};
use crate::training::{train, Example, Target, TrainOutcome};
use crate::Rng;

/// Feature source names produced by the two networks.
pub const ECCU_SOURCE: &str = "eccu";
pub const EIPU_SOURCE: &str = "eipu";

#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    pub id: String,
    pub tokens: Vec<String>,
    pub ids: Vec<u32>,
}

pub fn tokenize_all(records: &[TweetRecord], tokenizer: &Tokenizer) -> Result<Vec<Vec<String>>> {
    records
        .iter()
        .map(|r| {
            tokenizer
                .tokenize(&r.text)
                .map_err(|e| Error::contract(format!("tweet {}: {e}", r.id)))
        })
        .collect()
}

/// Vocabulary over the given training tweets only.
pub fn build_vocab(train: &[&[TweetRecord]], tokenizer: &Tokenizer, min_count: usize) -> Result<Vocabulary> {
    let mut docs = Vec::new();
    for set in train {
        docs.extend(tokenize_all(set, tokenizer)?);
    }
    Ok(Vocabulary::build(docs.iter(), min_count))
}

pub fn encode(records: &[TweetRecord], tokenizer: &Tokenizer, vocab: &Vocabulary) -> Result<Vec<Encoded>> {
    let docs = tokenize_all(records, tokenizer)?;
    Ok(records
        .iter()
        .zip(docs)
        .map(|(r, tokens)| encoded(r.id.clone(), tokens, vocab))
        .collect())
}

/// Like [`encode`] for bare `(id, text)` pairs.
pub fn encode_texts(items: &[(String, String)], tokenizer: &Tokenizer, vocab: &Vocabulary) -> Result<Vec<Encoded>> {
    items
        .iter()
        .map(|(id, text)| {
            let tokens = tokenizer
                .tokenize(text)
                .map_err(|e| Error::contract(format!("tweet {id}: {e}")))?;
            Ok(encoded(id.clone(), tokens, vocab))
        })
        .collect()
}

fn encoded(id: String, tokens: Vec<String>, vocab: &Vocabulary) -> Encoded {
    let seq = vocab.encode(tokens);
    Encoded {
        id,
        tokens: seq.tokens,
        ids: seq.ids,
    }
}

pub fn examples(records: &[TweetRecord], encoded: &[Encoded]) -> Vec<Example> {
    records
        .iter()
        .zip(encoded)
        .map(|(r, e)| Example {
            ids: e.ids.clone(),
            target: match &r.annotation {
                Annotation::Labels(l) => Target::Labels(l.iter().map(|&v| v as f64).collect()),
                Annotation::Intensity { value, .. } => Target::Intensity(*value),
            },
        })
        .collect()
}

/// Builds a fresh network from the configuration and trains it.
pub fn train_network(
    config: &Config,
    kind: ModelKind,
    emotion: Option<Emotion>,
    table: &EmbeddingTable,
    vocab: &Vocabulary,
    records: &[TweetRecord],
    tokenizer: &Tokenizer,
    seed: u64,
) -> Result<TrainOutcome> {
    let net = match kind {
        ModelKind::Eccu => &config.eccu,
        ModelKind::Eipu => &config.eipu,
    };
    if kind == ModelKind::Eipu && emotion.is_none() {
        return Err(Error::contract("an intensity model needs an emotion"));
    }
    for r in records {
        let ok = match (&r.annotation, kind) {
            (Annotation::Labels(_), ModelKind::Eccu) => true,
            (Annotation::Intensity { emotion: e, .. }, ModelKind::Eipu) => Some(*e) == emotion,
            _ => false,
        };
        if !ok {
            return Err(Error::contract(format!("tweet {} does not carry a {kind:?} target", r.id)));
        }
    }
    let mcfg = net.model_config(kind, table.dim(), config.preprocess.max_seq_len);
    let mut rng = Rng::seed_from_u64(seed);
    let labels = default_labels(kind, emotion.map(Emotion::as_str));
    let model = ModelBundle::new(mcfg, table.clone(), labels, vocab.content_hash(), &mut rng)?;
    let enc = encode(records, tokenizer, vocab)?;
    let data = examples(records, &enc);
    let plan = net.train_plan(kind, emotion, seed);
    log::info!("training {kind:?} on {} tweets for {} epochs", data.len(), plan.epochs);
    train(&model, &data, &plan)
}

/// `[v0 ‖ ve]` of every tweet, registered under `source`.
pub fn extract_features(model: &ModelBundle, encoded: &[Encoded], source: &str) -> Result<FeatureSet> {
    let mut set = FeatureSet::new(source, model.config.feature_dim());
    let mut p = model.predictor()?;
    for e in encoded {
        set.push(e.id.clone(), p.forward(&e.ids)?.features())?;
    }
    Ok(set)
}

/// Network predictions: one value per output neuron.
pub fn predict_network(model: &ModelBundle, encoded: &[Encoded]) -> Result<Vec<Vec<f64>>> {
    let mut p = model.predictor()?;
    encoded.iter().map(|e| Ok(p.forward(&e.ids)?.ve)).collect()
}

/// Sources of `preset` that are available, in preset order. Available
/// sources the preset leaves out are reported and skipped.
pub fn select_sources<'a>(preset: &FusionPreset, available: &[&'a FeatureSet]) -> Result<Vec<&'a FeatureSet>> {
    let mut out = Vec::new();
    for name in &preset.sources {
        match available.iter().find(|s| &s.source == name) {
            Some(s) => out.push(*s),
            None => log::warn!("feature source {name} not supplied; fusing without it"),
        }
    }
    for s in available {
        if !preset.sources.contains(&s.source) {
            log::warn!("feature source {} is not part of this preset; ignored", s.source);
        }
    }
    if out.is_empty() {
        return Err(Error::contract("none of the preset's feature sources were supplied"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionModel {
    pub gbt: GbtModel,
    pub manifest: FusionManifest,
}

/// Fits the boosted-tree regressor on fused features of `records`.
pub fn train_fusion(preset: &FusionPreset, available: &[&FeatureSet], records: &[TweetRecord]) -> Result<FusionModel> {
    let sources = select_sources(preset, available)?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let y = records
        .iter()
        .map(|r| r.intensity().ok_or_else(|| Error::contract(format!("tweet {} has no intensity", r.id))))
        .collect::<Result<Vec<f64>>>()?;
    let fused = fuse(&sources, &ids)?;
    let gbt = GbtModel::train(&fused.rows, &y, &preset.params())?;
    Ok(FusionModel {
        gbt,
        manifest: fused.manifest,
    })
}

/// Predicts `ids` with a fusion model; the sources must match its manifest.
pub fn predict_fusion(model: &FusionModel, sources: &[&FeatureSet], ids: &[String]) -> Result<Vec<f64>> {
    let layout = FusionManifest {
        groups: model.manifest.groups.clone(),
        ids: ids.to_vec(),
    };
    layout.assemble(sources)?.iter().map(|row| model.gbt.predict(row)).collect()
}
