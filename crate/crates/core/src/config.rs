//! Versioned TOML run configuration. Every field has a default, so an empty
//! file (apart from `version`) reproduces the published hyper-parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::ShapleyMode;
use crate::fusion::GbtParams;
use crate::labels::Emotion;
use crate::models::{ModelConfig, ModelKind, MAX_SEQ_LEN};
use crate::training::{AdamConfig, LossKind, TrainPlan};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default = "NetworkConfig::eccu")]
    pub eccu: NetworkConfig,
    #[serde(default = "NetworkConfig::eipu")]
    pub eipu: NetworkConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub explain: ExplainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub min_count: usize,
    pub max_seq_len: usize,
    pub dev_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_count: 1,
            max_seq_len: MAX_SEQ_LEN,
            dev_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub lstm_units: usize,
    pub conv_filters: usize,
    pub kernel_size: usize,
    /// Drop probability.
    pub dropout: f64,
    pub trainable_embeddings: bool,
    pub epochs: usize,
    /// Per-emotion overrides of `epochs`.
    #[serde(default)]
    pub epochs_by_emotion: BTreeMap<String, usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl NetworkConfig {
    pub fn eccu() -> Self {
        let m = ModelConfig::eccu(1);
        NetworkConfig {
            lstm_units: m.lstm_units,
            conv_filters: m.conv_filters,
            kernel_size: m.kernel_size,
            dropout: m.post_pool_dropout,
            trainable_embeddings: false,
            epochs: 10,
            epochs_by_emotion: BTreeMap::new(),
            batch_size: 8,
            learning_rate: AdamConfig::default().lr,
        }
    }

    pub fn eipu() -> Self {
        let m = ModelConfig::eipu(1);
        NetworkConfig {
            lstm_units: m.lstm_units,
            conv_filters: m.conv_filters,
            kernel_size: m.kernel_size,
            dropout: m.post_pool_dropout,
            trainable_embeddings: false,
            epochs: 15,
            epochs_by_emotion: BTreeMap::from([("anger".to_string(), 40)]),
            batch_size: 8,
            learning_rate: AdamConfig::default().lr,
        }
    }

    pub fn epochs_for(&self, emotion: Option<Emotion>) -> usize {
        emotion
            .and_then(|e| self.epochs_by_emotion.get(e.as_str()).copied())
            .unwrap_or(self.epochs)
    }

    pub fn model_config(&self, kind: ModelKind, embedding_dim: usize, max_seq_len: usize) -> ModelConfig {
        ModelConfig {
            kind,
            embedding_dim,
            lstm_units: self.lstm_units,
            lstm_dropout: self.dropout,
            conv_filters: self.conv_filters,
            kernel_size: self.kernel_size,
            post_pool_dropout: self.dropout,
            trainable_embeddings: self.trainable_embeddings,
            max_seq_len,
        }
    }

    pub fn train_plan(&self, kind: ModelKind, emotion: Option<Emotion>, seed: u64) -> TrainPlan {
        TrainPlan {
            epochs: self.epochs_for(emotion),
            batch_size: self.batch_size,
            loss: LossKind::for_model(kind),
            seed,
            shuffle: true,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionPreset {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub lambda: f64,
    pub min_samples_leaf: usize,
    /// Feature sources in column order.
    pub sources: Vec<String>,
}

impl FusionPreset {
    fn from_params(p: GbtParams, sources: &[&str]) -> Self {
        FusionPreset {
            max_depth: p.max_depth,
            learning_rate: p.learning_rate,
            n_estimators: p.n_estimators,
            lambda: p.lambda,
            min_samples_leaf: p.min_samples_leaf,
            sources: sources.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn params(&self) -> GbtParams {
        GbtParams {
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            n_estimators: self.n_estimators,
            lambda: self.lambda,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub presets: BTreeMap<String, FusionPreset>,
    /// Preset name per emotion; emotions not listed use `default_preset`.
    pub by_emotion: BTreeMap<String, String>,
    pub default_preset: String,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            presets: BTreeMap::from([
                (
                    "c1".to_string(),
                    FusionPreset::from_params(GbtParams::c1(), &["deepmoji", "sentiment_neuron", "eccu", "eipu"]),
                ),
                (
                    "c2".to_string(),
                    FusionPreset::from_params(GbtParams::c2(), &["deepmoji", "sentiment_neuron", "eccu"]),
                ),
            ]),
            by_emotion: BTreeMap::from([("fear".to_string(), "c2".to_string())]),
            default_preset: "c1".to_string(),
        }
    }
}

impl FusionConfig {
    pub fn preset_for(&self, emotion: Emotion) -> Result<&FusionPreset> {
        let name = self.by_emotion.get(emotion.as_str()).unwrap_or(&self.default_preset);
        self.presets
            .get(name)
            .ok_or_else(|| Error::contract(format!("fusion preset {name:?} is not defined")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    /// Inputs up to this many tokens are enumerated exactly.
    pub exact_max_tokens: usize,
    pub permutations: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            exact_max_tokens: crate::explain::EXACT_MAX_TOKENS,
            permutations: 2000,
        }
    }
}

impl ExplainConfig {
    pub fn mode_for(&self, n_tokens: usize, seed: u64) -> ShapleyMode {
        if n_tokens <= self.exact_max_tokens {
            ShapleyMode::Exact
        } else {
            ShapleyMode::Sampled {
                permutations: self.permutations,
                seed,
            }
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            version: CONFIG_VERSION,
            preprocess: PreprocessConfig::default(),
            eccu: NetworkConfig::eccu(),
            eipu: NetworkConfig::eipu(),
            fusion: FusionConfig::default(),
            explain: ExplainConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::format(name, e.to_string()))?;
        c.validate().map_err(|e| Error::format(name, e.to_string()))?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::contract(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.preprocess.max_seq_len == 0 || !(0.0..1.0).contains(&self.preprocess.dev_fraction) {
            return Err(Error::contract("max_seq_len must be positive and dev_fraction in [0, 1)"));
        }
        for (name, n) in [("eccu", &self.eccu), ("eipu", &self.eipu)] {
            n.model_config(ModelKind::Eipu, 1, 1)
                .validate()
                .map_err(|e| Error::contract(format!("[{name}] {e}")))?;
            if n.epochs == 0 || n.batch_size == 0 || n.epochs_by_emotion.values().any(|&e| e == 0) {
                return Err(Error::contract(format!("[{name}] epochs and batch_size must be positive")));
            }
            for k in n.epochs_by_emotion.keys() {
                k.parse::<Emotion>()?;
            }
        }
        for p in self.fusion.presets.values() {
            p.params().validate()?;
        }
        for (e, preset) in &self.fusion.by_emotion {
            e.parse::<Emotion>()?;
            if !self.fusion.presets.contains_key(preset) {
                return Err(Error::contract(format!("fusion preset {preset:?} for {e} is not defined")));
            }
        }
        for e in Emotion::ALL {
            self.fusion.preset_for(e)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gives_published_settings() {
        let c = Config::parse("version = 1\n", "t").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.eipu.epochs_for(Some(Emotion::Anger)), 40);
        assert_eq!(c.eipu.epochs_for(Some(Emotion::Sadness)), 15);
        assert_eq!(c.eccu.epochs_for(None), 10);
        assert_eq!(c.fusion.preset_for(Emotion::Fear).unwrap().params(), GbtParams::c2());
        assert_eq!(c.fusion.preset_for(Emotion::Joy).unwrap().params(), GbtParams::c1());
        assert!(!c.fusion.preset_for(Emotion::Fear).unwrap().sources.contains(&"eipu".to_string()));
    }

    #[test]
    fn round_trip_and_rejections() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml(), "t").unwrap(), c);
        assert!(Config::parse("version = 2\n", "t").is_err());
        assert!(Config::parse("", "t").is_err());
        assert!(Config::parse("version = 1\nbogus = 3\n", "t").is_err());
        assert!(Config::parse("version = 1\n[fusion.by_emotion]\nanger = \"c9\"\n", "t").is_err());
    }
}
