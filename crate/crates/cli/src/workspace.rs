//! Layout of the `--out` directory that stages read from and write to.

use std::path::{Path, PathBuf};

use affect_core::config::Config;
use affect_core::eval::fingerprint;
use affect_core::fusion::FeatureSet;
use affect_core::preprocess::{load_embeddings, Lexicon, LoadedEmbeddings, Tokenizer, Vocabulary};
use anyhow::{bail, Context, Result};

pub struct Workspace {
    pub root: PathBuf,
    pub config: Config,
    pub config_text: String,
    pub seed: u64,
}

impl Workspace {
    pub fn open(root: &Path, config: Option<&Path>, seed: u64) -> Result<Self> {
        let config = match config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Workspace {
            root: root.to_path_buf(),
            config_text: config.to_toml(),
            config,
            seed,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.path("vocab.txt")
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.path("embeddings.txt")
    }

    pub fn lexicon_path(&self) -> PathBuf {
        self.path("lexicon.txt")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.path("features")
    }

    /// The lexicon copied in by `preprocess`, else the built-in one.
    pub fn tokenizer(&self) -> Result<Tokenizer> {
        let p = self.lexicon_path();
        Ok(if p.exists() { Tokenizer::new(Lexicon::load(&p)?) } else { Tokenizer::default() })
    }

    pub fn vocab(&self) -> Result<Vocabulary> {
        let p = self.vocab_path();
        if !p.exists() {
            bail!("{} not found; run `affect preprocess` first", p.display());
        }
        Ok(Vocabulary::load(&p)?)
    }

    pub fn embeddings(&self, vocab: &Vocabulary, trainable: bool) -> Result<LoadedEmbeddings> {
        Ok(load_embeddings(&self.embeddings_path(), vocab, self.seed, trainable)?)
    }

    pub fn fingerprint(&self) -> String {
        let vocab_hash = self.vocab().map(|v| v.content_hash()).unwrap_or_default();
        fingerprint(&self.config_text, &vocab_hash, self.seed)
    }

    pub fn save_features(&self, set: &FeatureSet) -> Result<PathBuf> {
        let dir = self.features_dir();
        std::fs::create_dir_all(&dir)?;
        let p = dir.join(format!("{}.csv", set.source));
        set.save_csv(&p)?;
        Ok(p)
    }

    /// Every registered feature source, by file name order.
    pub fn feature_sources(&self) -> Result<Vec<FeatureSet>> {
        let dir = self.features_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|x| x == "csv"));
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let source = p.file_stem().unwrap().to_string_lossy().into_owned();
                Ok(FeatureSet::load_csv(p, &source)?)
            })
            .collect()
    }
}

/// Source names become file names.
pub fn check_source_name(name: &str) -> Result<()> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        bail!("source name {name:?} must be non-empty and use only letters, digits, '_' or '-'");
    }
    Ok(())
}
